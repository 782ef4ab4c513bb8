//! Explicit advection, diffusion and recombination of point-defect
//! concentrations and of the contortion tensor.
//!
//! Space is discretised by node-centred finite volumes: every node owns a
//! cell of side h, halved at the grid boundary. Fluxes live on the faces
//! between neighbouring nodes and are added to one cell and removed from the
//! other, so the divergence terms conserve `Σ V_n u_n` to rounding. Time is
//! forward Euler.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{arg, Error, Result};
use crate::grid::{divergence_rows, partial, Axis, Grid2D, TensorField};
use crate::tensor::Mat3;

/// Treatment of the outer boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    /// No flux crosses the outer faces.
    #[default]
    ZeroFlux,
    /// Boundary nodes keep their current values.
    Dirichlet,
}

/// Transport coefficients of one point-defect species.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeciesParams {
    /// `D_K`; only the in-plane block acts.
    pub diffusivity: Mat3,
    /// `D̃_K`, multiplying `C_K ∇T`.
    pub thermodiffusivity: Mat3,
    pub boundary: Boundary,
}

impl SpeciesParams {
    pub fn isotropic(d: f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = d;
        }
        Self {
            diffusivity: m,
            thermodiffusivity: [[0.0; 3]; 3],
            boundary: Boundary::ZeroFlux,
        }
    }
}

impl Default for SpeciesParams {
    fn default() -> Self {
        Self::isotropic(0.0)
    }
}

/// Everything one explicit step needs.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Convecting velocity of `D/Dt = ∂_t + v·∇` (rank 1); zero when absent.
    pub velocity: Option<TensorField>,
    /// Temperature field (scalar); uniform when absent.
    pub temperature: Option<TensorField>,
    pub vacancy: SpeciesParams,
    pub interstitial: SpeciesParams,
    /// Recombination rate in `P = k C_I C_V`.
    pub recombination: f64,
    /// `D` acting on the 9 components of `κ` (row = output component).
    pub kappa_diffusivity: [[f64; 9]; 9],
    /// `D̃` acting on `κ ∇T`.
    pub kappa_thermodiffusivity: [[f64; 9]; 9],
    pub kappa_boundary: Boundary,
}

/// Fraction of the explicit diffusion limit `h²/λ` allowed for `dt`.
pub const DIFFUSION_CFL: f64 = 0.2;

impl EvolutionConfig {
    /// No transport, no recombination.
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            velocity: None,
            temperature: None,
            vacancy: SpeciesParams::default(),
            interstitial: SpeciesParams::default(),
            recombination: 0.0,
            kappa_diffusivity: [[0.0; 9]; 9],
            kappa_thermodiffusivity: [[0.0; 9]; 9],
            kappa_boundary: Boundary::ZeroFlux,
        }
    }

    /// `D·𝟙` on every component of `κ`.
    pub fn isotropic_kappa_diffusivity(d: f64) -> [[f64; 9]; 9] {
        let mut m = [[0.0; 9]; 9];
        for (c, row) in m.iter_mut().enumerate() {
            row[c] = d;
        }
        m
    }

    /// Number of steps of size `dt` covering `t_end`.
    pub fn step_count(&self) -> usize {
        libm::round(self.t_end / self.dt).max(0.0) as usize
    }

    fn check_common(&self, grid: &Grid2D) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(arg("dt must be positive"));
        }
        if !(self.t_end >= 0.0) {
            return Err(arg("t_end must be non-negative"));
        }
        if let Some(v) = &self.velocity {
            v.require_rank(1, "velocity")?;
            if v.grid() != grid {
                return Err(arg("velocity lives on a different grid"));
            }
        }
        if let Some(t) = &self.temperature {
            t.require_rank(0, "temperature")?;
            if t.grid() != grid {
                return Err(arg("temperature lives on a different grid"));
            }
        }
        Ok(())
    }

    fn check_dt(&self, grid: &Grid2D, lambda: f64, drift: f64) -> Result<()> {
        let h = grid.spacing();
        let mut limit = f64::INFINITY;
        if lambda > 0.0 {
            limit = DIFFUSION_CFL * h * h / lambda;
        }
        let speed = self.velocity.as_ref().map_or(0.0, |v| v.max_abs()) + drift;
        if speed > 0.0 {
            limit = limit.min(h / speed);
        }
        if self.dt > limit {
            return Err(Error::Stability { dt: self.dt, limit });
        }
        Ok(())
    }

    fn max_grad_t(&self) -> f64 {
        self.temperature.as_ref().map_or(0.0, |t| {
            let (gx, gy) = (partial(t, Axis::X), partial(t, Axis::Y));
            gx.max_abs() + gy.max_abs()
        })
    }
}

fn spd2_max_eigen(m: &Mat3) -> f64 {
    let a = m[0][0];
    let d = m[1][1];
    let b = 0.5 * (m[0][1] + m[1][0]);
    0.5 * (a + d) + libm::sqrt(0.25 * (a - d) * (a - d) + b * b)
}

fn gershgorin(m: &[[f64; 9]; 9]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn mat2_abs_max(m: &Mat3) -> f64 {
    [m[0][0], m[0][1], m[1][0], m[1][1]].iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Node-centred cell area.
pub fn cell_volume(grid: &Grid2D, i: usize, j: usize) -> f64 {
    let h = grid.spacing();
    let fx = if i == 0 || i + 1 == grid.nx() { 0.5 } else { 1.0 };
    let fy = if j == 0 || j + 1 == grid.ny() { 0.5 } else { 1.0 };
    h * h * fx * fy
}

/// `Σ V_n u_n` for a scalar field.
pub fn total_mass(c: &TensorField) -> f64 {
    let g = c.grid();
    (0..g.node_count())
        .map(|n| {
            let (i, j) = g.ij(n);
            cell_volume(g, i, j) * c.node(n)[0]
        })
        .sum()
}

/// Transverse first difference along `axis` at node (i, j), one-sided at the edge.
fn transverse(u: &[f64], nc: usize, c: usize, grid: &Grid2D, i: usize, j: usize, axis: Axis) -> f64 {
    let h = grid.spacing();
    let (len, pos) = match axis {
        Axis::X => (grid.nx(), i),
        Axis::Y => (grid.ny(), j),
    };
    let at = |p: usize| -> f64 {
        let n = match axis {
            Axis::X => grid.index(p, j),
            Axis::Y => grid.index(i, p),
        };
        u[n * nc + c]
    };
    if pos == 0 {
        (at(1) - at(0)) / h
    } else if pos + 1 == len {
        (at(pos) - at(pos - 1)) / h
    } else {
        (at(pos + 1) - at(pos - 1)) / (2.0 * h)
    }
}

/// Per-node rate `(1/V) Σ_faces F·n L` of `∇·(D∇u + D̃ u ∇T)`.
///
/// `diff(c, d)` and `thermo(c, d)` give the in-plane 2×2 coefficient that
/// couples component `d` into the flux of component `c`. The drift term uses
/// upwind face values.
fn flux_rate(
    u: &TensorField,
    temp: Option<&TensorField>,
    diff: &dyn Fn(usize, usize) -> [[f64; 2]; 2],
    thermo: &dyn Fn(usize, usize) -> [[f64; 2]; 2],
) -> Vec<f64> {
    let grid = *u.grid();
    let nc = u.ncomp();
    let h = grid.spacing();
    let data = u.data();
    let tdata = temp.map(|t| t.data());
    let mut rate = vec![0.0; data.len()];
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut coef = vec![[[0.0; 2]; 2]; nc * nc];
    let mut tcoef = vec![[[0.0; 2]; 2]; nc * nc];
    for c in 0..nc {
        for d in 0..nc {
            coef[c * nc + d] = diff(c, d);
            tcoef[c * nc + d] = thermo(c, d);
        }
    }
    let has_thermo = tdata.is_some() && tcoef.iter().any(|m| m.iter().flatten().any(|v| *v != 0.0));
    for axis in [Axis::X, Axis::Y] {
        let (a, t) = match axis {
            Axis::X => (0, 1),
            Axis::Y => (1, 0),
        };
        let other = match axis {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        };
        let (ni, nj) = match axis {
            Axis::X => (nx - 1, ny),
            Axis::Y => (nx, ny - 1),
        };
        for j in 0..nj {
            for i in 0..ni {
                let n0 = grid.index(i, j);
                let (i1, j1) = match axis {
                    Axis::X => (i + 1, j),
                    Axis::Y => (i, j + 1),
                };
                let n1 = grid.index(i1, j1);
                let across = match axis {
                    Axis::X => j == 0 || j + 1 == ny,
                    Axis::Y => i == 0 || i + 1 == nx,
                };
                let len = if across { 0.5 * h } else { h };
                let gt = tdata.map(|td| {
                    let normal = (td[n1] - td[n0]) / h;
                    let tang = 0.5
                        * (transverse(td, 1, 0, &grid, i, j, other) + transverse(td, 1, 0, &grid, i1, j1, other));
                    let mut g = [0.0; 2];
                    g[a] = normal;
                    g[t] = tang;
                    g
                });
                for c in 0..nc {
                    let mut f = 0.0;
                    for d in 0..nc {
                        let k = &coef[c * nc + d];
                        if k[a][a] != 0.0 || k[a][t] != 0.0 {
                            let normal = (data[n1 * nc + d] - data[n0 * nc + d]) / h;
                            let tang = 0.5
                                * (transverse(data, nc, d, &grid, i, j, other)
                                    + transverse(data, nc, d, &grid, i1, j1, other));
                            f += k[a][a] * normal + k[a][t] * tang;
                        }
                        if has_thermo {
                            let km = &tcoef[c * nc + d];
                            let g = gt.expect("temperature present");
                            let speed = km[a][0] * g[0] + km[a][1] * g[1];
                            if speed != 0.0 {
                                let up = if speed > 0.0 { data[n1 * nc + d] } else { data[n0 * nc + d] };
                                f += speed * up;
                            }
                        }
                    }
                    let flow = f * len;
                    rate[n0 * nc + c] += flow / cell_volume(&grid, i, j);
                    rate[n1 * nc + c] -= flow / cell_volume(&grid, i1, j1);
                }
            }
        }
    }
    rate
}

/// Per-node `v·∇u` with first-order upwind differences.
fn advection_rate(u: &TensorField, v: &TensorField) -> Vec<f64> {
    let grid = *u.grid();
    let nc = u.ncomp();
    let h = grid.spacing();
    let data = u.data();
    let mut out = vec![0.0; data.len()];
    for n in 0..grid.node_count() {
        let (i, j) = grid.ij(n);
        let vel = v.node(n);
        for (a, axis) in [(0, Axis::X), (1, Axis::Y)] {
            let s = vel[a];
            if s == 0.0 {
                continue;
            }
            let (pos, len) = match axis {
                Axis::X => (i, grid.nx()),
                Axis::Y => (j, grid.ny()),
            };
            let nb = |p: usize| match axis {
                Axis::X => grid.index(p, j),
                Axis::Y => grid.index(i, p),
            };
            let (lo, hi) = if (s > 0.0 && pos > 0) || pos + 1 == len {
                (nb(pos - 1), n)
            } else {
                (n, nb(pos + 1))
            };
            for c in 0..nc {
                out[n * nc + c] += s * (data[hi * nc + c] - data[lo * nc + c]) / h;
            }
        }
    }
    out
}

fn on_boundary(grid: &Grid2D, n: usize) -> bool {
    let (i, j) = grid.ij(n);
    i == 0 || j == 0 || i + 1 == grid.nx() || j + 1 == grid.ny()
}

/// Mass bookkeeping of one species over one step, all as `Σ V_n (·)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepBudget {
    pub mass_before: f64,
    pub mass_after: f64,
    /// Net divergence-term change; zero up to rounding with zero-flux walls.
    pub boundary_flux: f64,
    /// Removed by recombination.
    pub sink: f64,
    /// Removed by the advective term.
    pub advection: f64,
    /// Added back by clipping negative values to zero.
    pub clipped: f64,
}

impl StepBudget {
    /// `|after − (before + flux − sink − advection + clipped)| / max(|before|, tiny)`.
    pub fn closure_error(&self) -> f64 {
        let expect = self.mass_before + self.boundary_flux - self.sink - self.advection + self.clipped;
        (self.mass_after - expect).abs() / self.mass_before.abs().max(f64::MIN_POSITIVE)
    }
}

/// Output of [`step_point_defects`].
#[derive(Clone, Debug, PartialEq)]
pub struct PointDefectStep {
    pub c_v: TensorField,
    pub c_i: TensorField,
    pub vacancy: StepBudget,
    pub interstitial: StepBudget,
}

fn species_step(
    c: &TensorField,
    sink: &[f64],
    params: &SpeciesParams,
    cfg: &EvolutionConfig,
) -> (TensorField, StepBudget) {
    let grid = *c.grid();
    let dmat = params.diffusivity;
    let tmat = params.thermodiffusivity;
    let div = flux_rate(
        c,
        cfg.temperature.as_ref(),
        &|_, _| [[dmat[0][0], dmat[0][1]], [dmat[1][0], dmat[1][1]]],
        &|_, _| [[tmat[0][0], tmat[0][1]], [tmat[1][0], tmat[1][1]]],
    );
    let adv = cfg.velocity.as_ref().map(|v| advection_rate(c, v));
    let mut out = c.clone();
    let mut b = StepBudget {
        mass_before: total_mass(c),
        ..StepBudget::default()
    };
    let dt = cfg.dt;
    for n in 0..grid.node_count() {
        if params.boundary == Boundary::Dirichlet && on_boundary(&grid, n) {
            continue;
        }
        let (i, j) = grid.ij(n);
        let vol = cell_volume(&grid, i, j);
        let a = adv.as_ref().map_or(0.0, |a| a[n]);
        b.boundary_flux += vol * dt * div[n];
        b.sink += vol * dt * sink[n];
        b.advection += vol * dt * a;
        let mut v = c.node(n)[0] + dt * (div[n] - sink[n] - a);
        if v < 0.0 {
            b.clipped += -v * vol;
            v = 0.0;
        }
        out.node_mut(n)[0] = v;
    }
    b.mass_after = total_mass(&out);
    (out, b)
}

/// One explicit step of `DC_K/Dt = ∇·(D_K ∇C_K + D̃_K C_K ∇T) − k C_I C_V`.
pub fn step_point_defects(c_v: &TensorField, c_i: &TensorField, cfg: &EvolutionConfig) -> Result<PointDefectStep> {
    c_v.require_rank(0, "vacancy concentration")?;
    c_i.require_rank(0, "interstitial concentration")?;
    let grid = *c_v.grid();
    if c_i.grid() != &grid {
        return Err(arg("concentrations live on different grids"));
    }
    cfg.check_common(&grid)?;
    if c_v.data().iter().chain(c_i.data()).any(|c| !(*c >= 0.0)) {
        return Err(arg("concentrations must be non-negative"));
    }
    let lambda = spd2_max_eigen(&cfg.vacancy.diffusivity).max(spd2_max_eigen(&cfg.interstitial.diffusivity));
    let gt = cfg.max_grad_t();
    let drift = gt * mat2_abs_max(&cfg.vacancy.thermodiffusivity).max(mat2_abs_max(&cfg.interstitial.thermodiffusivity));
    cfg.check_dt(&grid, lambda, drift)?;
    let sink: Vec<f64> = c_v
        .data()
        .iter()
        .zip(c_i.data())
        .map(|(v, i)| cfg.recombination * v * i)
        .collect();
    let (nv, bv) = species_step(c_v, &sink, &cfg.vacancy, cfg);
    let (ni, bi) = species_step(c_i, &sink, &cfg.interstitial, cfg);
    Ok(PointDefectStep {
        c_v: nv,
        c_i: ni,
        vacancy: bv,
        interstitial: bi,
    })
}

/// Nodewise data handed to an interaction hook for `P̃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionInput {
    pub kappa: [f64; 9],
    pub c_v: f64,
    pub c_i: f64,
    pub grad_t: [f64; 2],
}

/// Nodewise source `P̃` for [`step_contortion_with`].
pub type InteractionHook<'a> = &'a dyn Fn(&InteractionInput) -> [f64; 9];

/// One explicit step of `Dκ/Dt = ∇·(D∇κ + D̃κ∇T)` with `P̃ = 0`.
pub fn step_contortion(kappa: &TensorField, cfg: &EvolutionConfig) -> Result<TensorField> {
    step_contortion_with(kappa, cfg, None, None)
}

/// [`step_contortion`] with a source `P̃` evaluated nodewise by `hook`.
pub fn step_contortion_with(
    kappa: &TensorField,
    cfg: &EvolutionConfig,
    hook: Option<InteractionHook<'_>>,
    concentrations: Option<(&TensorField, &TensorField)>,
) -> Result<TensorField> {
    kappa.require_rank(2, "contortion")?;
    let grid = *kappa.grid();
    cfg.check_common(&grid)?;
    let gt = cfg.max_grad_t();
    cfg.check_dt(&grid, gershgorin(&cfg.kappa_diffusivity), gt * gershgorin(&cfg.kappa_thermodiffusivity))?;
    let dm = cfg.kappa_diffusivity;
    let tm = cfg.kappa_thermodiffusivity;
    let div = flux_rate(
        kappa,
        cfg.temperature.as_ref(),
        &|c, d| [[dm[c][d], 0.0], [0.0, dm[c][d]]],
        &|c, d| [[tm[c][d], 0.0], [0.0, tm[c][d]]],
    );
    let adv = cfg.velocity.as_ref().map(|v| advection_rate(kappa, v));
    let grads = cfg
        .temperature
        .as_ref()
        .map(|t| (partial(t, Axis::X), partial(t, Axis::Y)));
    let mut out = kappa.clone();
    for n in 0..grid.node_count() {
        if cfg.kappa_boundary == Boundary::Dirichlet && on_boundary(&grid, n) {
            continue;
        }
        let src = match hook {
            Some(f) => {
                let mut k = [0.0; 9];
                k.copy_from_slice(kappa.node(n));
                let (cv, ci) = concentrations.map_or((0.0, 0.0), |(v, i)| (v.node(n)[0], i.node(n)[0]));
                let grad_t = grads.as_ref().map_or([0.0; 2], |(x, y)| [x.node(n)[0], y.node(n)[0]]);
                f(&InteractionInput {
                    kappa: k,
                    c_v: cv,
                    c_i: ci,
                    grad_t,
                })
            }
            None => [0.0; 9],
        };
        let o = out.node_mut(n);
        for c in 0..9 {
            let a = adv.as_ref().map_or(0.0, |a| a[9 * n + c]);
            o[c] += cfg.dt * (div[9 * n + c] - src[c] - a);
        }
    }
    Ok(out)
}

/// `∂_i κ_ij − ∂_j tr κ`.
pub fn conservation_residual(kappa: &TensorField) -> Result<TensorField> {
    kappa.require_rank(2, "contortion")?;
    let div = divergence_rows(kappa)?;
    let tr = kappa.map(0, |_, k, o| o[0] = k[0] + k[4] + k[8]);
    let (tx, ty) = (partial(&tr, Axis::X), partial(&tr, Axis::Y));
    div.zip_map(&tx, 1, |_, d, x, o| {
        o.copy_from_slice(d);
        o[0] -= x[0];
    })?
    .zip_map(&ty, 1, |_, d, y, o| {
        o.copy_from_slice(d);
        o[1] -= y[0];
    })
}

/// Settings of the Neumann Poisson solve inside [`project_conservation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for ProjectorOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_sweeps: 20_000,
        }
    }
}

/// Result of [`project_conservation`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub kappa: TensorField,
    /// Correction added to `κ_zz`.
    pub potential: TensorField,
    pub sweeps: usize,
}

/// Removes the gradient part of the conservation residual `r` by adding `s`
/// to `κ_zz`, where `s` solves the Neumann problem `Δs = ∇·r`, `∂_n s = r·n`
/// in finite-volume form (SOR). A `κ_zz` shift leaves `∂_i κ_ij` untouched
/// and moves `∇ tr κ` by `∇s`.
pub fn project_conservation(kappa: &TensorField, opts: &ProjectorOptions) -> Result<Projection> {
    let r = conservation_residual(kappa)?;
    let grid = *kappa.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.spacing();
    let nn = grid.node_count();
    // Face weights L/h and the source Σ L r_face·n.
    let mut rhs = vec![0.0; nn];
    let mut diag = vec![0.0; nn];
    let face_len = |across: bool| if across { 0.5 * h } else { h };
    for j in 0..ny {
        for i in 0..nx {
            let n0 = grid.index(i, j);
            if i + 1 < nx {
                let n1 = n0 + 1;
                let len = face_len(j == 0 || j + 1 == ny);
                let flux = len * 0.5 * (r.node(n0)[0] + r.node(n1)[0]);
                rhs[n0] += flux;
                rhs[n1] -= flux;
                diag[n0] += len / h;
                diag[n1] += len / h;
            }
            if j + 1 < ny {
                let n1 = n0 + nx;
                let len = face_len(i == 0 || i + 1 == nx);
                let flux = len * 0.5 * (r.node(n0)[1] + r.node(n1)[1]);
                rhs[n0] += flux;
                rhs[n1] -= flux;
                diag[n0] += len / h;
                diag[n1] += len / h;
            }
        }
    }
    // Σ_faces (L/h)(s_nb − s_n) = rhs_n, i.e. the discrete form of Δs = ∇·r.
    let omega = 2.0 / (1.0 + libm::sin(core::f64::consts::PI / nx.max(ny) as f64));
    let mut s = vec![0.0; nn];
    let mut sweeps = 0;
    let mut change = f64::INFINITY;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        change = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let n = grid.index(i, j);
                let mut acc = 0.0;
                if i > 0 {
                    acc += face_len(j == 0 || j + 1 == ny) / h * s[n - 1];
                }
                if i + 1 < nx {
                    acc += face_len(j == 0 || j + 1 == ny) / h * s[n + 1];
                }
                if j > 0 {
                    acc += face_len(i == 0 || i + 1 == nx) / h * s[n - nx];
                }
                if j + 1 < ny {
                    acc += face_len(i == 0 || i + 1 == nx) / h * s[n + nx];
                }
                let target = (acc - rhs[n]) / diag[n];
                let d = omega * (target - s[n]);
                s[n] += d;
                change = change.max(d.abs());
            }
        }
        if change < opts.tolerance {
            break;
        }
    }
    if !(change < opts.tolerance) {
        return Err(Error::NoConvergence {
            iterations: sweeps,
            residual: change,
        });
    }
    let mean = s.iter().sum::<f64>() / nn as f64;
    let potential = TensorField::from_data(grid, 0, s.iter().map(|v| v - mean).collect())?;
    let mut out = kappa.clone();
    for n in 0..nn {
        out.node_mut(n)[8] += potential.node(n)[0];
    }
    Ok(Projection {
        kappa: out,
        potential,
        sweeps,
    })
}

/// History of a monitored contortion run.
#[derive(Clone, Debug, PartialEq)]
pub struct ContortionRun {
    pub kappa: TensorField,
    /// `max |conservation_residual|` over `mask` before the first and after every step.
    pub residuals: Vec<f64>,
    pub projections: usize,
}

/// Runs `steps` contortion steps, projecting whenever the monitored residual
/// exceeds `drift_factor` times its initial value.
pub fn evolve_contortion(
    kappa: &TensorField,
    cfg: &EvolutionConfig,
    steps: usize,
    mask: &crate::grid::NodeMask,
    drift_factor: f64,
) -> Result<ContortionRun> {
    let measure = |k: &TensorField| -> Result<f64> { Ok(conservation_residual(k)?.max_abs_in(mask)) };
    let mut k = kappa.clone();
    let r0 = measure(&k)?;
    let mut residuals = vec![r0];
    let mut projections = 0;
    for _ in 0..steps {
        k = step_contortion(&k, cfg)?;
        let mut r = measure(&k)?;
        if r > drift_factor * r0 {
            k = project_conservation(&k, &ProjectorOptions::default())?.kappa;
            projections += 1;
            r = measure(&k)?;
        }
        residuals.push(r);
    }
    Ok(ContortionRun {
        kappa: k,
        residuals,
        projections,
    })
}
