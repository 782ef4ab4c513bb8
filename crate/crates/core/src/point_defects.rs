//! Point defects: conformal metric, nonmetricity, the hatted connection and
//! the curvature identity that ties curvature, nonmetricity and torsion.
//!
//! Slot maps: `Q[j][i][k] = Q_{j;ik} = ∇̂_j g′_ik`; `δΓ[k][i][j]`.

use alloc::vec::Vec;

use crate::error::{arg, Error, Result, Warning};
use crate::geometry::{
    christoffel_bravais, curvature_of, metric_compatibility_residual, Connection, Curvature, CurvatureForm,
    IndexContraction, Metric, MetricTag,
};
use crate::grid::{gradient, TensorField};
use crate::tensor::det3;

/// Guard on `max |C_I − C_V|`.
pub const DEFAULT_EXCESS_GUARD: f64 = 0.5;

/// `g′ = (1 + C_I − C_V)² g^B`.
pub fn point_defect_metric(c_v: &TensorField, c_i: &TensorField, g_b: &Metric, guard: f64) -> Result<Metric> {
    c_v.require_rank(0, "vacancy concentration")?;
    c_i.require_rank(0, "interstitial concentration")?;
    if c_v.grid() != g_b.grid() || c_i.grid() != g_b.grid() {
        return Err(arg("concentrations and metric live on different grids"));
    }
    if c_v.data().iter().chain(c_i.data()).any(|c| !(*c >= 0.0)) {
        return Err(arg("concentrations must be non-negative"));
    }
    let excess = c_i.sub(c_v)?;
    let factor = excess.map(0, |_, d, o| o[0] = 1.0 + d[0]);
    let mut g = g_b.conformal(&factor)?;
    let max_excess = excess.max_abs();
    if max_excess >= guard {
        g.push_warning(Warning::ConcentrationGuard { max_excess, guard });
    }
    debug_assert!(volume_scaling_defect(&g, g_b, &factor) < 1e-12);
    Ok(g)
}

fn sqrt_det(v: &[f64]) -> f64 {
    libm::sqrt(det3(&[[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]))
}

/// `max |sqrt det g′ / (s³ sqrt det g^B) − 1|` over the grid.
pub fn volume_scaling_defect(g_prime: &Metric, g_b: &Metric, factor: &TensorField) -> f64 {
    (0..g_b.grid().node_count())
        .map(|n| {
            let s = factor.node(n)[0];
            (sqrt_det(g_prime.g().node(n)) / (s * s * s * sqrt_det(g_b.g().node(n))) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `δΓ_{k;ij} = Q_{j;ik} + Q_{i;jk} − Q_{k;ji}`.
pub fn nonmetric_contortion(q: &TensorField) -> Result<TensorField> {
    q.require_rank(3, "nonmetricity")?;
    Ok(q.map(3, |_, q, o| {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    o[9 * k + 3 * i + j] = q[9 * j + 3 * i + k] + q[9 * i + 3 * j + k] - q[9 * k + 3 * j + i];
                }
            }
        }
    }))
}

/// Nonmetricity that makes the hatted connection coincide with the lattice
/// connection: `Q_{j;ik} = ∂_j (g′ − g^B)_ik`.
pub fn lattice_seed(g_prime: &Metric, g_b: &Metric) -> Result<TensorField> {
    gradient(&g_prime.g().sub(g_b.g())?)
}

/// Settings of the `Q ↔ Γ̂` fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// First damping factor; on failure the solve restarts once at half of it.
    pub damping: f64,
}

impl Default for HatOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            damping: 1.0,
        }
    }
}

/// Converged hatted connection and its ingredients.
#[derive(Clone, Debug, PartialEq)]
pub struct HatSolution {
    /// `Γ̂ = Γ′ − ΔΓ − ½δΓ`.
    pub connection: Connection,
    /// `Γ′`, the Christoffel symbols of `g′`.
    pub prime: Connection,
    pub q: TensorField,
    pub delta_gamma_q: TensorField,
    pub iterations: usize,
    /// `‖Q − ∇̂g′‖_∞` at the returned state.
    pub residual: f64,
    /// `‖ΔQ‖_∞` per iteration.
    pub history: Vec<f64>,
    pub damping: f64,
}

fn hat_from(prime: &Connection, delta: &TensorField, dq: &TensorField) -> Result<Connection> {
    Connection::new(prime.field().sub(delta)?.axpy(-0.5, dq)?, MetricTag::PointDefect)
}

/// Solves `Γ̂ = Γ′ − ΔΓ − ½δΓ(Q)`, `Q = ∇̂g′` by damped Picard iteration from
/// `seed`, with `∇̂` in the lowered pattern.
///
/// In that pattern `Γ′` and `ΔΓ` drop out of `∇̂g′` exactly and the map sends
/// `Q` to its part symmetric in the metric slots, so any symmetric seed is
/// already a fixed point. A zero seed gives `Q = 0`; [`lattice_seed`] keeps
/// the lattice connection and carries all of `g′ − g^B` in `Q`.
pub fn hat_connection_solve(
    g_prime: &Metric,
    delta: &TensorField,
    seed: &TensorField,
    opts: &HatOptions,
) -> Result<HatSolution> {
    delta.require_rank(3, "connection contortion")?;
    seed.require_rank(3, "nonmetricity seed")?;
    if !(opts.tolerance > 0.0 && opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(arg("hat solve needs tolerance > 0 and damping in (0, 1]"));
    }
    let prime = christoffel_bravais(g_prime)?;
    let prime = Connection::new(prime.field().clone(), MetricTag::PointDefect)?;
    match picard(g_prime, &prime, delta, seed, opts, opts.damping) {
        Err(Error::NoConvergence { .. }) => picard(g_prime, &prime, delta, seed, opts, 0.5 * opts.damping),
        r => r,
    }
}

fn picard(
    g_prime: &Metric,
    prime: &Connection,
    delta: &TensorField,
    seed: &TensorField,
    opts: &HatOptions,
    damping: f64,
) -> Result<HatSolution> {
    let mut q = seed.clone();
    let mut history = Vec::new();
    for it in 1..=opts.max_iterations {
        let dq = nonmetric_contortion(&q)?;
        let hat = hat_from(prime, delta, &dq)?;
        let target = metric_compatibility_residual(&hat, g_prime, IndexContraction::Lowered)?;
        let step = target.sub(&q)?;
        let change = damping * step.max_abs();
        history.push(change);
        q = q.axpy(damping, &step)?;
        if !change.is_finite() {
            break;
        }
        if change < opts.tolerance {
            let delta_gamma_q = nonmetric_contortion(&q)?;
            let connection = hat_from(prime, delta, &delta_gamma_q)?;
            let residual = metric_compatibility_residual(&connection, g_prime, IndexContraction::Lowered)?
                .sub(&q)?
                .max_abs();
            return Ok(HatSolution {
                connection,
                prime: prime.clone(),
                q,
                delta_gamma_q,
                iterations: it,
                residual,
                history,
                damping,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// `δR + R′ + ΔR`; zero when the crystal is teleparallel.
pub fn teleparallel_residual(delta_r_q: &Curvature, r_prime: &Curvature, delta_r: &Curvature) -> Result<TensorField> {
    Ok(delta_r_q.add(r_prime)?.add(delta_r)?.field().clone())
}

/// Total curvature of `Γ̂` with its additive split.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalCurvature {
    /// Curvature of `Γ̂` computed directly.
    pub total: Curvature,
    /// Curvature of `−½δΓ`.
    pub nonmetric: Curvature,
    /// Curvature of `Γ′`.
    pub prime: Curvature,
    /// Curvature of `−ΔΓ`.
    pub contortion: Curvature,
    /// `max |R̂ − (δR + R′ + ΔR)|`: the quadratic cross terms the split omits.
    pub mismatch: f64,
}

/// `R̂` from `Γ̂`, cross-checked against `δR + R′ + ΔR`.
pub fn total_curvature(
    sol: &HatSolution,
    delta: &TensorField,
    g_prime: &Metric,
    form: CurvatureForm,
) -> Result<TotalCurvature> {
    let total = curvature_of(sol.connection.field(), g_prime, form)?;
    let nonmetric = curvature_of(&sol.delta_gamma_q.scaled(-0.5), g_prime, form)?;
    let prime = curvature_of(sol.prime.field(), g_prime, form)?;
    let contortion = curvature_of(&delta.scaled(-1.0), g_prime, form)?;
    let sum = teleparallel_residual(&nonmetric, &prime, &contortion)?;
    let mismatch = total.field().sub(&sum)?.max_abs();
    Ok(TotalCurvature {
        total,
        nonmetric,
        prime,
        contortion,
        mismatch,
    })
}

/// Residual of the curvature–nonmetricity–torsion identity, stored
/// `[l][k][m][q]`:
///
/// `∇̂_[m Q_q];lk − R̂_{(l;k)mq} + T_{p;mq} Q_{p;lk}`
///
/// with `X_[mq] = ½(X_mq − X_qm)`, `R̂_{(l;k)mq} = ½(R̂_{p;lmq} g_pk + R̂_{p;kmq} g_lp)`
/// and `∇̂_m Q_{q;lk} = ∂_m Q_{q;lk} − Γ̂_{p;qm} Q_{p;lk} − Γ̂_{p;lm} Q_{q;pk} − Γ̂_{p;km} Q_{q;lp}`.
///
/// It vanishes in the continuum when `R̂` is the transport form of `Γ̂`,
/// `T` its torsion and `Q = ∇̂g′` in the metric-contracted pattern.
pub fn curvature_identity_residual(
    r_hat: &Curvature,
    q: &TensorField,
    t: &TensorField,
    hat: &Connection,
    g: &Metric,
) -> Result<TensorField> {
    q.require_rank(3, "nonmetricity")?;
    t.require_rank(3, "torsion")?;
    let grid = *hat.grid();
    if q.grid() != &grid || t.grid() != &grid || g.grid() != &grid || r_hat.field().grid() != &grid {
        return Err(arg("identity inputs live on different grids"));
    }
    let dq = gradient(q)?; // [m][q][l][k]
    let mut out = TensorField::zeros(grid, 4)?;
    for n in 0..grid.node_count() {
        let (dq, q, t, gm, ga, r) = (
            dq.node(n),
            q.node(n),
            t.node(n),
            g.g().node(n),
            hat.field().node(n),
            r_hat.field().node(n),
        );
        let nabla = |m: usize, qq: usize, l: usize, k: usize| -> f64 {
            let mut s = dq[27 * m + 9 * qq + 3 * l + k];
            for p in 0..3 {
                s -= ga[9 * p + 3 * qq + m] * q[9 * p + 3 * l + k]
                    + ga[9 * p + 3 * l + m] * q[9 * qq + 3 * p + k]
                    + ga[9 * p + 3 * k + m] * q[9 * qq + 3 * l + p];
            }
            s
        };
        let o = out.node_mut(n);
        for l in 0..3 {
            for k in 0..3 {
                for m in 0..3 {
                    for qq in 0..3 {
                        let mut s = 0.5 * (nabla(m, qq, l, k) - nabla(qq, m, l, k));
                        for p in 0..3 {
                            s -= 0.5
                                * (r[27 * p + 9 * l + 3 * m + qq] * gm[3 * p + k]
                                    + r[27 * p + 9 * k + 3 * m + qq] * gm[3 * l + p]);
                            s += t[9 * p + 3 * m + qq] * q[9 * p + 3 * l + k];
                        }
                        o[27 * l + 9 * k + 3 * m + qq] = s;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Everything the point-defect geometry derives from one scene.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDefectState {
    pub c_v: TensorField,
    pub c_i: TensorField,
    pub g_prime: Metric,
    pub solution: HatSolution,
}

impl PointDefectState {
    /// Builds `g′` and solves for `Γ̂` from the lattice seed.
    pub fn new(c_v: TensorField, c_i: TensorField, g_b: &Metric, delta: &TensorField, opts: &HatOptions) -> Result<Self> {
        let g_prime = point_defect_metric(&c_v, &c_i, g_b, DEFAULT_EXCESS_GUARD)?;
        let seed = lattice_seed(&g_prime, g_b)?;
        let solution = hat_connection_solve(&g_prime, delta, &seed, opts)?;
        Ok(Self {
            c_v,
            c_i,
            g_prime,
            solution,
        })
    }

    pub fn warnings(&self) -> &[Warning] {
        self.g_prime.warnings()
    }

    /// `∇̂g′` contracted through `g′`.
    pub fn metric_nonmetricity(&self) -> Result<TensorField> {
        metric_compatibility_residual(&self.solution.connection, &self.g_prime, IndexContraction::Metric)
    }

    /// Identity residual with the inputs under which it holds exactly.
    pub fn identity_residual(&self) -> Result<TensorField> {
        let hat = &self.solution.connection;
        let r = curvature_of(hat.field(), &self.g_prime, CurvatureForm::Transport)?;
        let q = self.metric_nonmetricity()?;
        curvature_identity_residual(&r, &q, &hat.torsion(), hat, &self.g_prime)
    }
}
