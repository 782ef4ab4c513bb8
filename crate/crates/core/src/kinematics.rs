//! Frank and Burgers tensors, contortion, completed tensors, recovered
//! densities, Kröner's relation and defect charges.
//!
//! Slot maps: Frank tensor `[m][k] = ∂̄_m ω_k`; Burgers tensor
//! `[l][k] = ∂̄_l b_k`; contortion `[i][j] = κ_ij`; completed tensors
//! `[j][k] = ð_j ω_k` and `ð_j b_k`. Density vectors `Θ_k`, `Λ_k`, `η_k` are
//! the `z` rows of the rank-2 fields.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Result, Warning};
use crate::grid::{
    curl_rows, incompatibility_op, line_integral, partial, surface_integral, Axis, Grid2D, Polyline,
    SurfaceRegion, TensorField,
};
use crate::tensor::{eps, eps2, Mat3, Vec3, PLANE, X, Y, Z};

/// Strain, densities and contortion of one scene on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicState {
    pub strain: TensorField,
    pub theta: TensorField,
    pub lambda: TensorField,
    pub kappa: TensorField,
    pub reference: [f64; 2],
}

impl KinematicState {
    /// Builds `κ` from the densities.
    pub fn new(strain: TensorField, theta: TensorField, lambda: TensorField, reference: [f64; 2]) -> Result<Self> {
        strain.require_rank(2, "strain")?;
        strain.require_symmetric("strain")?;
        let kappa = contortion_from_densities(&lambda, &theta, reference)?;
        Ok(Self {
            strain,
            theta,
            lambda,
            kappa,
            reference,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.strain.grid()
    }

    pub fn completed_frank(&self) -> Result<TensorField> {
        completed_frank(&self.strain, &self.kappa)
    }

    pub fn completed_burgers(&self) -> Result<TensorField> {
        completed_burgers(&self.strain, &self.kappa, self.reference)
    }

    pub fn kroener_residual(&self) -> Result<TensorField> {
        kroener_residual(&self.strain, &self.theta, &self.kappa)
    }
}

fn require_inside(grid: &Grid2D, x0: [f64; 2]) -> Result<()> {
    if grid.contains(x0) {
        Ok(())
    } else {
        Err(domain(format!("reference point ({}, {}) lies outside the grid", x0[0], x0[1])))
    }
}

/// `∂̄_m ω_k = ε_kpq ∂_p E_qm`.
pub fn frank_tensor(e: &TensorField) -> Result<TensorField> {
    e.require_rank(2, "strain")?;
    e.require_symmetric("strain")?;
    let d = [partial(e, Axis::X), partial(e, Axis::Y)];
    let mut out = TensorField::zeros(*e.grid(), 2)?;
    for n in 0..e.grid().node_count() {
        let o = out.node_mut(n);
        for m in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for p in PLANE {
                    let dp = d[p].node(n);
                    for q in 0..3 {
                        let c = eps(k, p, q);
                        if c != 0.0 {
                            s += c * dp[3 * q + m];
                        }
                    }
                }
                o[3 * m + k] = s;
            }
        }
    }
    Ok(out)
}

/// Adds the moment term `ε_kpq (x_p − x0_p) W[l][q]` to `base[l][k]`.
fn with_moment(base: &TensorField, w: &TensorField, x0: [f64; 2], transpose_base: bool) -> Result<TensorField> {
    base.zip_map(w, 2, |p, b, wv, o| {
        let r = [p[0] - x0[0], p[1] - x0[1], 0.0];
        for l in 0..3 {
            for k in 0..3 {
                let mut s = if transpose_base { b[3 * k + l] } else { b[3 * l + k] };
                for pp in PLANE {
                    for q in 0..3 {
                        let c = eps(k, pp, q);
                        if c != 0.0 {
                            s += c * r[pp] * wv[3 * l + q];
                        }
                    }
                }
                o[3 * l + k] = s;
            }
        }
    })
}

/// `∂̄_l b_k = E_kl + ε_kpq (x_p − x0_p) ∂̄_l ω_q`.
pub fn burgers_tensor(e: &TensorField, x0: [f64; 2]) -> Result<TensorField> {
    require_inside(e.grid(), x0)?;
    let f = frank_tensor(e)?;
    with_moment(e, &f, x0, true)
}

/// `η = inc E`, see [`incompatibility_op`].
pub fn incompatibility(e: &TensorField) -> Result<TensorField> {
    incompatibility_op(e)
}

/// `κ_ij = δ_iz α_j − ½ α_z δ_ij` with
/// `α_j = Λ_zj − δ_jα ε_αβ Θ_zz (x_β − x0_β)`.
pub fn contortion_from_densities(lambda: &TensorField, theta: &TensorField, x0: [f64; 2]) -> Result<TensorField> {
    lambda.require_rank(2, "dislocation density")?;
    theta.require_rank(2, "disclination density")?;
    require_inside(lambda.grid(), x0)?;
    lambda.zip_map(theta, 2, |p, lam, th, o| {
        let r = [p[0] - x0[0], p[1] - x0[1]];
        let tz = th[3 * Z + Z];
        let mut alpha = [lam[3 * Z + X], lam[3 * Z + Y], lam[3 * Z + Z]];
        for a in PLANE {
            for b in PLANE {
                alpha[a] -= eps2(a, b) * tz * r[b];
            }
        }
        for j in 0..3 {
            o[3 * Z + j] += alpha[j];
        }
        for i in 0..3 {
            o[3 * i + i] -= 0.5 * alpha[Z];
        }
    })
}

/// `ð_j ω_k = ∂̄_j ω_k − κ_kj`.
pub fn completed_frank(e: &TensorField, kappa: &TensorField) -> Result<TensorField> {
    let f = frank_tensor(e)?;
    f.zip_map(kappa, 2, |_, fv, kv, o| {
        for j in 0..3 {
            for k in 0..3 {
                o[3 * j + k] = fv[3 * j + k] - kv[3 * k + j];
            }
        }
    })
}

/// `ð_j b_k = E_kj + ε_kpq (x_p − x0_p) ð_j ω_q`.
pub fn completed_burgers(e: &TensorField, kappa: &TensorField, x0: [f64; 2]) -> Result<TensorField> {
    require_inside(e.grid(), x0)?;
    let w = completed_frank(e, kappa)?;
    with_moment(e, &w, x0, true)
}

/// `Θ_ik = ε_ilj ∂_l ð_j ω_k`, `Λ_ik = ε_ilj ∂_l ð_j b_k`.
pub fn densities_from_completed(d_omega: &TensorField, d_b: &TensorField) -> Result<(TensorField, TensorField)> {
    Ok((curl_rows(d_omega)?, curl_rows(d_b)?))
}

/// `r_k = η_zk − Θ_zk − ε_αβ ∂_α κ_kβ`.
pub fn kroener_residual(e: &TensorField, theta: &TensorField, kappa: &TensorField) -> Result<TensorField> {
    let eta = incompatibility_op(e)?;
    let kx = partial(kappa, Axis::X);
    let ky = partial(kappa, Axis::Y);
    let mut out = TensorField::zeros(*e.grid(), 1)?;
    for n in 0..e.grid().node_count() {
        let (et, th) = (eta.node(n), theta.node(n));
        let d = [kx.node(n), ky.node(n)];
        let o = out.node_mut(n);
        for k in 0..3 {
            let mut curl = 0.0;
            for a in PLANE {
                for b in PLANE {
                    curl += eps2(a, b) * d[a][3 * k + b];
                }
            }
            o[k] = et[3 * Z + k] - th[3 * Z + k] - curl;
        }
    }
    Ok(out)
}

fn z_row_integral(f: &TensorField, s: &SurfaceRegion) -> Result<Vec3> {
    f.require_rank(2, "density")?;
    let t = surface_integral(f, s)?;
    Ok([t.get(&[Z, X]), t.get(&[Z, Y]), t.get(&[Z, Z])])
}

/// `Ω_k(S) = ∫_S Θ_k dS`.
pub fn frank_vector(theta: &TensorField, s: &SurfaceRegion) -> Result<Vec3> {
    z_row_integral(theta, s)
}

/// `B_k(S) = ∫_S Λ_k dS`.
pub fn burgers_vector(lambda: &TensorField, s: &SurfaceRegion) -> Result<Vec3> {
    z_row_integral(lambda, s)
}

/// Bravais rotation or distortion at the end of a path, with any
/// path-dependence warning.
#[derive(Clone, Debug, PartialEq)]
pub struct BravaisValue<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

/// Default single-valuedness threshold, relative to `max(|ω0|, 1)`.
pub const DEFAULT_THETA_TOLERANCE: f64 = 1e-8;

/// Disclination flux bound over the bounding box of `path`:
/// `max |Θ| · area`.
pub fn disclination_flux(theta: &TensorField, path: &Polyline) -> f64 {
    let g = theta.grid();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in path.vertices() {
        for a in 0..2 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    let h = g.spacing();
    let area = ((hi[0] - lo[0]).max(h)) * ((hi[1] - lo[1]).max(h));
    let mut m: f64 = 0.0;
    for n in 0..g.node_count() {
        let p = g.point(n);
        if p[0] >= lo[0] - h && p[0] <= hi[0] + h && p[1] >= lo[1] - h && p[1] <= hi[1] + h {
            for v in theta.node(n) {
                m = m.max(v.abs());
            }
        }
    }
    m * area
}

/// `ω(x) = ω0 + ∫ ð_β ω dx_β` along `path`, starting where `ω = ω0`.
pub fn bravais_rotation(
    state: &KinematicState,
    omega0: Vec3,
    path: &Polyline,
    theta_tolerance: f64,
) -> Result<BravaisValue<Vec3>> {
    let dw = state.completed_frank()?;
    let inc = line_integral(&dw, path)?;
    let flux = disclination_flux(&state.theta, path);
    let scale = omega0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut warnings = Vec::new();
    if flux >= theta_tolerance * scale {
        warnings.push(Warning::PathDependent {
            disclination_flux: flux,
            threshold: theta_tolerance * scale,
        });
    }
    Ok(BravaisValue {
        value: [omega0[0] + inc[0], omega0[1] + inc[1], omega0[2] + inc[2]],
        warnings,
    })
}

/// `β_kl = E_kl − ε_klj ω_j` at the end of `path`.
pub fn bravais_distortion(
    state: &KinematicState,
    omega0: Vec3,
    path: &Polyline,
    theta_tolerance: f64,
) -> Result<BravaisValue<Mat3>> {
    let w = bravais_rotation(state, omega0, path, theta_tolerance)?;
    let e = state.strain.sample(path.end())?;
    let mut beta = [[0.0; 3]; 3];
    for k in 0..3 {
        for l in 0..3 {
            beta[k][l] = e.get(&[k, l]) - (0..3).map(|j| eps(k, l, j) * w.value[j]).sum::<f64>();
        }
    }
    Ok(BravaisValue {
        value: beta,
        warnings: w.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defects::{
        compatible_strain, consistent_strain, screw_frank_regular, screw_strain, DefectKind, DefectScene,
        DensityBlob, Displacement, ScrewSource,
    };
    use crate::grid::{observed_order, NodeMask};
    use crate::tensor::SmallTensor;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn grid(n: usize) -> Grid2D {
        Grid2D::square(-2.0, 2.0, n).unwrap()
    }

    fn zeros(g: Grid2D) -> TensorField {
        TensorField::zeros(g, 2).unwrap()
    }

    #[test]
    fn zero_strain_gives_zero_tensors() {
        let g = grid(9);
        let e = zeros(g);
        assert_eq!(frank_tensor(&e).unwrap().max_abs(), 0.0);
        assert_eq!(burgers_tensor(&e, [0.0, 0.0]).unwrap().max_abs(), 0.0);
        assert!(burgers_tensor(&e, [3.0, 0.0]).is_err());
        let mut bad = zeros(g);
        bad.data_mut()[1] = 1.0;
        assert!(frank_tensor(&bad).is_err());
    }

    #[test]
    fn constant_strain_burgers_at_reference() {
        let g = grid(9);
        let m = [[0.01, 0.002, 0.0], [0.002, -0.03, 0.004], [0.0, 0.004, 0.0]];
        let e = TensorField::uniform(g, &SmallTensor::matrix(m));
        let x0 = g.point(g.index(4, 4));
        let b = burgers_tensor(&e, x0).unwrap();
        let at = b.node(g.index(4, 4));
        for l in 0..3 {
            for k in 0..3 {
                assert_abs_diff_eq!(at[3 * l + k], m[k][l], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn screw_frank_matches_closed_form() {
        let g = grid(129);
        let s = ScrewSource::new(4.0 * PI, [0.0, 0.0], 0.05).unwrap();
        let f = frank_tensor(&screw_strain(&s, g)).unwrap();
        let exact = screw_frank_regular(&s, g);
        let mask = NodeMask::interior(g, 1).excluding_disc([0.0, 0.0], 0.5);
        let err = f.sub(&exact).unwrap().max_abs_in(&mask);
        assert!(err < 0.05 * exact.max_abs_in(&mask), "{err}");
        // Node (1, 0) when it is on the grid: diag(−1, 1, 0).
        let n = g.index(96, 64);
        assert_abs_diff_eq!(g.point(n)[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.node(n)[0], -1.0, epsilon = 2e-3);
        assert_abs_diff_eq!(f.node(n)[4], 1.0, epsilon = 2e-3);
    }

    #[test]
    fn frank_curl_equals_incompatibility() {
        let g = grid(65);
        let u = Displacement::Radial { amplitude: 0.01, wavenumber: 1.0 };
        let b = DensityBlob::new(DefectKind::Dislocation, [0.0, 0.0, 0.1], [0.2, 0.1], 0.4).unwrap();
        let e = compatible_strain(g, |p| u.gradient(p))
            .add(&consistent_strain(&[b], [0.0, 0.0], g).unwrap())
            .unwrap();
        let c = curl_rows(&frank_tensor(&e).unwrap()).unwrap();
        let eta = incompatibility(&e).unwrap();
        let mask = NodeMask::interior(g, 2);
        let d = c.sub(&eta).unwrap().max_abs_in(&mask);
        assert!(d < 0.05 * eta.max_abs_in(&mask), "{d} vs {}", eta.max_abs_in(&mask));
    }

    #[test]
    fn contortion_of_screw_density() {
        let g = grid(9);
        let phi = |p: [f64; 2]| 1.0 + p[0] * p[1];
        let lam = TensorField::from_fn(g, 2, |p, o| o[8] = phi(p)).unwrap();
        let k = contortion_from_densities(&lam, &zeros(g), [0.0, 0.0]).unwrap();
        for n in 0..g.node_count() {
            let f = phi(g.point(n));
            let v = k.node(n);
            assert_eq!(v[8], f / 2.0);
            assert_eq!(v[0], -f / 2.0);
            assert_eq!(v[4], -f / 2.0);
            assert!(v.iter().enumerate().all(|(c, x)| c % 4 == 0 || *x == 0.0));
        }
        assert_eq!(contortion_from_densities(&zeros(g), &zeros(g), [0.0, 0.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn contortion_of_disclination_density_by_hand() {
        let g = grid(9);
        let th = TensorField::from_fn(g, 2, |_, o| o[8] = 2.0).unwrap();
        let x0 = [0.5, -1.0];
        let k = contortion_from_densities(&zeros(g), &th, x0).unwrap();
        let n = g.index(6, 2); // (1, −1)
        let p = g.point(n);
        // α_x = −ε_xy Θ (y − y0) = −2·0 ; α_y = −ε_yx Θ (x − x0) = 2·(x − x0)
        let v = k.node(n);
        assert_abs_diff_eq!(v[3 * Z + X], -2.0 * (p[1] - x0[1]), epsilon = 1e-15);
        assert_abs_diff_eq!(v[3 * Z + Y], 2.0 * (p[0] - x0[0]), epsilon = 1e-15);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[8], 0.0);
    }

    #[test]
    fn completed_frank_transposes_contortion() {
        let g = grid(9);
        let lam = TensorField::from_fn(g, 2, |p, o| o[8] = p[0]).unwrap();
        let k = contortion_from_densities(&lam, &zeros(g), [0.0, 0.0]).unwrap();
        let w = completed_frank(&zeros(g), &k).unwrap();
        for n in 0..g.node_count() {
            assert_eq!(w.node(n)[8], -g.point(n)[0] / 2.0);
        }
        // Asymmetric κ: ð_xω_z = −κ_zx.
        let k2 = TensorField::from_fn(g, 2, |_, o| o[3 * Z + X] = 1.0).unwrap();
        let w2 = completed_frank(&zeros(g), &k2).unwrap();
        assert_eq!(w2.node(0)[3 * X + Z], -1.0);
        assert_eq!(w2.node(0)[3 * Z + X], 0.0);
        assert_eq!(completed_burgers(&zeros(g), &zeros(g), [0.0, 0.0]).unwrap().max_abs(), 0.0);
    }

    fn scene_state(n: usize, blobs: &[DensityBlob], x0: [f64; 2]) -> KinematicState {
        let g = grid(n);
        let mut s = DefectScene::empty(x0);
        s.blobs = blobs.to_vec();
        let (th, la) = s.densities(g).unwrap();
        KinematicState::new(s.strain(g).unwrap(), th, la, x0).unwrap()
    }

    fn round_trip_error(n: usize) -> (f64, f64) {
        let x0 = [0.1, -0.2];
        let blobs = [
            DensityBlob::new(DefectKind::Dislocation, [0.02, -0.01, 0.05], [0.2, 0.1], 0.35).unwrap(),
            DensityBlob::new(DefectKind::Disclination, [0.0, 0.0, 0.03], [-0.3, 0.2], 0.4).unwrap(),
        ];
        let st = scene_state(n, &blobs, x0);
        let (th, la) = densities_from_completed(&st.completed_frank().unwrap(), &st.completed_burgers().unwrap()).unwrap();
        let mask = NodeMask::interior(*st.grid(), 2);
        // Only the z rows (the density vectors) are reproduced: the in-plane
        // rows of the Burgers curl keep terms like ∂_y E_xz.
        let dt = th.sub(&st.theta).unwrap();
        let dl = la.sub(&st.lambda).unwrap();
        let e = (6..9)
            .map(|c| dt.component(c).max_abs_in(&mask).max(dl.component(c).max_abs_in(&mask)))
            .fold(0.0, f64::max);
        (e, st.grid().spacing())
    }

    #[test]
    fn density_round_trip_converges() {
        let (e1, h1) = round_trip_error(81);
        let (e2, h2) = round_trip_error(161);
        assert!(e2 < 2e-4, "{e2}");
        assert!(observed_order(e1, e2, h1, h2) > 1.8, "{e1} {e2}");
    }

    #[test]
    fn kroener_residual_of_manufactured_and_faulty_scenes() {
        let x0 = [0.1, -0.2];
        let blobs = [
            DensityBlob::new(DefectKind::Dislocation, [0.02, 0.0, 0.05], [0.2, 0.1], 0.35).unwrap(),
            DensityBlob::new(DefectKind::Disclination, [0.0, 0.0, 0.03], [-0.3, 0.2], 0.4).unwrap(),
        ];
        let st = scene_state(161, &blobs, x0);
        let mask = NodeMask::interior(*st.grid(), 2);
        let r = st.kroener_residual().unwrap().max_abs_in(&mask);
        let th_scale = st.theta.max_abs();
        assert!(r < 1e-2 * th_scale, "{r}");

        // Doubling Θ shifts the residual by −Θ_k.
        let th2 = st.theta.scaled(2.0);
        let k2 = contortion_from_densities(&st.lambda, &st.theta, x0).unwrap();
        let bad = kroener_residual(&st.strain, &th2, &k2).unwrap();
        let good = st.kroener_residual().unwrap();
        for n in mask.nodes() {
            assert_abs_diff_eq!(bad.node(n)[2] - good.node(n)[2], -st.theta.node(n)[8], epsilon = 1e-12);
        }
    }

    #[test]
    fn kroener_residual_converges_for_blobs_cut_by_the_boundary() {
        let x0 = [0.0, 0.0];
        let blobs = [
            DensityBlob::new(DefectKind::Dislocation, [0.01, 0.0, 0.02], [0.8, 0.5], 0.8).unwrap(),
            DensityBlob::new(DefectKind::Disclination, [0.0, 0.0, 0.01], [-0.9, 0.0], 0.9).unwrap(),
        ];
        let err = |n: usize| {
            let st = scene_state(n, &blobs, x0);
            let mask = NodeMask::interior(*st.grid(), 2);
            (st.kroener_residual().unwrap().max_abs_in(&mask) / st.theta.max_abs(), st.grid().spacing())
        };
        let (e1, h1) = err(65);
        let (e2, h2) = err(129);
        assert!(observed_order(e1, e2, h1, h2) > 1.9, "{e1} {e2}");
    }

    #[test]
    fn compatible_strain_has_small_kroener_residual() {
        let g = grid(81);
        let u = Displacement::Cellular { amplitude: 0.01, wavenumber: 1.0 };
        let e = compatible_strain(g, |p| u.gradient(p));
        let r = kroener_residual(&e, &zeros(g), &zeros(g)).unwrap();
        assert!(r.max_abs() < 0.01 * g.spacing().powi(2) * 10.0);
    }

    #[test]
    fn charges_and_stokes() {
        let b = DensityBlob::new(DefectKind::Dislocation, [0.0, 0.0, 1.0], [0.0, 0.0], 0.25).unwrap();
        let st = scene_state(161, &[b], [0.0, 0.0]);
        let g = *st.grid();
        let s = SurfaceRegion::rectangle([-1.5, -1.5], [1.5, 1.5]).unwrap();
        let bv = burgers_vector(&st.lambda, &s).unwrap();
        assert_abs_diff_eq!(bv[2], 1.0, epsilon = 1e-6);
        let far = SurfaceRegion::rectangle([1.5, 1.5], [1.9, 1.9]).unwrap();
        assert!(burgers_vector(&st.lambda, &far).unwrap()[2].abs() < 1e-9);
        let line = line_integral(&st.completed_burgers().unwrap(), &s.boundary(&g).unwrap()).unwrap();
        assert_abs_diff_eq!(line[2], 1.0, epsilon = 1e-3);
        assert_eq!(frank_vector(&st.theta, &s).unwrap(), [0.0; 3]);
    }

    #[test]
    fn bravais_rotation_of_compatible_strain() {
        let g = grid(161);
        let u = Displacement::Cellular { amplitude: 0.01, wavenumber: 1.2 };
        let st = KinematicState::new(compatible_strain(g, |p| u.gradient(p)), zeros(g), zeros(g), [0.0, 0.0]).unwrap();
        let rot = |p: [f64; 2]| {
            let gr = u.gradient(p);
            // ω_k = ½ ε_kpq ∂_p u_q
            let mut w = [0.0; 3];
            for k in 0..3 {
                for pp in 0..3 {
                    for q in 0..3 {
                        w[k] += 0.5 * eps(k, pp, q) * gr[q][pp];
                    }
                }
            }
            w
        };
        let a = [-1.0, -0.5];
        let b = [1.2, 0.9];
        let path = Polyline::new(alloc::vec![a, [b[0], a[1]], b], false).unwrap();
        let w = bravais_rotation(&st, rot(a), &path, DEFAULT_THETA_TOLERANCE).unwrap();
        assert!(w.warnings.is_empty());
        assert_abs_diff_eq!(w.value[2], rot(b)[2], epsilon = 1e-5);
        let beta = bravais_distortion(&st, rot(a), &path, DEFAULT_THETA_TOLERANCE).unwrap();
        let gb = u.gradient(b);
        for k in 0..2 {
            for l in 0..2 {
                assert_abs_diff_eq!(beta.value[k][l], gb[k][l], epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn bravais_rotation_flags_disclinations() {
        let b = DensityBlob::new(DefectKind::Disclination, [0.0, 0.0, 0.01], [0.0, 0.0], 0.3).unwrap();
        let st = scene_state(41, &[b], [0.0, 0.0]);
        let path = Polyline::segment([-1.0, -1.0], [1.0, 1.0]);
        let w = bravais_rotation(&st, [0.0; 3], &path, DEFAULT_THETA_TOLERANCE).unwrap();
        assert!(matches!(w.warnings[0], Warning::PathDependent { .. }));
    }

    #[test]
    fn homotopic_paths_agree_without_disclinations() {
        let b = DensityBlob::new(DefectKind::Dislocation, [0.0, 0.0, 0.1], [0.0, 0.0], 0.25).unwrap();
        let st = scene_state(161, &[b], [0.0, 0.0]);
        let a = [-1.0, 1.0];
        let c = [1.0, 1.5];
        let p1 = Polyline::new(alloc::vec![a, [a[0], c[1]], c], false).unwrap();
        let p2 = Polyline::new(alloc::vec![a, [c[0], a[1]], c], false).unwrap();
        let w1 = bravais_rotation(&st, [0.0; 3], &p1, 1e-8).unwrap().value;
        let w2 = bravais_rotation(&st, [0.0; 3], &p2, 1e-8).unwrap().value;
        for k in 0..3 {
            assert_abs_diff_eq!(w1[k], w2[k], epsilon = 1e-4);
        }
    }
}
