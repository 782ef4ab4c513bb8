//! Bravais metric, symmetric and nonsymmetric connections, torsion,
//! contortion and curvature.
//!
//! All indices are lower; raising uses the small-strain inverse metric.
//! Slot maps: connection `[k][i][j] = Γ_{k;ij}`; torsion `[k][i][j] = T_{k;ij}`;
//! curvature `[l][k][m][q] = R_{l;kmq}`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{arg, Error, Result, Warning};
use crate::grid::{gradient, laplacian, Grid2D, TensorField};
use crate::tensor::{eps, eps2, leading_minors, PLANE, Z};

/// Small-strain guard on `max |E|` for the Bravais metric.
pub const DEFAULT_STRAIN_GUARD: f64 = 0.1;

/// A symmetric positive-definite metric with its small-strain inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    g: TensorField,
    g_inv: TensorField,
    warnings: Vec<Warning>,
}

impl Metric {
    /// Checks symmetry and the leading minors of `g` at every node.
    pub fn new(g: TensorField, g_inv: TensorField) -> Result<Self> {
        g.require_rank(2, "metric")?;
        g_inv.require_rank(2, "inverse metric")?;
        if g.grid() != g_inv.grid() {
            return Err(arg("metric and inverse live on different grids"));
        }
        g.require_symmetric("metric")?;
        for n in 0..g.grid().node_count() {
            let v = g.node(n);
            let m = [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]];
            if leading_minors(&m).iter().any(|d| !(*d > 0.0)) {
                let p = g.grid().point(n);
                return Err(Error::Construction(format!(
                    "metric is not positive definite at ({}, {})",
                    p[0], p[1]
                )));
            }
        }
        Ok(Self {
            g,
            g_inv,
            warnings: Vec::new(),
        })
    }

    pub fn euclidean(grid: Grid2D) -> Self {
        let id = TensorField::from_fn(grid, 2, |_, o| {
            o[0] = 1.0;
            o[4] = 1.0;
            o[8] = 1.0;
        })
        .expect("rank 2");
        Self {
            g: id.clone(),
            g_inv: id,
            warnings: Vec::new(),
        }
    }

    pub fn g(&self) -> &TensorField {
        &self.g
    }
    pub fn g_inv(&self) -> &TensorField {
        &self.g_inv
    }
    pub fn grid(&self) -> &Grid2D {
        self.g.grid()
    }
    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }
    pub(crate) fn push_warning(&mut self, w: Warning) {
        self.warnings.push(w);
    }

    /// `s² g` with inverse `s⁻² g_inv`, for a positive scalar field `s`.
    pub fn conformal(&self, s: &TensorField) -> Result<Metric> {
        s.require_rank(0, "conformal factor")?;
        let g = self.g.zip_map(s, 2, |_, gv, sv, o| {
            for (a, b) in o.iter_mut().zip(gv) {
                *a = sv[0] * sv[0] * b;
            }
        })?;
        let gi = self.g_inv.zip_map(s, 2, |_, gv, sv, o| {
            for (a, b) in o.iter_mut().zip(gv) {
                *a = b / (sv[0] * sv[0]);
            }
        })?;
        let mut m = Metric::new(g, gi)?;
        m.warnings = self.warnings.clone();
        Ok(m)
    }
}

/// `g^B = δ − 2E` with small-strain inverse `δ + 2E`.
pub fn bravais_metric(e: &TensorField, strain_guard: f64) -> Result<Metric> {
    e.require_rank(2, "strain")?;
    e.require_symmetric("strain")?;
    let g = e.map(2, |_, ev, o| {
        for i in 0..3 {
            for j in 0..3 {
                o[3 * i + j] = if i == j { 1.0 } else { 0.0 } - 2.0 * ev[3 * i + j];
            }
        }
    });
    let gi = e.map(2, |_, ev, o| {
        for i in 0..3 {
            for j in 0..3 {
                o[3 * i + j] = if i == j { 1.0 } else { 0.0 } + 2.0 * ev[3 * i + j];
            }
        }
    });
    let mut m = Metric::new(g, gi)?;
    let max_strain = e.max_abs();
    if max_strain > strain_guard {
        m.warnings.push(Warning::SmallStrainGuard {
            max_strain,
            guard: strain_guard,
        });
    }
    Ok(m)
}

/// Which metric a connection is meant to be paired with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricTag {
    Unpaired,
    Bravais,
    PointDefect,
}

/// Rank-3 connection field `Γ_{k;ij}` stored `[k][i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    gamma: TensorField,
    symmetric: bool,
    tag: MetricTag,
}

impl Connection {
    pub fn new(gamma: TensorField, tag: MetricTag) -> Result<Self> {
        gamma.require_rank(3, "connection")?;
        let symmetric = gamma
            .data()
            .chunks_exact(27)
            .all(|c| (0..3).all(|k| (0..3).all(|i| (0..3).all(|j| c[9 * k + 3 * i + j] == c[9 * k + 3 * j + i]))));
        Ok(Self { gamma, symmetric, tag })
    }

    pub fn zero(grid: Grid2D) -> Self {
        Self {
            gamma: TensorField::zeros(grid, 3).expect("rank 3"),
            symmetric: true,
            tag: MetricTag::Unpaired,
        }
    }

    pub fn field(&self) -> &TensorField {
        &self.gamma
    }
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    pub fn tag(&self) -> MetricTag {
        self.tag
    }
    pub fn grid(&self) -> &Grid2D {
        self.gamma.grid()
    }

    /// `½ (Γ_{k;ji} − Γ_{k;ij})`: with `Γ = Γ^B − ΔΓ` this is the skew part
    /// of `ΔΓ` in its last two slots, i.e. the dislocation torsion.
    pub fn torsion(&self) -> TensorField {
        self.gamma.map(3, |_, g, o| {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        o[9 * k + 3 * i + j] = 0.5 * (g[9 * k + 3 * j + i] - g[9 * k + 3 * i + j]);
                    }
                }
            }
        })
    }
}

/// `Γ^B_{k;ij} = ½ (∂_i g_kj + ∂_j g_ki − ∂_k g_ij)`.
pub fn christoffel_bravais(m: &Metric) -> Result<Connection> {
    let dg = gradient(m.g())?; // [d][a][b]
    let gamma = dg.map(3, |_, d, o| {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    o[9 * k + 3 * i + j] =
                        0.5 * (d[9 * i + 3 * k + j] + d[9 * j + 3 * k + i] - d[9 * k + 3 * i + j]);
                }
            }
        }
    });
    Connection::new(gamma, MetricTag::Bravais)
}

/// Nodewise `T_{k;ij} = −½ ε_ijp Λ_pk`.
pub fn torsion_at(lambda: &[f64]) -> [f64; 27] {
    let mut t = [0.0; 27];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for p in 0..3 {
                    s += eps(i, j, p) * lambda[3 * p + k];
                }
                t[9 * k + 3 * i + j] = -0.5 * s;
            }
        }
    }
    t
}

/// Nodewise `ΔΓ_{k;ij} = T_{j;ik} + T_{i;jk} − T_{k;ji}`.
pub fn contortion_at(t: &[f64]) -> [f64; 27] {
    let mut d = [0.0; 27];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                d[9 * k + 3 * i + j] = t[9 * j + 3 * i + k] + t[9 * i + 3 * j + k] - t[9 * k + 3 * j + i];
            }
        }
    }
    d
}

/// Connection contortion written through the dislocation contortion `κ`
/// alone, valid when the disclination density vanishes:
///
/// `ΔΓ_{k;ij} = ε_ki κ_zj` (k, i, j in-plane),
/// `ΔΓ_{k;iz} = ε_iτ κ_τk`, `ΔΓ_{k;zj} = ε_jτ κ_τk` (k in-plane),
/// `ΔΓ_{z;ij} = −ε_ij κ_zz` (i, j in-plane), all other entries zero.
pub fn contortion_from_kappa_at(kappa: &[f64]) -> [f64; 27] {
    let mut d = [0.0; 27];
    for k in PLANE {
        for i in PLANE {
            for j in PLANE {
                d[9 * k + 3 * i + j] = eps2(k, i) * kappa[3 * Z + j];
            }
            d[9 * k + 3 * i + Z] = PLANE.iter().map(|&t| eps2(i, t) * kappa[3 * t + k]).sum();
            d[9 * k + 3 * Z + i] = PLANE.iter().map(|&t| eps2(i, t) * kappa[3 * t + k]).sum();
        }
    }
    for i in PLANE {
        for j in PLANE {
            d[9 * Z + 3 * i + j] = -eps2(i, j) * kappa[3 * Z + Z];
        }
    }
    d
}

/// Dislocation torsion field.
pub fn dislocation_torsion(lambda: &TensorField) -> Result<TensorField> {
    lambda.require_rank(2, "dislocation density")?;
    Ok(lambda.map(3, |_, l, o| o.copy_from_slice(&torsion_at(l))))
}

/// Connection contortion field from a torsion field.
pub fn connection_contortion(t: &TensorField) -> Result<TensorField> {
    t.require_rank(3, "torsion")?;
    Ok(t.map(3, |_, tv, o| o.copy_from_slice(&contortion_at(tv))))
}

/// `Γ = Γ^B − ΔΓ`.
pub fn full_connection(bravais: &Connection, delta: &TensorField) -> Result<Connection> {
    Connection::new(bravais.field().sub(delta)?, MetricTag::Bravais)
}

/// How the connection's first slot is contracted in `∇g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexContraction {
    /// `∂_k g_ij − Γ_{j;ik} − Γ_{i;jk}`: all indices lower, no metric factor.
    Lowered,
    /// `∂_k g_ij − Γ_{l;ik} g_lj − Γ_{l;jk} g_li`.
    Metric,
}

/// `∇_k g_ij` stored `[k][i][j]`.
pub fn metric_compatibility_residual(
    conn: &Connection,
    m: &Metric,
    contraction: IndexContraction,
) -> Result<TensorField> {
    let dg = gradient(m.g())?;
    let mut out = TensorField::zeros(*m.grid(), 3)?;
    if conn.grid() != m.grid() {
        return Err(arg("connection and metric live on different grids"));
    }
    for n in 0..m.grid().node_count() {
        let (d, g, gm) = (dg.node(n), conn.field().node(n), m.g().node(n));
        let o = out.node_mut(n);
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = d[9 * k + 3 * i + j];
                    match contraction {
                        IndexContraction::Lowered => {
                            s -= g[9 * j + 3 * i + k] + g[9 * i + 3 * j + k];
                        }
                        IndexContraction::Metric => {
                            for l in 0..3 {
                                s -= g[9 * l + 3 * i + k] * gm[3 * l + j] + g[9 * l + 3 * j + k] * gm[3 * l + i];
                            }
                        }
                    }
                    o[9 * k + 3 * i + j] = s;
                }
            }
        }
    }
    Ok(out)
}

/// Quadratic term of the curvature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureForm {
    /// `(∂_q Γ_{l;km} + g̃_np Γ_{n;km} Γ_{p;lq})_[mq]`, the Bravais form.
    Bravais,
    /// `(∂_q Γ_{l;km} + Γ_{l;pq} Γ_{p;km})_[mq]`, the commutator of the
    /// transport law `dv_i = −Γ_{i;jβ} v_j dx_β`.
    Transport,
}

/// Curvature field `R_{l;kmq}` stored `[l][k][m][q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature {
    r: TensorField,
}

impl Curvature {
    pub fn from_field(r: TensorField) -> Result<Self> {
        r.require_rank(4, "curvature")?;
        Ok(Self { r })
    }

    pub fn field(&self) -> &TensorField {
        &self.r
    }

    /// `R_kq = R_{p;kpq}`.
    pub fn ricci(&self) -> TensorField {
        self.r.map(2, |_, r, o| {
            for k in 0..3 {
                for q in 0..3 {
                    o[3 * k + q] = (0..3).map(|p| r[27 * p + 9 * k + 3 * p + q]).sum();
                }
            }
        })
    }

    /// `½ R_pp`.
    pub fn gauss(&self) -> TensorField {
        self.ricci().map(0, |_, r, o| o[0] = 0.5 * (r[0] + r[4] + r[8]))
    }

    /// `G_ij = −¼ ε_lki ε_mqj R_{l;kmq}`.
    pub fn einstein(&self) -> TensorField {
        self.r.map(2, |_, r, o| {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for l in 0..3 {
                        for k in 0..3 {
                            let a = eps(l, k, i);
                            if a == 0.0 {
                                continue;
                            }
                            for m in 0..3 {
                                for q in 0..3 {
                                    let b = eps(m, q, j);
                                    if b != 0.0 {
                                        s += a * b * r[27 * l + 9 * k + 3 * m + q];
                                    }
                                }
                            }
                        }
                    }
                    o[3 * i + j] = -0.25 * s;
                }
            }
        })
    }

    /// `max |R_{l;kmq} + R_{l;kqm}|`.
    pub fn skew_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for c in self.r.data().chunks_exact(81) {
            for lk in 0..9 {
                for a in 0..3 {
                    for b in 0..3 {
                        m = m.max((c[9 * lk + 3 * a + b] + c[9 * lk + 3 * b + a]).abs());
                    }
                }
            }
        }
        m
    }

    pub fn add(&self, other: &Curvature) -> Result<Curvature> {
        Ok(Curvature { r: self.r.add(&other.r)? })
    }

    pub fn sub(&self, other: &Curvature) -> Result<Curvature> {
        Ok(Curvature { r: self.r.sub(&other.r)? })
    }
}

/// Curvature of a connection field (any rank-3 field, signed as given).
pub fn curvature_of(gamma: &TensorField, m: &Metric, form: CurvatureForm) -> Result<Curvature> {
    gamma.require_rank(3, "connection")?;
    let dgam = gradient(gamma)?; // [q][l][k][m]
    let mut out = TensorField::zeros(*gamma.grid(), 4)?;
    for n in 0..gamma.grid().node_count() {
        let (d, g, gi) = (dgam.node(n), gamma.node(n), m.g_inv().node(n));
        // A_{l;kmq} before the [mq] commutator.
        let mut a = [0.0; 81];
        for l in 0..3 {
            for k in 0..3 {
                for mm in 0..3 {
                    for q in 0..3 {
                        let mut s = d[27 * q + 9 * l + 3 * k + mm];
                        match form {
                            CurvatureForm::Bravais => {
                                for nn in 0..3 {
                                    let gk = g[9 * nn + 3 * k + mm];
                                    if gk == 0.0 {
                                        continue;
                                    }
                                    for p in 0..3 {
                                        s += gi[3 * nn + p] * gk * g[9 * p + 3 * l + q];
                                    }
                                }
                            }
                            CurvatureForm::Transport => {
                                for p in 0..3 {
                                    s += g[9 * l + 3 * p + q] * g[9 * p + 3 * k + mm];
                                }
                            }
                        }
                        a[27 * l + 9 * k + 3 * mm + q] = s;
                    }
                }
            }
        }
        let o = out.node_mut(n);
        for lk in 0..9 {
            for mm in 0..3 {
                for q in 0..3 {
                    o[9 * lk + 3 * mm + q] = a[9 * lk + 3 * mm + q] - a[9 * lk + 3 * q + mm];
                }
            }
        }
    }
    Curvature::from_field(out)
}

/// Curvature of a connection paired with `m`.
pub fn riemann_curvature(conn: &Connection, m: &Metric, form: CurvatureForm) -> Result<Curvature> {
    curvature_of(conn.field(), m, form)
}

/// `−Δ(E^s_pp) − R^B`.
pub fn gauss_trace_check(es_trace: &TensorField, r_gauss: &TensorField) -> Result<TensorField> {
    es_trace.require_rank(0, "solenoidal trace")?;
    r_gauss.require_rank(0, "Gauss curvature")?;
    laplacian(es_trace).scaled(-1.0).sub(r_gauss)
}
