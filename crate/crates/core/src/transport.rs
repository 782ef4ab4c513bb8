//! The internal observer: parallel transport, loop holonomy, geodesics and
//! metric length.
//!
//! Transport follows `dv_i = −Γ_{i;jβ} v_j dx_β` with all indices lower and
//! `Γ` sampled bilinearly. Each path segment is integrated with classical RK4
//! on equal substeps no longer than h/2, so splitting a path at a vertex does
//! not change the result.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{arg, domain, Result};
use crate::geometry::{curvature_of, Connection, Curvature, CurvatureForm, Metric};
use crate::grid::{Polyline, TensorField};
use crate::tensor::{Vec3, PLANE, X, Y};

/// Outcome of transporting one vector along a path.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportResult {
    /// Vector at the end of the path.
    pub final_vector: Vec3,
    /// Vector at every path vertex, starting with `v0`.
    pub trace: Vec<Vec3>,
    /// `∫ sqrt(g_ij dx_i dx_j)` when a metric was supplied.
    pub metric_length: Option<f64>,
    /// `final − v0` for closed paths.
    pub gap: Option<Vec3>,
}

fn rhs(gamma: &[f64], v: &Vec3, dx: [f64; 2]) -> Vec3 {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..3 {
            for b in PLANE {
                s += gamma[9 * i + 3 * j + b] * v[j] * dx[b];
            }
        }
        *o = -s;
    }
    out
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn axpy3(v: &Vec3, a: f64, k: &Vec3) -> Vec3 {
    [v[0] + a * k[0], v[1] + a * k[1], v[2] + a * k[2]]
}

fn substeps(a: [f64; 2], b: [f64; 2], h: f64) -> usize {
    let len = libm::hypot(b[0] - a[0], b[1] - a[1]);
    (libm::ceil(len / (0.5 * h)) as usize).max(1)
}

/// Transport across one straight segment.
fn transport_segment(gamma: &TensorField, v: Vec3, a: [f64; 2], b: [f64; 2]) -> Result<Vec3> {
    let n = substeps(a, b, gamma.grid().spacing());
    let d = [(b[0] - a[0]) / n as f64, (b[1] - a[1]) / n as f64];
    let mut g = [0.0; 27];
    let mut v = v;
    for s in 0..n {
        let t0 = s as f64 / n as f64;
        let t1 = (s + 1) as f64 / n as f64;
        gamma.sample_into(lerp(a, b, t0), &mut g)?;
        let k1 = rhs(&g, &v, d);
        gamma.sample_into(lerp(a, b, 0.5 * (t0 + t1)), &mut g)?;
        let k2 = rhs(&g, &axpy3(&v, 0.5, &k1), d);
        let k3 = rhs(&g, &axpy3(&v, 0.5, &k2), d);
        gamma.sample_into(lerp(a, b, t1), &mut g)?;
        let k4 = rhs(&g, &axpy3(&v, 1.0, &k3), d);
        for i in 0..3 {
            v[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
    }
    Ok(v)
}

/// Transports `v0` along `path` through the connection.
pub fn parallel_transport(conn: &Connection, v0: Vec3, path: &Polyline) -> Result<TransportResult> {
    transport_field(conn.field(), v0, path)
}

/// As [`parallel_transport`], also recording the metric length of the path.
pub fn parallel_transport_measured(
    conn: &Connection,
    m: &Metric,
    v0: Vec3,
    path: &Polyline,
) -> Result<TransportResult> {
    let mut r = parallel_transport(conn, v0, path)?;
    r.metric_length = Some(metric_length(m, path)?);
    Ok(r)
}

/// Transport through a raw rank-3 connection field.
pub fn transport_field(gamma: &TensorField, v0: Vec3, path: &Polyline) -> Result<TransportResult> {
    gamma.require_rank(3, "connection")?;
    if !path.inside(gamma.grid()) {
        return Err(domain("transport path leaves the grid"));
    }
    let mut trace = vec![v0];
    let mut v = v0;
    for w in path.vertices().windows(2) {
        v = transport_segment(gamma, v, w[0], w[1])?;
        trace.push(v);
    }
    let gap = path.is_closed().then(|| [v[0] - v0[0], v[1] - v0[1], v[2] - v0[2]]);
    Ok(TransportResult {
        final_vector: v,
        trace,
        metric_length: None,
        gap,
    })
}

/// Leading-order holonomy predicted from curvature:
/// `−sgn(A) ∫_S R_{l;nyx} v0_n dS` over the region enclosed by `lp`, where
/// `R` is the transport form and `sgn(A)` the loop orientation.
///
/// The integral is a signed triangle fan from the first vertex, each triangle
/// split into pieces no wider than h/2 and sampled bilinearly at centroids.
/// The fan's signed areas carry the orientation and handle non-convex loops.
pub fn predicted_gap(curv: &Curvature, lp: &Polyline, v0: Vec3) -> Result<Vec3> {
    if !lp.is_closed() {
        return Err(arg("holonomy needs a closed loop"));
    }
    let integrand = curv.field().map(1, |_, r, o| {
        for (l, ol) in o.iter_mut().enumerate() {
            *ol = -(0..3).map(|n| r[27 * l + 9 * n + 3 * Y + X] * v0[n]).sum::<f64>();
        }
    });
    polygon_integral(&integrand, lp)
}

fn polygon_integral(f: &TensorField, lp: &Polyline) -> Result<Vec3> {
    let piece = 0.5 * f.grid().spacing();
    let vs = lp.vertices();
    let o = vs[0];
    let mut total = [0.0; 3];
    let mut val = [0.0; 3];
    for w in vs[1..].windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ea, eb) = ([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]]);
        let area = 0.5 * (ea[0] * eb[1] - ea[1] * eb[0]);
        if area == 0.0 {
            continue;
        }
        let edge = |u: [f64; 2]| libm::sqrt(u[0] * u[0] + u[1] * u[1]);
        let longest = edge(ea).max(edge(eb)).max(edge([b[0] - a[0], b[1] - a[1]]));
        let m = (libm::ceil(longest / piece) as usize).max(1);
        let da = area / (m * m) as f64;
        let at = |i: f64, j: f64| [o[0] + (i * ea[0] + j * eb[0]) / m as f64, o[1] + (i * ea[1] + j * eb[1]) / m as f64];
        // Upward pieces have centroids at (i + 1/3, j + 1/3), downward ones at (i + 2/3, j + 2/3).
        for i in 0..m {
            for j in 0..m - i {
                let mut add = |p: [f64; 2]| -> Result<()> {
                    f.sample_into(p, &mut val)?;
                    for k in 0..3 {
                        total[k] += da * val[k];
                    }
                    Ok(())
                };
                add(at(i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0))?;
                if i + j + 2 <= m {
                    add(at(i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0))?;
                }
            }
        }
    }
    Ok(total)
}

/// Holonomy gap of `v0` around `lp` from the transport ODE, with its
/// curvature prediction.
pub fn holonomy_gap(conn: &Connection, m: &Metric, lp: &Polyline, v0: Vec3) -> Result<(Vec3, Vec3)> {
    if !lp.is_closed() {
        return Err(arg("holonomy needs a closed loop"));
    }
    let r = parallel_transport(conn, v0, lp)?;
    let curv = curvature_of(conn.field(), m, CurvatureForm::Transport)?;
    Ok((r.gap.expect("closed"), predicted_gap(&curv, lp, v0)?))
}

/// A traced geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicTrace {
    pub path: Polyline,
    pub tangent: Vec3,
    /// The curve reached the grid boundary before the requested arc length.
    pub exited: bool,
}

/// Autoparallel from `start` with initial tangent `tau0` (normalized by the
/// caller), `dx_β/ds = τ_β`, `dτ_l/ds = −Γ_{l;jβ} τ_j τ_β`, RK4 in steps of h/2.
pub fn geodesic_trace(conn: &Connection, start: [f64; 2], tau0: Vec3, arc_length: f64) -> Result<GeodesicTrace> {
    let grid = *conn.grid();
    if !grid.contains(start) {
        return Err(domain("geodesic starts outside the grid"));
    }
    if !(arc_length > 0.0) {
        return Err(arg("arc length must be positive"));
    }
    let gamma = conn.field();
    let n = (libm::ceil(arc_length / (0.5 * grid.spacing())) as usize).max(1);
    let ds = arc_length / n as f64;
    let mut g = [0.0; 27];
    let mut f = |x: [f64; 2], t: &Vec3| -> Option<([f64; 2], Vec3)> {
        gamma.sample_into(x, &mut g).ok()?;
        Some(([t[0], t[1]], rhs(&g, t, [t[0], t[1]])))
    };
    let mut x = start;
    let mut tau = tau0;
    let mut pts = vec![x];
    let mut exited = false;
    for _ in 0..n {
        let step = (|| {
            let (dx1, dt1) = f(x, &tau)?;
            let x2 = [x[0] + 0.5 * ds * dx1[0], x[1] + 0.5 * ds * dx1[1]];
            let (dx2, dt2) = f(x2, &axpy3(&tau, 0.5 * ds, &dt1))?;
            let x3 = [x[0] + 0.5 * ds * dx2[0], x[1] + 0.5 * ds * dx2[1]];
            let (dx3, dt3) = f(x3, &axpy3(&tau, 0.5 * ds, &dt2))?;
            let x4 = [x[0] + ds * dx3[0], x[1] + ds * dx3[1]];
            let (dx4, dt4) = f(x4, &axpy3(&tau, ds, &dt3))?;
            let xn = [
                x[0] + ds * (dx1[0] + 2.0 * dx2[0] + 2.0 * dx3[0] + dx4[0]) / 6.0,
                x[1] + ds * (dx1[1] + 2.0 * dx2[1] + 2.0 * dx3[1] + dx4[1]) / 6.0,
            ];
            if !grid.contains(xn) {
                return None;
            }
            let mut tn = tau;
            for i in 0..3 {
                tn[i] += ds * (dt1[i] + 2.0 * dt2[i] + 2.0 * dt3[i] + dt4[i]) / 6.0;
            }
            Some((xn, tn))
        })();
        match step {
            Some((xn, tn)) => {
                x = xn;
                tau = tn;
                pts.push(x);
            }
            None => {
                exited = true;
                break;
            }
        }
    }
    if pts.len() == 1 {
        pts.push(x);
    }
    Ok(GeodesicTrace {
        path: Polyline::new(pts, false)?,
        tangent: tau,
        exited,
    })
}

/// `∫ sqrt(g_ij dx_i dx_j)` with the midpoint rule on pieces no longer than h/2.
pub fn metric_length(m: &Metric, path: &Polyline) -> Result<f64> {
    metric_length_with(m, path, 0.5 * m.grid().spacing())
}

/// [`metric_length`] with an explicit piece length.
pub fn metric_length_with(m: &Metric, path: &Polyline, max_piece: f64) -> Result<f64> {
    if !(max_piece > 0.0) {
        return Err(arg("piece length must be positive"));
    }
    if !path.inside(m.grid()) {
        return Err(domain("path leaves the grid"));
    }
    let pts = path.subdivided(max_piece);
    let mut g = [0.0; 9];
    let mut total = 0.0;
    for w in pts.windows(2) {
        m.g().sample_into(lerp(w[0], w[1], 0.5), &mut g)?;
        let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
        let q = g[0] * d[0] * d[0] + 2.0 * g[1] * d[0] * d[1] + g[4] * d[1] * d[1];
        total += libm::sqrt(q);
    }
    Ok(total)
}
