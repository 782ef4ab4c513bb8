//! The verification report: every invariant of the pipeline evaluated on the
//! configured scene, one row per check.

use std::fmt::Write as _;

use defectgeom_core::defects::{solenoidal_trace, DefectKind};
use defectgeom_core::evolution::conservation_residual;
use defectgeom_core::geometry::{
    connection_contortion, contortion_from_kappa_at, dislocation_torsion, gauss_trace_check,
    metric_compatibility_residual, riemann_curvature,
};
use defectgeom_core::grid::{line_integral, observed_order, partial, partial2};
use defectgeom_core::kinematics::{burgers_vector, completed_burgers, contortion_from_densities, kroener_residual};
use defectgeom_core::point_defects::{HatOptions, PointDefectState};
use defectgeom_core::transport::holonomy_gap;
use defectgeom_core::{Axis, CurvatureForm, Grid2D, IndexContraction, NodeMask, Polyline, SurfaceRegion, TensorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::Result;
use crate::scene::{assessment_mask, SceneFields};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Nothing to check in this scene.
    Skip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: &'static str,
    pub anchor: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    /// Observed order between the two finest grids of a refinement study.
    pub order: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub grids: Vec<Grid2D>,
    pub rows: Vec<Row>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    /// 0 iff every row passes (skipped rows do not count).
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let fine = self.grids.last().expect("at least one grid");
        let _ = writeln!(s, "# defectgeom verification report");
        let _ = writeln!(
            s,
            "# grid {}x{} h={:.6e} levels={}",
            fine.nx(),
            fine.ny(),
            fine.spacing(),
            self.grids.len()
        );
        let _ = writeln!(
            s,
            "{:<24} {:<38} {:>12} {:>12} {:>7}  result",
            "check", "anchor", "residual", "tolerance", "order"
        );
        for r in &self.rows {
            let order = r.order.map_or_else(|| "-".to_string(), |o| format!("{o:.2}"));
            let status = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            let _ = write!(
                s,
                "{:<24} {:<38} {:>12.4e} {:>12.4e} {:>7}  {}",
                r.name, r.anchor, r.residual, r.tolerance, order, status
            );
            if !r.note.is_empty() {
                let _ = write!(s, "  ({})", r.note);
            }
            s.push('\n');
        }
        let passed = self.rows.iter().filter(|r| r.status == Status::Pass).count();
        let failed = self.rows.iter().filter(|r| r.status == Status::Fail).count();
        let _ = writeln!(s, "summary: {passed} passed, {failed} failed, {} skipped", self.rows.len() - passed - failed);
        s
    }
}

/// One measurement: normalised residual and the tolerance it is held to.
enum Measure {
    Value { residual: f64, tolerance: f64, note: String },
    Skip(String),
}

fn value(residual: f64, tolerance: f64) -> Measure {
    Measure::Value {
        residual,
        tolerance,
        note: String::new(),
    }
}

const TINY: f64 = 1e-300;

/// Residuals below this are rounding noise and carry no order.
const ROUNDING_FLOOR: f64 = 1e-12;

struct Check {
    name: &'static str,
    anchor: &'static str,
    run: fn(&Ctx) -> Result<Measure>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    f: SceneFields,
    mask: NodeMask,
}

impl Ctx<'_> {
    fn tol(&self, name: &str) -> f64 {
        self.cfg.tolerances.get(name)
    }

    /// Largest second derivative of the strain on the mask.
    fn strain_curvature(&self) -> f64 {
        let e = &self.f.strain;
        let xy = partial(&partial(e, Axis::X), Axis::Y);
        [partial2(e, Axis::X), partial2(e, Axis::Y), xy]
            .iter()
            .map(|d| d.max_abs_in(&self.mask))
            .fold(0.0, f64::max)
    }

    fn density_scale(&self) -> f64 {
        self.f
            .theta
            .max_abs_in(&self.mask)
            .max(self.f.lambda.max_abs_in(&self.mask))
    }

    fn faulted_kappa(&self) -> TensorField {
        self.f.kappa.scaled(self.cfg.verify.kappa_fault)
    }
}

const CHECKS: [Check; 11] = [
    Check {
        name: "kroener",
        anchor: "macroscopic Kroener formula",
        run: |c| {
            let r = kroener_residual(&c.f.strain, &c.f.theta, &c.faulted_kappa())?;
            let scale = c.strain_curvature().max(c.density_scale()).max(TINY);
            Ok(value(r.max_abs_in(&c.mask) / scale, c.tol("kroener")))
        },
    },
    Check {
        name: "metric_compatibility",
        anchor: "Bravais metric compatibility",
        run: |c| {
            let r = metric_compatibility_residual(&c.f.connection, &c.f.metric, IndexContraction::Lowered)?;
            Ok(value(r.max_abs_in(&c.mask), c.tol("metric_compatibility")))
        },
    },
    Check {
        name: "torsion_recovery",
        anchor: "torsion of the full connection",
        run: |c| {
            let d = c.f.connection.torsion().sub(&c.f.torsion)?;
            let scale = c.f.torsion.max_abs().max(c.f.connection.field().max_abs()).max(TINY);
            Ok(value(d.max_abs() / scale, c.tol("torsion_recovery")))
        },
    },
    Check {
        name: "contortion_closed_form",
        anchor: "contortion from dislocation density",
        run: contortion_check,
    },
    Check {
        name: "einstein",
        anchor: "Einstein tensor vs incompatibility",
        run: |c| {
            let r = riemann_curvature(&c.f.bravais, &c.f.metric, CurvatureForm::Bravais)?;
            let d = r.einstein().sub(&c.f.eta)?;
            let scale = c.strain_curvature().max(c.f.eta.max_abs_in(&c.mask)).max(TINY);
            Ok(value(d.max_abs_in(&c.mask) / scale, c.tol("einstein")))
        },
    },
    Check {
        name: "gauss_trace",
        anchor: "Gauss curvature trace relation",
        run: |c| {
            let r = riemann_curvature(&c.f.bravais, &c.f.metric, CurvatureForm::Bravais)?;
            let es = solenoidal_trace(&c.cfg.scene.blobs, c.cfg.scene.reference, c.f.grid)?;
            let d = gauss_trace_check(&es, &r.gauss())?;
            let scale = c.strain_curvature().max(c.f.eta.max_abs_in(&c.mask)).max(TINY);
            Ok(value(d.max_abs_in(&c.mask) / scale, c.tol("gauss_trace")))
        },
    },
    Check {
        name: "stokes",
        anchor: "Burgers vector surface vs line",
        run: stokes_check,
    },
    Check {
        name: "holonomy",
        anchor: "holonomy vs curvature flux",
        run: holonomy_check,
    },
    Check {
        name: "conservation",
        anchor: "contortion conservation law",
        run: |c| {
            let r = conservation_residual(&c.faulted_kappa())?;
            if c.density_scale() == 0.0 {
                return Ok(Measure::Skip("no defect density".into()));
            }
            Ok(value(r.max_abs_in(&c.mask) / c.density_scale(), c.tol("conservation")))
        },
    },
    Check {
        name: "hat_fixed_point",
        anchor: "nonmetric connection fixed point",
        run: |c| {
            let Some(st) = point_defect_state(c)? else {
                return Ok(Measure::Skip("no point defects".into()));
            };
            let it = st.solution.iterations;
            let tol = c.tol("hat_fixed_point");
            Ok(Measure::Value {
                residual: st.solution.residual,
                tolerance: tol,
                note: format!("{it} iterations"),
            })
        },
    },
    Check {
        name: "nonmetricity_identity",
        anchor: "nonmetricity curvature identity",
        run: |c| {
            let Some(st) = point_defect_state(c)? else {
                return Ok(Measure::Skip("no point defects".into()));
            };
            let q = st.metric_nonmetricity()?.max_abs();
            if q == 0.0 {
                return Ok(Measure::Skip("uniform excess volume".into()));
            }
            let r = st.identity_residual()?.max_abs_in(&NodeMask::interior(c.f.grid, 3).intersect(&c.mask));
            Ok(value(r / q, c.tol("nonmetricity_identity")))
        },
    },
];

/// Random nodewise `Λ` (seeded) and the scene's own `Λ`, with `Θ = 0`.
fn contortion_check(c: &Ctx) -> Result<Measure> {
    let n = c.cfg.verify.samples;
    let g = Grid2D::new([0.0, 0.0], 1.0, n.div_ceil(3).max(3), 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.cfg.seed);
    let random = TensorField::from_fn(g, 2, |_, o| {
        for v in &mut o[6..9] {
            *v = rng.random_range(-1.0..1.0);
        }
    })?;
    let mut worst: f64 = 0.0;
    for (lam, x0) in [(&random, [0.5, 0.5]), (&c.f.lambda, c.cfg.scene.reference)] {
        let zero = TensorField::zeros(*lam.grid(), 2)?;
        let kappa = contortion_from_densities(lam, &zero, x0)?;
        let direct = connection_contortion(&dislocation_torsion(lam)?)?;
        let closed = kappa.map(3, |_, k, o| o.copy_from_slice(&contortion_from_kappa_at(k)));
        let scale = direct.max_abs().max(TINY);
        worst = worst.max(closed.sub(&direct)?.max_abs() / scale.max(1.0));
    }
    Ok(Measure::Value {
        residual: worst,
        tolerance: c.tol("contortion_closed_form"),
        note: format!("{n} random samples"),
    })
}

fn stokes_check(c: &Ctx) -> Result<Measure> {
    let scene = &c.cfg.scene;
    let g = c.f.grid;
    let h = g.spacing();
    let (lo, hi) = (g.origin(), g.upper());
    let inset = 4.0 * h;
    let region = SurfaceRegion::rectangle([lo[0] + inset, lo[1] + inset], [hi[0] - inset, hi[1] - inset])?;
    let mut declared = [0.0; 3];
    for b in scene.blobs.iter().filter(|b| b.kind == DefectKind::Dislocation) {
        for (d, q) in declared.iter_mut().zip(b.charge) {
            *d += q;
        }
    }
    let mut screws = 0.0;
    let boundary = region.boundary(&g)?;
    for s in &scene.screws {
        if boundary.encloses(s.center) {
            screws += s.burgers;
        }
    }
    let scale = declared.iter().map(|v| v.abs()).fold(screws.abs(), f64::max);
    if scale == 0.0 {
        return Ok(Measure::Skip("no dislocation content".into()));
    }
    let surface = burgers_vector(&c.f.lambda, &region)?;
    let line = line_integral(&completed_burgers(&c.f.strain, &c.f.kappa, scene.reference)?, &boundary)?;
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let screw = if k == 2 { screws } else { 0.0 };
        worst = worst
            .max((surface[k] - declared[k]).abs())
            .max((line[k] - surface[k] - screw).abs());
    }
    Ok(value(worst / scale, c.tol("stokes")))
}

fn holonomy_check(c: &Ctx) -> Result<Measure> {
    let g = c.f.grid;
    let (lo, hi) = (g.origin(), g.upper());
    let centre = c
        .cfg
        .verify
        .holonomy_center
        .unwrap_or([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]);
    let lp = Polyline::square(centre, c.cfg.verify.holonomy_side)?;
    let (gap, predicted) = holonomy_gap(&c.f.connection, &c.f.metric, &lp, c.cfg.transport.vector)?;
    let norm = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let p = norm(predicted);
    if p < 1e-14 {
        return Ok(Measure::Skip(format!("flat loop, gap {:.3e}", norm(gap))));
    }
    let d = norm([gap[0] - predicted[0], gap[1] - predicted[1], gap[2] - predicted[2]]);
    Ok(value(d / p, c.tol("holonomy")))
}

fn point_defect_state(c: &Ctx) -> Result<Option<PointDefectState>> {
    let scene = &c.cfg.scene;
    if scene.vacancies.is_none() && scene.interstitials.is_none() {
        return Ok(None);
    }
    let g = c.f.grid;
    let field = |s: Option<defectgeom_core::defects::ScalarSpec>| match s {
        Some(s) => s.field(g),
        None => TensorField::zeros(g, 0).expect("rank 0"),
    };
    let opts = HatOptions::default();
    Ok(Some(PointDefectState::new(
        field(scene.vacancies),
        field(scene.interstitials),
        &c.f.metric,
        &c.f.delta,
        &opts,
    )?))
}

/// Runs every check on the configured grid and `cfg.refine` refinements.
/// Residuals are reported on the finest grid; failures of individual
/// checks become failing rows.
pub fn run_verify(cfg: &RunConfig) -> Result<VerificationReport> {
    let mut grids = vec![cfg.grid.grid()?];
    for _ in 0..cfg.refine {
        let next = grids.last().unwrap().refined();
        grids.push(next);
    }
    let mut per_grid: Vec<Vec<std::result::Result<Measure, String>>> = Vec::new();
    for g in &grids {
        let f = SceneFields::build(&cfg.scene, *g, &cfg.geometry)?;
        let ctx = Ctx {
            cfg,
            mask: assessment_mask(&cfg.scene, *g, 2),
            f,
        };
        per_grid.push(CHECKS.iter().map(|ch| (ch.run)(&ctx).map_err(|e| e.to_string())).collect());
    }
    let fine = per_grid.pop().unwrap();
    let coarse = per_grid.pop();
    let mut rows = Vec::new();
    for (i, (ch, m)) in CHECKS.iter().zip(fine).enumerate() {
        let tolerance = cfg.tolerances.get(ch.name);
        let row = match m {
            Err(e) => Row {
                name: ch.name,
                anchor: ch.anchor,
                residual: f64::NAN,
                tolerance,
                status: Status::Fail,
                order: None,
                note: e,
            },
            Ok(Measure::Skip(note)) => Row {
                name: ch.name,
                anchor: ch.anchor,
                residual: 0.0,
                tolerance,
                status: Status::Skip,
                order: None,
                note,
            },
            Ok(Measure::Value {
                residual,
                tolerance,
                note,
            }) => {
                let order = match coarse.as_ref().map(|c| &c[i]) {
                    Some(Ok(Measure::Value { residual: rc, .. })) if *rc > ROUNDING_FLOOR && residual > ROUNDING_FLOOR => {
                        let n = grids.len();
                        Some(observed_order(*rc, residual, grids[n - 2].spacing(), grids[n - 1].spacing()))
                    }
                    _ => None,
                };
                Row {
                    name: ch.name,
                    anchor: ch.anchor,
                    residual,
                    tolerance,
                    status: if residual <= tolerance { Status::Pass } else { Status::Fail },
                    order,
                    note,
                }
            }
        };
        rows.push(row);
    }
    Ok(VerificationReport { grids, rows })
}
