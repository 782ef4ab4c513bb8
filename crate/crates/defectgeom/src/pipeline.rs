//! The five pipelines behind the subcommands. Each writes its artifacts into
//! `cfg.out` and returns a short human-readable summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use defectgeom_core::evolution::{
    conservation_residual, project_conservation, step_contortion, step_point_defects, EvolutionConfig,
    ProjectorOptions, SpeciesParams,
};
use defectgeom_core::geometry::riemann_curvature;
use defectgeom_core::kinematics::{
    burgers_tensor, burgers_vector, completed_burgers, completed_frank, frank_tensor, frank_vector, kroener_residual,
};
use defectgeom_core::point_defects::{HatOptions, PointDefectState};
use defectgeom_core::transport::{geodesic_trace, holonomy_gap, parallel_transport_measured};
use defectgeom_core::{CurvatureForm, Grid2D, SurfaceRegion, TensorField};

use crate::config::{EvolveSpec, Pipeline, RunConfig, SpeciesSpec};
use crate::error::{invalid, io_err, Result};
use crate::io::{sci, write_field, Format};
use crate::scene::{assessment_mask, SceneFields};
use crate::verify::run_verify;

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(io_err(out))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn export(cfg: &RunConfig, name: &str, f: &TensorField) -> Result<()> {
    write_field(f, cfg.out.join(format!("{name}.csv")), Format::Csv)?;
    if cfg.vtk {
        write_field(f, cfg.out.join(format!("{name}.vtk")), Format::Vtk)?;
    }
    Ok(())
}

fn base_grid(cfg: &RunConfig) -> Result<Grid2D> {
    let mut g = cfg.grid.grid()?;
    for _ in 0..cfg.refine {
        g = g.refined();
    }
    Ok(g)
}

fn scalar_or_zero(spec: Option<defectgeom_core::defects::ScalarSpec>, g: Grid2D) -> TensorField {
    match spec {
        Some(s) => s.field(g),
        None => TensorField::scalar_fn(g, |_| 0.0),
    }
}

/// Runs one pipeline; the result is the process exit code and the summary.
pub fn run(cfg: &RunConfig, pipeline: Pipeline) -> Result<(i32, String)> {
    prepare(&cfg.out)?;
    match pipeline {
        Pipeline::Verify => {
            let report = run_verify(cfg)?;
            let text = report.render();
            write_text(&cfg.out.join("verify_report.txt"), &text)?;
            Ok((report.exit_code(), text))
        }
        Pipeline::Analyze => analyze(cfg).map(|s| (0, s)),
        Pipeline::Transport => transport(cfg).map(|s| (0, s)),
        Pipeline::Geodesic => geodesic(cfg).map(|s| (0, s)),
        Pipeline::Evolve => evolve(cfg).map(|s| (0, s)),
    }
}

/// Computes every derived field of the scene and writes it out.
pub fn analyze(cfg: &RunConfig) -> Result<String> {
    let g = base_grid(cfg)?;
    let f = SceneFields::build(&cfg.scene, g, &cfg.geometry)?;
    let x0 = cfg.scene.reference;
    let curvature = riemann_curvature(&f.connection, &f.metric, cfg.geometry.curvature_form)?;
    let bravais_curvature = riemann_curvature(&f.bravais, &f.metric, CurvatureForm::Bravais)?;
    let fields: Vec<(&str, TensorField)> = vec![
        ("strain", f.strain.clone()),
        ("disclination_density", f.theta.clone()),
        ("dislocation_density", f.lambda.clone()),
        ("contortion", f.kappa.clone()),
        ("incompatibility", f.eta.clone()),
        ("frank_tensor", frank_tensor(&f.strain)?),
        ("burgers_tensor", burgers_tensor(&f.strain, x0)?),
        ("completed_frank", completed_frank(&f.strain, &f.kappa)?),
        ("completed_burgers", completed_burgers(&f.strain, &f.kappa, x0)?),
        ("kroener_residual", kroener_residual(&f.strain, &f.theta, &f.kappa)?),
        ("conservation_residual", conservation_residual(&f.kappa)?),
        ("bravais_metric", f.metric.g().clone()),
        ("bravais_christoffel", f.bravais.field().clone()),
        ("torsion", f.torsion.clone()),
        ("connection_contortion", f.delta.clone()),
        ("connection", f.connection.field().clone()),
        ("curvature", curvature.field().clone()),
        ("ricci", curvature.ricci()),
        ("bravais_einstein", bravais_curvature.einstein()),
        ("bravais_gauss", bravais_curvature.gauss()),
    ];
    prepare(&cfg.out)?;
    for (name, field) in &fields {
        export(cfg, name, field)?;
    }

    let mut s = String::new();
    let _ = writeln!(s, "grid {}x{} h={}", g.nx(), g.ny(), sci(g.spacing()));
    let whole = SurfaceRegion::whole(g);
    let b = burgers_vector(&f.lambda, &whole)?;
    let w = frank_vector(&f.theta, &whole)?;
    let _ = writeln!(s, "burgers_vector {} {} {}", sci(b[0]), sci(b[1]), sci(b[2]));
    let _ = writeln!(s, "frank_vector {} {} {}", sci(w[0]), sci(w[1]), sci(w[2]));
    let _ = writeln!(s, "curvature_skew_defect {}", sci(curvature.skew_defect()));

    let mut written = fields.len();
    if cfg.scene.vacancies.is_some() || cfg.scene.interstitials.is_some() {
        let st = PointDefectState::new(
            scalar_or_zero(cfg.scene.vacancies, g),
            scalar_or_zero(cfg.scene.interstitials, g),
            &f.metric,
            &f.delta,
            &HatOptions::default(),
        )?;
        export(cfg, "point_defect_metric", st.g_prime.g())?;
        export(cfg, "nonmetricity", &st.metric_nonmetricity()?)?;
        export(cfg, "hat_connection", st.solution.connection.field())?;
        export(cfg, "curvature_identity_residual", &st.identity_residual()?)?;
        written += 4;
        let _ = writeln!(
            s,
            "hat_fixed_point iterations={} residual={}",
            st.solution.iterations,
            sci(st.solution.residual)
        );
        for warn in st.warnings() {
            let _ = writeln!(s, "warning {warn}");
        }
    }
    for warn in &f.warnings {
        let _ = writeln!(s, "warning {warn}");
    }
    let _ = writeln!(s, "fields_written {written}");
    write_text(&cfg.out.join("analyze_summary.txt"), &s)?;
    Ok(s)
}

/// Holonomy of every configured loop and transport along every path.
pub fn transport(cfg: &RunConfig) -> Result<String> {
    if cfg.transport.loops.is_empty() && cfg.transport.paths.is_empty() {
        return Err(invalid("transport", "no loop or path configured"));
    }
    let g = base_grid(cfg)?;
    let f = SceneFields::build(&cfg.scene, g, &cfg.geometry)?;
    let v0 = cfg.transport.vector;
    let mut hol = String::from("loop,signed_area,metric_length,gap1,gap2,gap3,predicted1,predicted2,predicted3\n");
    for (i, lp) in cfg.transport.loops.iter().enumerate() {
        let (gap, pred) = holonomy_gap(&f.connection, &f.metric, lp, v0)?;
        let len = parallel_transport_measured(&f.connection, &f.metric, v0, lp)?
            .metric_length
            .unwrap_or(f64::NAN);
        let _ = write!(hol, "{i},{},{}", sci(lp.signed_area()), sci(len));
        for v in gap.iter().chain(pred.iter()) {
            let _ = write!(hol, ",{}", sci(*v));
        }
        hol.push('\n');
    }
    let mut paths = String::from("path,vertex,x,y,v1,v2,v3\n");
    for (i, p) in cfg.transport.paths.iter().enumerate() {
        let r = parallel_transport_measured(&f.connection, &f.metric, v0, p)?;
        for (k, (x, v)) in p.vertices().iter().zip(&r.trace).enumerate() {
            let _ = writeln!(
                paths,
                "{i},{k},{},{},{},{},{}",
                sci(x[0]),
                sci(x[1]),
                sci(v[0]),
                sci(v[1]),
                sci(v[2])
            );
        }
    }
    write_text(&cfg.out.join("holonomy.csv"), &hol)?;
    write_text(&cfg.out.join("transport.csv"), &paths)?;
    Ok(format!(
        "{} loops -> holonomy.csv, {} paths -> transport.csv\n",
        cfg.transport.loops.len(),
        cfg.transport.paths.len()
    ))
}

/// Traces every configured geodesic.
pub fn geodesic(cfg: &RunConfig) -> Result<String> {
    if cfg.geodesics.is_empty() {
        return Err(invalid("geodesic", "no geodesic configured"));
    }
    let g = base_grid(cfg)?;
    let f = SceneFields::build(&cfg.scene, g, &cfg.geometry)?;
    let mut csv = String::from("geodesic,vertex,x,y\n");
    let mut s = String::new();
    for (i, spec) in cfg.geodesics.iter().enumerate() {
        let norm = spec.direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(invalid("geodesic.direction", "must be non-zero"));
        }
        let tau = spec.direction.map(|v| v / norm);
        let tr = geodesic_trace(&f.connection, spec.start, tau, spec.length)?;
        for (k, p) in tr.path.vertices().iter().enumerate() {
            let _ = writeln!(csv, "{i},{k},{},{}", sci(p[0]), sci(p[1]));
        }
        let end = tr.path.end();
        let _ = writeln!(
            s,
            "geodesic {i}: end ({}, {}) tangent ({}, {}, {}) exited={}",
            sci(end[0]),
            sci(end[1]),
            sci(tr.tangent[0]),
            sci(tr.tangent[1]),
            sci(tr.tangent[2]),
            tr.exited
        );
    }
    write_text(&cfg.out.join("geodesics.csv"), &csv)?;
    write_text(&cfg.out.join("geodesic_summary.txt"), &s)?;
    Ok(s)
}

fn species(s: &SpeciesSpec) -> SpeciesParams {
    SpeciesParams {
        diffusivity: s.diffusivity,
        thermodiffusivity: s.thermodiffusivity,
        boundary: s.boundary,
    }
}

/// Core stepping configuration for an evolve spec on grid `g`.
pub fn evolution_config(spec: &EvolveSpec, cfg: &RunConfig, g: Grid2D) -> Result<EvolutionConfig> {
    let mut ec = EvolutionConfig::new(spec.dt, spec.t_end);
    ec.vacancy = species(&spec.vacancy);
    ec.interstitial = species(&spec.interstitial);
    ec.recombination = spec.recombination;
    ec.kappa_diffusivity = EvolutionConfig::isotropic_kappa_diffusivity(spec.kappa_diffusivity);
    ec.kappa_thermodiffusivity = EvolutionConfig::isotropic_kappa_diffusivity(spec.kappa_thermodiffusivity);
    ec.kappa_boundary = spec.kappa_boundary;
    if spec.velocity != [0.0, 0.0] {
        let v = spec.velocity;
        ec.velocity = Some(TensorField::from_fn(g, 1, |_, o| {
            o[0] = v[0];
            o[1] = v[1];
        })?);
    }
    ec.temperature = cfg.scene.temperature.map(|t| t.field(g));
    Ok(ec)
}

/// Steps concentrations and contortion to `t_end`, logging integral
/// diagnostics every `output_every` steps.
pub fn evolve(cfg: &RunConfig) -> Result<String> {
    let spec = cfg.evolve.as_ref().ok_or_else(|| invalid("evolve", "section missing"))?;
    let g = base_grid(cfg)?;
    let f = SceneFields::build(&cfg.scene, g, &cfg.geometry)?;
    let ec = evolution_config(spec, cfg, g)?;
    let mut cv = scalar_or_zero(cfg.scene.vacancies, g);
    let mut ci = scalar_or_zero(cfg.scene.interstitials, g);
    let mut kappa = f.kappa.clone();
    let mask = assessment_mask(&cfg.scene, g, 2);
    let r0 = conservation_residual(&kappa)?.max_abs_in(&mask);
    let steps = ec.step_count();
    let mut log = String::from(
        "step,t,mass_v,mass_i,sink_v,sink_i,boundary_flux_v,boundary_flux_i,clipped_v,clipped_i,closure_v,closure_i,kappa_residual,projections\n",
    );
    let mut projections = 0usize;
    let mut worst_closure: f64 = 0.0;
    for step in 1..=steps {
        let pd = step_point_defects(&cv, &ci, &ec)?;
        kappa = step_contortion(&kappa, &ec)?;
        let mut r = conservation_residual(&kappa)?.max_abs_in(&mask);
        if spec.project && r > 10.0 * r0 && r > 0.0 {
            kappa = project_conservation(&kappa, &ProjectorOptions::default())?.kappa;
            projections += 1;
            r = conservation_residual(&kappa)?.max_abs_in(&mask);
        }
        cv = pd.c_v;
        ci = pd.c_i;
        let (bv, bi) = (pd.vacancy, pd.interstitial);
        worst_closure = worst_closure.max(bv.closure_error()).max(bi.closure_error());
        if step % spec.output_every == 0 || step == steps {
            let cols = [
                step as f64 * ec.dt,
                bv.mass_after,
                bi.mass_after,
                bv.sink,
                bi.sink,
                bv.boundary_flux,
                bi.boundary_flux,
                bv.clipped,
                bi.clipped,
                bv.closure_error(),
                bi.closure_error(),
                r,
            ];
            let _ = write!(log, "{step}");
            for c in cols {
                let _ = write!(log, ",{}", sci(c));
            }
            let _ = writeln!(log, ",{projections}");
        }
    }
    write_text(&cfg.out.join("evolution.csv"), &log)?;
    export(cfg, "vacancies_final", &cv)?;
    export(cfg, "interstitials_final", &ci)?;
    export(cfg, "contortion_final", &kappa)?;
    Ok(format!(
        "{steps} steps of dt={} -> evolution.csv; worst budget closure {}; projections {projections}\n",
        sci(ec.dt),
        sci(worst_closure)
    ))
}
