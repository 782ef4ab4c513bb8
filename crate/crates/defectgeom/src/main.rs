use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use defectgeom::pipeline;
use defectgeom::{load_config, Pipeline};

/// Non-Riemannian geometry of defective crystals on a 2-D grid.
#[derive(Parser)]
#[command(name = "defectgeom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write every derived field of the scene.
    Analyze(Common),
    /// Evaluate the invariants and print the report; exits 1 on any failure.
    Verify(Common),
    /// Parallel transport around loops and along paths.
    Transport(Common),
    /// Trace autoparallels of the full connection.
    Geodesic(Common),
    /// Step point-defect concentrations and contortion in time.
    Evolve(Common),
}

#[derive(Args)]
struct Common {
    /// Scene and run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides `run.out`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Number of grid refinements (overrides `run.refine`).
    #[arg(long)]
    refine: Option<usize>,
    /// Tolerance override, `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (which, c) = match cli.command {
        Command::Analyze(c) => (Pipeline::Analyze, c),
        Command::Verify(c) => (Pipeline::Verify, c),
        Command::Transport(c) => (Pipeline::Transport, c),
        Command::Geodesic(c) => (Pipeline::Geodesic, c),
        Command::Evolve(c) => (Pipeline::Evolve, c),
    };
    match execute(which, c) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(which: Pipeline, c: Common) -> defectgeom::Result<i32> {
    let mut cfg = load_config(&c.config)?;
    if let Some(out) = c.out {
        cfg.out = out;
    }
    if let Some(r) = c.refine {
        cfg.refine = r;
    }
    for t in &c.tol {
        cfg.tolerances.apply(t)?;
    }
    if let Some(p) = cfg.pipeline.filter(|p| *p != which) {
        return Err(defectgeom::Error::Invalid {
            field: "run.pipeline".into(),
            msg: format!("config names {p:?} but the subcommand is {which:?}"),
        });
    }
    let (code, summary) = pipeline::run(&cfg, which)?;
    print!("{summary}");
    Ok(code)
}
