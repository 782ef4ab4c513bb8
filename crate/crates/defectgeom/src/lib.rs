//! Config loading, field export, the verification report and the pipelines
//! behind the `defectgeom` command.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod scene;
pub mod verify;

pub use config::{load_config, parse_config, Pipeline, RunConfig, Tolerances};
pub use error::{Error, Result};
pub use io::{read_csv, write_field, Format};
pub use verify::{run_verify, Status, VerificationReport};
