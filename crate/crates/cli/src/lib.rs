//! Batch front end: configuration, experiment drivers, verification suites and SVG/CSV emission.

pub mod config;
pub mod output;
pub mod render;
pub mod run;
pub mod synth;
pub mod verify;

use std::io;
use std::path::PathBuf;

pub use config::{Overrides, RunConfig};
pub use render::{cmd_render, render_svg, Scene};
pub use run::{cmd_run_pipeline, run_pipeline, PipelineReport};
pub use synth::{cmd_synth_alpha, convergent_table, synth_alpha};
pub use verify::{cmd_verify, run_verify, Suite, VerifyReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: parse error at line {line}, column {column}: {msg}")]
    Parse { origin: String, line: usize, column: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Artifact(String),
    #[error(transparent)]
    Arith(#[from] cf_arith::CfError),
    #[error(transparent)]
    Map(#[from] mapkit::MapError),
    #[error(transparent)]
    Curve(#[from] brouwer::BrouwerError),
}

/// What a subcommand wrote and whether all of its checks passed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

impl Outcome {
    /// Process exit code: 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}
