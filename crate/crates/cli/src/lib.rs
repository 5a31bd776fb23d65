//! Sweeps, single-point evaluations and figure datasets for the hybrid D2D
//! performance models.

pub mod evaluate;
pub mod figures;
pub mod output;
pub mod sweep;

use std::io;

use d2d_core::params::ParamError;
use thiserror::Error;

pub use evaluate::{evaluate_point, evaluate_tasks, EvalOptions, MetricSet, Task};
pub use figures::{emit_figure_dataset, preset, FigureOutput, Preset, FIGURE_IDS};
pub use output::{Row, Status};
pub use sweep::{parse_sweep, run_experiment, run_experiment_with, SweepSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ParamError),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("unknown figure `{id}`; valid ids are {}", FIGURE_IDS.join(", "))]
    UnknownFigure { id: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Core(#[from] d2d_core::Error),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

/// Exit code for a finished run: 2 if any row failed to converge.
pub fn exit_code(rows: &[Row]) -> i32 {
    if rows.iter().any(|r| r.status.is_numeric_failure()) {
        2
    } else {
        0
    }
}
