//! Experiment driver: single runs, parameter sweeps and the prune-half
//! sample-size measurement, all with simulated oracles.
//!
//! Every run is reproducible from its flags and a single `--seed`, which is
//! expanded into independent streams for the data, the hidden utility
//! vector, the stream order and the random baseline (see [`SeedPlan`]).

pub mod args;
pub mod metrics;
pub mod prune_half;
pub mod run;
pub mod sweep;

pub use metrics::{MetricsRow, OutputFormat};
pub use prune_half::{prune_half_sample_size, pruned_fraction, PruneHalf, SAMPLE_CAP};
pub use run::{run_once, Method, RunSpec, SeedPlan, Source};
pub use sweep::{run_sweep, SweepSpec};

/// Failure classes, mapped to process exit codes by the binary.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Invalid flags or flag combination (exit code 2).
    #[error("usage: {0}")]
    Usage(String),
    /// The run itself failed (exit code 1).
    #[error(transparent)]
    Run(#[from] irm_core::Error),
    #[error("io: {0}")]
    Io(String),
}

impl BenchError {
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Run(_) | BenchError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for BenchError {
    fn from(e: serde_json::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
