//! Scenario construction, benchmark orchestration and CSV output on top of
//! `octomini-core`.

pub mod bench;
pub mod config;
pub mod oracle;
pub mod preset;
pub mod scenario;

pub use bench::{run_benchmark, sweep, BenchOutcome, BenchRecord, RunSettings, SweepGrid};
pub use config::RunConfig;
pub use scenario::{ScenarioConfig, ScenarioKind};

use octomini_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver failed at step {step} (state digest {digest}): {source}")]
    Solver { step: usize, digest: String, source: CoreError },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AppError {
    /// Process exit status: 3 for a failed step, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Solver { .. } => 3,
            _ => 2,
        }
    }
}
