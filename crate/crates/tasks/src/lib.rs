//! Futures-based task engine.
//!
//! Work is submitted as closures and comes back as [`TaskHandle`]s. A handle
//! can be joined by the orchestrating thread, or extended with continuations
//! that run once the antecedent completes. Kernels over an index range can be
//! launched as a configurable number of contiguous chunk tasks through
//! [`Engine::launch_split_kernel`].
//!
//! Workers own FIFO deques and steal from random victims when idle.
//! Continuations run inline on whichever worker completes the antecedent.
//!
//! Blocking on a handle from inside a task body is not supported: joins belong
//! to the orchestration layer (or to continuations).

mod engine;
mod handle;
mod split;

pub use engine::{Engine, EngineConfig, QueueDiscipline, Spawner};
pub use handle::{when_all, TaskHandle, TaskState};
pub use split::{split_chunks, SplitPolicy};

use thiserror::Error;

/// Failure carried by a task handle.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("task failed: {message}")]
pub struct TaskError {
    pub message: String,
}

impl TaskError {
    pub fn new(message: impl Into<String>) -> Self {
        TaskError {
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("engine has been shut down")]
    ShutDown,
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
}
