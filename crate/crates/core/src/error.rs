use octomini_tasks::{EngineError, TaskError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("max_level {max_level} with n_edge {n_edge} needs {cells_per_edge} cells per edge, budget is {budget}")]
    CellBudgetExceeded {
        max_level: u32,
        n_edge: usize,
        cells_per_edge: u128,
        budget: usize,
    },

    #[error("coincident expansion centers")]
    DegenerateSeparation,

    #[error("duplicate positions at inputs {0} and {1}")]
    DuplicatePositions(usize, usize),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("vacuum state below floors in leaf {leaf}, cell {cell}")]
    Vacuum { leaf: usize, cell: usize },

    #[error("communication protocol violation: {0}")]
    Protocol(String),

    #[error("boundary data of leaf {leaf} not ready for epoch {epoch}")]
    NotReady { leaf: usize, epoch: u64 },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Task(#[from] TaskError),

    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl From<CoreError> for TaskError {
    fn from(e: CoreError) -> Self {
        TaskError::new(e.to_string())
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
