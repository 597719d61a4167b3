//! Simulated localities: a Morton-slab partition of the leaves, ghost
//! exchange through serialized messages, and the same-locality fast path
//! that copies ghosts directly once the source leaf has published its
//! boundary for the current epoch.

mod exchange;
mod message;
mod partition;

pub use exchange::{Comm, CommConfig, CommStats, Readiness};
pub use message::{decode_cells, encode_cells, GhostMessage};
pub use partition::{partition, DistributionMap};
