//! Fast multipole gravity over the octree's cells.
//!
//! Moments are kept up to the octupole and local expansions up to order 4.
//! The quadrupole is stored traceful (sum m e e), G = 1 and gravity has open
//! boundaries regardless of the hydro boundary condition.

pub mod expansion;
pub mod lists;
pub mod moments;
mod oracle;
mod solver;
pub mod tensor;

pub use expansion::{l2l, m2l, m2l_pair, Expansion};
pub use lists::{CellId, InteractionLists};
pub use moments::{p2m, Multipole};
pub use oracle::{direct_sum_oracle, FieldSample};
pub use solver::{check_field, leaf_point_masses, FieldCheck, GravityConfig, GravityField, GravityPlan, GravityStats};
