//! Octree, gravity, hydro and communication layers of the octomini
//! mini-app.

pub mod comm;
pub mod error;
pub mod gravity;
pub mod grid;
pub mod hydro;
pub mod sim;
pub mod simd;
pub mod state;
pub mod util;

pub use error::{CoreError, Result};
