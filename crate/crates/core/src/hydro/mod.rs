//! Finite-volume Euler solver on the leaf sub-grids: minmod-limited linear
//! reconstruction in primitive variables, Rusanov fluxes, SSP-RK3 with one
//! global time step, gravity and rotating-frame sources.

mod coupling;
mod diagnostics;
mod reconstruct;
mod sources;
mod step;
mod tube;

pub use coupling::{boundary_potentials, flux_energy_source, BoundaryPotentials};
pub use diagnostics::{diagnostics, Totals};
pub use reconstruct::{face_index, reconstruct, reconstruct_line, Limiter};
pub use sources::{couple_gravity, rotating_frame_sources};
pub use step::{
    compute_dt, leaf_fluxes, numerical_flux, reflux, reflux_pairs, rk3_scalar, update_cells, LeafFluxes, StageGravity,
    StageInput, SSP_RK3,
};
pub use tube::{l1_density_error, parse_profile, ShockTube};

use crate::simd::LaneConfig;
use crate::state::{Floors, IdealGas};

/// Scheme parameters shared by every leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydroConfig {
    pub eos: IdealGas,
    pub cfl: f64,
    /// Frame rotation rate about the z axis through the domain center.
    pub omega: f64,
    pub floors: Floors,
    pub lanes: LaneConfig,
    pub limiter: Limiter,
}

impl Default for HydroConfig {
    fn default() -> Self {
        HydroConfig {
            eos: IdealGas::default(),
            cfl: 0.4,
            omega: 0.0,
            floors: Floors::for_peak_density(1.0),
            lanes: LaneConfig::scalar(),
            limiter: Limiter::Minmod,
        }
    }
}
