use crate::state::ConservedState;
use crate::util::cross;

/// Coriolis and centrifugal source densities in a frame rotating at
/// `omega` about the z axis through the origin. Coriolis does no work, so
/// only the centrifugal force enters the energy.
pub fn rotating_frame_sources(state: &ConservedState, position: [f64; 3], omega: f64) -> ConservedState {
    let mut out = ConservedState::ZERO;
    if omega == 0.0 {
        return out;
    }
    let w = [0.0, 0.0, omega];
    let cor = cross(w, state.s);
    let w2 = omega * omega;
    let cen = [w2 * position[0], w2 * position[1], 0.0];
    for a in 0..3 {
        out.s[a] = -2.0 * cor[a] + state.rho * cen[a];
    }
    out.egas = state.s[0] * cen[0] + state.s[1] * cen[1];
    out
}

/// Gravity source densities for acceleration `g`: momentum rho g, energy
/// s . g. Time stepping replaces the energy part with
/// [`flux_energy_source`](super::flux_energy_source).
pub fn couple_gravity(state: &ConservedState, g: [f64; 3]) -> ConservedState {
    let mut out = ConservedState::ZERO;
    for a in 0..3 {
        out.s[a] = state.rho * g[a];
    }
    out.egas = state.s[0] * g[0] + state.s[1] * g[1] + state.s[2] * g[2];
    out
}
