use std::ops::Range;

use super::reconstruct::{face_index, reconstruct};
use super::coupling::{flux_energy_source, BoundaryPotentials};
use super::sources::{couple_gravity, rotating_frame_sources};
use super::HydroConfig;
use crate::error::{CoreError, Result};
use crate::grid::{GhostTransfer, SubGrid, TransferKind};
use crate::simd::{run_flux_kernel, rusanov, FluxBatch};
use crate::state::{ConservedState, IdealGas, Primitive, NFIELDS, NPRIM};

/// SSP-RK3 as `u_{k+1} = a u_0 + b (u_k + dt L(u_k))`, one `(a, b)` per
/// stage.
pub const SSP_RK3: [(f64, f64); 3] = [(0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0)];

/// Stage combination, written as `u_0 + b (u_k - u_0 + dt L)` (the same
/// thing, as `a + b = 1`) so a zero right-hand side is a bitwise fixed point.
#[inline]
fn combine(u0: f64, uk: f64, rate: f64, dt: f64, b: f64) -> f64 {
    u0 + b * ((uk - u0) + dt * rate)
}

/// One SSP-RK3 step of a scalar ODE `u' = f(u)`.
pub fn rk3_scalar(u0: f64, dt: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut u = u0;
    for (_, b) in SSP_RK3 {
        u = combine(u0, u, f(u), dt, b);
    }
    u
}

/// Rusanov flux between two primitive states.
pub fn numerical_flux(left: &Primitive, right: &Primitive, axis: usize, eos: &IdealGas) -> Result<ConservedState> {
    if !left.is_finite() || !right.is_finite() {
        return Err(CoreError::NonFinite("face state".into()));
    }
    let l: [f64; NPRIM] = std::array::from_fn(|k| left.component(k));
    let r: [f64; NPRIM] = std::array::from_fn(|k| right.component(k));
    Ok(ConservedState::from_array(&rusanov(&l, &r, axis, eos.gamma)))
}

/// Global time step over `grids`: cfl times the smallest h / (max |u_a| + c).
pub fn compute_dt(grids: &[SubGrid], config: &HydroConfig) -> Result<f64> {
    let mut dt = f64::INFINITY;
    for (l, g) in grids.iter().enumerate() {
        for (i, c) in g.cells.iter().enumerate() {
            let w = config.eos.to_primitive(c);
            if !(c.rho >= config.floors.density) || !(w.p > 0.0) || !w.is_finite() {
                return Err(CoreError::Vacuum { leaf: l, cell: i });
            }
            let speed = w.u.iter().fold(0.0f64, |m, v| m.max(v.abs())) + config.eos.sound_speed(&w);
            dt = dt.min(g.cell_width / speed);
        }
    }
    Ok(config.cfl * dt)
}

/// Face fluxes of one leaf, one batch per axis, indexed by `face_index`.
pub type LeafFluxes = [FluxBatch; 3];

/// Fluxes of `grid` for the axes in `axes`. Ghosts must be filled.
pub fn leaf_fluxes(grid: &SubGrid, axes: Range<usize>, config: &HydroConfig) -> Vec<FluxBatch> {
    axes.map(|axis| {
        let faces = reconstruct(grid, axis, &config.eos, config.limiter);
        let mut out = FluxBatch::new();
        run_flux_kernel(&faces, axis, config.eos.gamma, config.lanes, &mut out);
        out
    })
    .collect()
}

/// Coarse-fine face pairs: `(coarse leaf, its face, fine leaf, fine octant)`
/// taken from the fine-to-coarse ghost transfers.
pub fn reflux_pairs(transfers: &[GhostTransfer]) -> Vec<GhostTransfer> {
    transfers.iter().filter(|t| matches!(t.kind, TransferKind::FromFiner { .. })).copied().collect()
}

/// Replaces every coarse flux on a coarse-fine face by the mean of the four
/// fine fluxes covering it, so both sides move the same amount.
pub fn reflux(fluxes: &mut [LeafFluxes], pairs: &[GhostTransfer], n: usize) {
    let half = n / 2;
    for t in pairs {
        let TransferKind::FromFiner { octant } = t.kind else { continue };
        let face = t.face;
        let a = face.axis();
        let (t1, t2) = face.transverse();
        let (ou, ov) = (half * ((octant as usize >> t1) & 1), half * ((octant as usize >> t2) & 1));
        let (ic, ifine) = if face.is_plus() { (n, 0) } else { (0, n) };
        for v in 0..half {
            for u in 0..half {
                let mut acc = [0.0; NFIELDS];
                for dv in 0..2 {
                    for du in 0..2 {
                        let fi = face_index(n, ifine, 2 * u + du, 2 * v + dv);
                        let src = &fluxes[t.src.idx()][a];
                        for (k, s) in acc.iter_mut().enumerate() {
                            *s += src.flux[k][fi];
                        }
                    }
                }
                let ci = face_index(n, ic, ou + u, ov + v);
                let dst = &mut fluxes[t.dst.idx()][a];
                for (k, s) in acc.iter().enumerate() {
                    dst.flux[k][ci] = 0.25 * s;
                }
            }
        }
    }
}

/// Everything one leaf's stage update reads.
#[derive(Clone, Copy)]
pub struct StageGravity<'a> {
    pub g: &'a [[f64; 3]],
    pub phi: &'a [f64],
    pub bounds: &'a BoundaryPotentials,
}

pub struct StageInput<'a> {
    /// State at the start of the step.
    pub u0: &'a [ConservedState],
    /// Current stage state with geometry.
    pub grid: &'a SubGrid,
    pub fluxes: &'a LeafFluxes,
    /// Self-gravity of the current stage, if on.
    pub gravity: Option<StageGravity<'a>>,
    /// Extra source density as a function of state and position.
    pub extra: Option<&'a (dyn Fn(&ConservedState, [f64; 3]) -> ConservedState + Sync)>,
    pub stage: usize,
    pub dt: f64,
    pub config: &'a HydroConfig,
}

/// Stage update of the cells in `range`; returns the new states and the
/// number of cells that had to be floored.
pub fn update_cells(range: Range<usize>, s: &StageInput) -> (Vec<ConservedState>, usize) {
    let grid = s.grid;
    let n = grid.n_edge;
    let inv_h = 1.0 / grid.cell_width;
    let (_, b) = SSP_RK3[s.stage];
    let mut floored = 0;
    let out = range
        .map(|idx| {
            let c = grid.coords(idx);
            let uk = grid.cells[idx];
            let mut rhs = [0.0; NFIELDS];
            for (axis, fl) in s.fluxes.iter().enumerate() {
                let (t1, t2) = match axis {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let lo = face_index(n, c[axis], c[t1], c[t2]);
                let hi = face_index(n, c[axis] + 1, c[t1], c[t2]);
                for k in 0..NFIELDS {
                    rhs[k] -= (fl.flux[k][hi] - fl.flux[k][lo]) * inv_h;
                }
            }
            let x = grid.cell_center(idx);
            let mut src = rotating_frame_sources(&uk, x, s.config.omega);
            if let Some(gr) = &s.gravity {
                let mut m = couple_gravity(&uk, gr.g[idx]);
                m.egas = flux_energy_source(grid, idx, gr.phi, gr.bounds, s.fluxes);
                src += m;
            }
            if let Some(f) = s.extra {
                src += f(&uk, x);
            }
            let u0 = s.u0[idx];
            let mut next = ConservedState::ZERO;
            for k in 0..NFIELDS {
                *next.field_mut(k) = combine(u0.field(k), uk.field(k), rhs[k] + src.field(k), s.dt, b);
            }
            if s.config.floors.apply(&mut next) {
                floored += 1;
            }
            next
        })
        .collect();
    (out, floored)
}
