use super::SubGrid;
use crate::error::{CoreError, Result};

/// Thresholds deciding whether a leaf is refined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementCriteria {
    /// Refine where rho exceeds this.
    pub density_threshold: f64,
    /// Refine where |grad rho| * h / rho exceeds this.
    pub gradient_threshold: f64,
    /// Refine where any tracer fraction lies strictly inside (t, 1 - t).
    pub tracer_threshold: f64,
    pub max_level: u32,
}

impl RefinementCriteria {
    pub fn new(
        density_threshold: f64,
        gradient_threshold: f64,
        tracer_threshold: f64,
        max_level: u32,
    ) -> Result<Self> {
        for (name, v) in [
            ("density_threshold", density_threshold),
            ("gradient_threshold", gradient_threshold),
            ("tracer_threshold", tracer_threshold),
        ] {
            if !(v > 0.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(RefinementCriteria {
            density_threshold,
            gradient_threshold,
            tracer_threshold,
            max_level,
        })
    }

    /// Criteria that never trigger (besides `max_level = 0`).
    pub fn disabled() -> Self {
        RefinementCriteria {
            density_threshold: f64::INFINITY,
            gradient_threshold: f64::INFINITY,
            tracer_threshold: 0.5,
            max_level: 0,
        }
    }
}

/// True iff some cell of `grid` trips one of the refinement predicates.
///
/// Gradients use central differences and read one ghost layer, so the
/// ghosts must be valid.
pub fn flag_for_refinement(grid: &SubGrid, criteria: &RefinementCriteria) -> bool {
    let n = grid.n_edge as isize;
    let t = criteria.tracer_threshold;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let c = grid.padded([i, j, k]);
                if c.rho > criteria.density_threshold {
                    return true;
                }
                for tr in &c.tracers {
                    let x = tr / c.rho;
                    if x > t && x < 1.0 - t {
                        return true;
                    }
                }
                let mut g2 = 0.0;
                for axis in 0..3 {
                    let mut lo = [i, j, k];
                    let mut hi = [i, j, k];
                    lo[axis] -= 1;
                    hi[axis] += 1;
                    let d = 0.5 * (grid.padded(hi).rho - grid.padded(lo).rho);
                    g2 += d * d;
                }
                if g2.sqrt() / c.rho > criteria.gradient_threshold {
                    return true;
                }
            }
        }
    }
    false
}
