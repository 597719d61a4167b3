//! One-dimensional runs of the same reconstruction, flux and RK3 used on
//! the tree, for shock-tube comparisons at resolutions a cube cannot afford.

use super::reconstruct::{reconstruct_line, Limiter};
use super::step::SSP_RK3;
use crate::error::{CoreError, Result};
use crate::grid::GHOST_WIDTH;
use crate::simd::rusanov;
use crate::state::{ConservedState, IdealGas, Primitive, NFIELDS};

/// Riemann problem on `[0, 1]` with the jump at `x = 0.5` and outflow ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockTube {
    pub left: Primitive,
    pub right: Primitive,
    pub eos: IdealGas,
    pub cells: usize,
    pub cfl: f64,
}

impl ShockTube {
    /// The classic Sod states (1, 0, 1) / (0.125, 0, 0.1) with gamma 1.4.
    pub fn sod(cells: usize) -> ShockTube {
        let state = |rho, p| Primitive { rho, u: [0.0; 3], p, x: [0.0; 2] };
        ShockTube {
            left: state(1.0, 1.0),
            right: state(0.125, 0.1),
            eos: IdealGas::new(1.4),
            cells,
            cfl: 0.4,
        }
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.cells as f64
    }

    /// Primitive states at `t_end`.
    pub fn run(&self, t_end: f64) -> Result<Vec<Primitive>> {
        if self.cells < 2 || !(t_end >= 0.0) {
            return Err(CoreError::InvalidConfig("shock tube needs two cells and t >= 0".into()));
        }
        let h = 1.0 / self.cells as f64;
        let u0: Vec<ConservedState> = (0..self.cells)
            .map(|i| self.eos.to_conserved(if self.cell_center(i) < 0.5 { &self.left } else { &self.right }))
            .collect();
        let mut u = u0;
        let mut t = 0.0;
        while t < t_end {
            let mut dt = f64::INFINITY;
            for c in &u {
                let w = self.eos.to_primitive(c);
                if !(w.rho > 0.0 && w.p > 0.0) {
                    return Err(CoreError::Vacuum { leaf: 0, cell: 0 });
                }
                dt = dt.min(h / (w.u[0].abs() + self.eos.sound_speed(&w)));
            }
            dt = (self.cfl * dt).min(t_end - t);
            let start = u.clone();
            for (a, b) in SSP_RK3 {
                let rhs = self.rhs(&u, h);
                for i in 0..u.len() {
                    let stage = u[i] + rhs[i] * dt;
                    u[i] = start[i] * a + stage * b;
                }
            }
            t += dt;
        }
        Ok(u.iter().map(|c| self.eos.to_primitive(c)).collect())
    }

    fn rhs(&self, u: &[ConservedState], h: f64) -> Vec<ConservedState> {
        let n = u.len();
        let mut line = Vec::with_capacity(n + 2 * GHOST_WIDTH);
        for p in 0..n + 2 * GHOST_WIDTH {
            let i = (p as isize - GHOST_WIDTH as isize).clamp(0, n as isize - 1) as usize;
            line.push(self.eos.to_primitive(&u[i]));
        }
        let flux: Vec<[f64; NFIELDS]> =
            reconstruct_line(&line, Limiter::Minmod).iter().map(|(l, r)| rusanov(l, r, 0, self.eos.gamma)).collect();
        (0..n)
            .map(|i| {
                let d: [f64; NFIELDS] = std::array::from_fn(|k| -(flux[i + 1][k] - flux[i][k]) / h);
                ConservedState::from_array(&d)
            })
            .collect()
    }
}

/// Reads a reference profile of whitespace-separated `x rho p` lines;
/// blank lines and `#` comments are skipped.
pub fn parse_profile(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CoreError::InvalidConfig(format!("profile line {}: {e}", n + 1)))?;
        if v.len() != 3 {
            return Err(CoreError::InvalidConfig(format!("profile line {} needs x rho p", n + 1)));
        }
        out.push([v[0], v[1], v[2]]);
    }
    Ok(out)
}

/// Mean absolute density difference between a run and a reference sampled
/// at the same cell centers.
pub fn l1_density_error(run: &[Primitive], reference: &[[f64; 3]]) -> Result<f64> {
    if run.len() != reference.len() || run.is_empty() {
        return Err(CoreError::InvalidConfig(format!(
            "{} cells against {} reference points",
            run.len(),
            reference.len()
        )));
    }
    Ok(run.iter().zip(reference).map(|(w, r)| (w.rho - r[1]).abs()).sum::<f64>() / run.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_tube_stays_put() {
        let mut t = ShockTube::sod(16);
        t.right = t.left;
        let out = t.run(0.1).unwrap();
        assert!(out.iter().all(|w| w.rho == 1.0 && w.u[0] == 0.0));
    }

    #[test]
    fn profile_parsing() {
        let p = parse_profile("# x rho p\n0.1 1 1\n\n0.2 0.5 0.25\n").unwrap();
        assert_eq!(p, vec![[0.1, 1.0, 1.0], [0.2, 0.5, 0.25]]);
        assert!(parse_profile("0.1 1").is_err());
    }
}
