use crate::grid::{minmod, SubGrid, GHOST_WIDTH};
use crate::simd::FaceBatch;
use crate::state::{IdealGas, Primitive, NPRIM};

/// Position of face `i` (between cells `i - 1` and `i` along the axis) on
/// the transverse line `(u, v)` in a block's face batch.
#[inline]
pub fn face_index(n: usize, i: usize, u: usize, v: usize) -> usize {
    i + (n + 1) * (u + n * v)
}

/// Slope limiter of the linear reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    #[default]
    Minmod,
    /// Central differences, no limiting; only for smooth flows.
    Unlimited,
}

impl Limiter {
    #[inline]
    fn slope(self, back: f64, fwd: f64) -> f64 {
        match self {
            Limiter::Minmod => minmod(back, fwd),
            Limiter::Unlimited => 0.5 * (back + fwd),
        }
    }
}

/// Face states of one line of `n + 2 * GHOST_WIDTH` primitive cells: entry
/// `i` of the result is the (left, right) state at face `i`, `i` in 0..=n.
pub fn reconstruct_line(line: &[Primitive], limiter: Limiter) -> Vec<([f64; NPRIM], [f64; NPRIM])> {
    let g = GHOST_WIDTH;
    let n = line.len() - 2 * g;
    // Slopes of cells -1..=n (padded positions g-1..=g+n).
    let slope = |p: usize, k: usize| {
        let m = line[p].component(k);
        limiter.slope(m - line[p - 1].component(k), line[p + 1].component(k) - m)
    };
    (0..=n)
        .map(|i| {
            let (pl, pr) = (g + i - 1, g + i);
            let l = std::array::from_fn(|k| line[pl].component(k) + 0.5 * slope(pl, k));
            let r = std::array::from_fn(|k| line[pr].component(k) - 0.5 * slope(pr, k));
            (l, r)
        })
        .collect()
}

/// Left and right face states of every face normal to `axis`, indexed by
/// [`face_index`]. Ghosts must be filled.
pub fn reconstruct(grid: &SubGrid, axis: usize, eos: &IdealGas, limiter: Limiter) -> FaceBatch {
    let n = grid.n_edge;
    let g = GHOST_WIDTH as isize;
    let (t1, t2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let mut batch = FaceBatch::new();
    let mut faces = vec![([0.0; NPRIM], [0.0; NPRIM]); n * n * (n + 1)];
    let mut line = Vec::with_capacity(n + 2 * GHOST_WIDTH);
    for v in 0..n {
        for u in 0..n {
            line.clear();
            for p in -g..n as isize + g {
                let mut c = [0isize; 3];
                c[axis] = p;
                c[t1] = u as isize;
                c[t2] = v as isize;
                line.push(eos.to_primitive(grid.padded(c)));
            }
            for (i, f) in reconstruct_line(&line, limiter).into_iter().enumerate() {
                faces[face_index(n, i, u, v)] = f;
            }
        }
    }
    for (l, r) in &faces {
        batch.push(l, r);
    }
    batch
}
