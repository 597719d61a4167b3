use super::tensor::{outer2, outer3, sym_outer_1_2, Sym2, Sym3};
use crate::grid::SubGrid;

/// Mass moments of a cell about its center of mass.
///
/// `quad` is the traceful second moment sum m e e and `oct` the third moment
/// sum m e e e, with e measured from `com`. The dipole about `com` vanishes
/// by construction and is not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multipole {
    pub m: f64,
    pub com: [f64; 3],
    pub quad: Sym2,
    pub oct: Sym3,
}

impl Multipole {
    pub fn point(m: f64, at: [f64; 3]) -> Multipole {
        Multipole {
            m,
            com: at,
            quad: [0.0; 6],
            oct: [0.0; 10],
        }
    }

    /// Moments of `parts` about their common center of mass. A zero total
    /// mass yields zero moments centered at `geometric_center`.
    pub fn combine(parts: &[Multipole], geometric_center: [f64; 3]) -> Multipole {
        let m: f64 = parts.iter().map(|p| p.m).sum();
        if !(m > 0.0) {
            return Multipole::point(0.0, geometric_center);
        }
        let com: [f64; 3] =
            std::array::from_fn(|a| parts.iter().map(|p| p.m * p.com[a]).sum::<f64>() / m);
        let mut quad = [0.0; 6];
        let mut oct = [0.0; 10];
        for p in parts {
            let d = [p.com[0] - com[0], p.com[1] - com[1], p.com[2] - com[2]];
            let dd = outer2(d);
            let ddd = outer3(d);
            let dq = sym_outer_1_2(d, &p.quad);
            for s in 0..6 {
                quad[s] += p.quad[s] + p.m * dd[s];
            }
            for s in 0..10 {
                oct[s] += p.oct[s] + dq[s] + p.m * ddd[s];
            }
        }
        Multipole { m, com, quad, oct }
    }
}

/// Per-cell monopoles of a leaf: mass rho h^3 at each cell center.
pub fn p2m(grid: &SubGrid) -> Vec<Multipole> {
    let vol = grid.cell_volume();
    (0..grid.cells.len())
        .map(|i| Multipole::point(grid.cells[i].rho * vol, grid.cell_center(i)))
        .collect()
}
