//! Gravitational energy source from face mass fluxes.
//!
//! Every face carries one potential shared by the two cells it separates.
//! A cell gains `-F A (phi_face - phi_cell) / V` per face, with `F` the
//! outward mass flux, so the summed gas source is exactly minus the rate of
//! change of `1/2 sum m phi` implied by the mass fluxes. Across a
//! coarse-fine face the shared value pairs the coarse cell with the mean of
//! the 2x2 fine cells touching it.

use super::reconstruct::face_index;
use super::step::LeafFluxes;
use crate::grid::{boundary_faces, Face, GhostTransfer, SubGrid, TransferKind, Tree};

/// Face potentials on the six hull faces of one leaf, indexed `u + n v`.
pub type BoundaryPotentials = [Vec<f64>; 6];

#[inline]
fn shared(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

fn surface(grid: &SubGrid, face: Face, u: usize, v: usize) -> usize {
    let mut c = [0usize; 3];
    let (t1, t2) = face.transverse();
    c[face.axis()] = if face.is_plus() { grid.n_edge - 1 } else { 0 };
    c[t1] = u;
    c[t2] = v;
    grid.index(c[0], c[1], c[2])
}

/// Mean potential of the fine cells `(2u..2u+2, 2v..2v+2)` on `face`.
fn fine_mean(grid: &SubGrid, phi: &[f64], face: Face, u: usize, v: usize) -> f64 {
    let mut s = 0.0;
    for dv in 0..2 {
        for du in 0..2 {
            s += phi[surface(grid, face, 2 * u + du, 2 * v + dv)];
        }
    }
    0.25 * s
}

/// Shared potentials on every leaf-boundary face. Hull faces of a
/// non-periodic domain get the cell's own potential, so they contribute
/// nothing.
pub fn boundary_potentials(tree: &Tree, transfers: &[GhostTransfer], phi: &[Vec<f64>]) -> Vec<BoundaryPotentials> {
    let n = tree.geometry.n_edge;
    let mut out: Vec<BoundaryPotentials> = vec![std::array::from_fn(|_| vec![0.0; n * n]); tree.leaf_count()];
    for t in transfers {
        let (dst, src) = (&tree.grids[t.dst.idx()], &tree.grids[t.src.idx()]);
        let (pd, ps) = (&phi[t.dst.idx()], &phi[t.src.idx()]);
        let slot = &mut out[t.dst.idx()][t.face.id() as usize];
        match t.kind {
            TransferKind::SameLevel => {
                for v in 0..n {
                    for u in 0..n {
                        let c = src.ghost_cell_in_neighbor(t.face, 0, u, v);
                        let other = ps[src.index(c[0], c[1], c[2])];
                        let own = pd[surface(dst, t.face, u, v)];
                        // Order the sum the way the neighbour does.
                        slot[u + n * v] = if t.face.is_plus() { shared(own, other) } else { shared(other, own) };
                    }
                }
            }
            TransferKind::FromCoarser { octant } => {
                let (t1, t2) = t.face.transverse();
                let bit = |ax: usize| ((octant as usize) >> ax) & 1;
                let a = t.face.axis();
                for v in 0..n {
                    for u in 0..n {
                        let mut fine = [0usize; 3];
                        fine[a] = if t.face.is_plus() { 0 } else { n - 1 };
                        fine[t1] = u;
                        fine[t2] = v;
                        let c: [usize; 3] = std::array::from_fn(|ax| (fine[ax] + n * bit(ax)) / 2);
                        let coarse = ps[src.index(c[0], c[1], c[2])];
                        slot[u + n * v] = shared(coarse, fine_mean(dst, pd, t.face, u / 2, v / 2));
                    }
                }
            }
            TransferKind::FromFiner { octant } => {
                let (t1, t2) = t.face.transverse();
                let half = n / 2;
                let (ou, ov) = (half * ((octant as usize >> t1) & 1), half * ((octant as usize >> t2) & 1));
                for v in 0..half {
                    for u in 0..half {
                        let coarse = pd[surface(dst, t.face, ou + u, ov + v)];
                        let fine = fine_mean(src, ps, t.face.opposite(), u, v);
                        slot[ou + u + n * (ov + v)] = shared(coarse, fine);
                    }
                }
            }
        }
    }
    for (leaf, face) in boundary_faces(tree) {
        let g = &tree.grids[leaf.idx()];
        for v in 0..n {
            for u in 0..n {
                out[leaf.idx()][face.id() as usize][u + n * v] = phi[leaf.idx()][surface(g, face, u, v)];
            }
        }
    }
    out
}

/// Gas energy source density of cell `idx` from the mass fluxes.
pub fn flux_energy_source(
    grid: &SubGrid,
    idx: usize,
    phi: &[f64],
    bounds: &BoundaryPotentials,
    fluxes: &LeafFluxes,
) -> f64 {
    let n = grid.n_edge;
    let c = grid.coords(idx);
    let own = phi[idx];
    let mut s = 0.0;
    for (axis, fl) in fluxes.iter().enumerate() {
        let lo_face = Face::new(axis, false);
        let (t1, t2) = lo_face.transverse();
        let (u, v) = (c[t1], c[t2]);
        let at = |k: usize| {
            let mut q = c;
            q[axis] = k;
            phi[grid.index(q[0], q[1], q[2])]
        };
        let phi_lo = if c[axis] == 0 { bounds[lo_face.id() as usize][u + n * v] } else { shared(at(c[axis] - 1), own) };
        let phi_hi = if c[axis] + 1 == n {
            bounds[lo_face.opposite().id() as usize][u + n * v]
        } else {
            shared(own, at(c[axis] + 1))
        };
        let f_lo = fl.flux[0][face_index(n, c[axis], u, v)];
        let f_hi = fl.flux[0][face_index(n, c[axis] + 1, u, v)];
        s -= f_hi * (phi_hi - own) - f_lo * (phi_lo - own);
    }
    s / grid.cell_width
}
