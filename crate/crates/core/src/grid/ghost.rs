//! Ghost-slab transfers between face-adjacent leaves.
//!
//! Each transfer fills part of one leaf's ghost slab from one neighbour's
//! interior cells: a whole slab from a same-level or coarser neighbour, a
//! quarter slab from each of the four finer leaves behind a refined face.
//! Packing reads only interior cells and unpacking writes only ghosts, so
//! transfers commute.

use super::subgrid::{GhostStore, SubGrid, GHOST_WIDTH};
use super::tree::{face_children, face_neighbor_wrapped, NeighborRef, Tree};
use super::{Boundary, Face, LeafId};
use crate::state::{ConservedState, NFIELDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferKind {
    SameLevel,
    /// `octant` is the slot the destination's same-level neighbour would
    /// occupy inside the coarser source leaf.
    FromCoarser { octant: u8 },
    /// `octant` is the source leaf's slot inside the refined neighbour.
    FromFiner { octant: u8 },
}

/// One directed ghost transfer into `face` of `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GhostTransfer {
    pub src: LeafId,
    pub dst: LeafId,
    pub face: Face,
    pub kind: TransferKind,
}

impl GhostTransfer {
    /// Cells carried by the transfer.
    pub fn payload_cells(&self, n: usize) -> usize {
        match self.kind {
            TransferKind::FromFiner { .. } => GHOST_WIDTH * n * n / 4,
            _ => GHOST_WIDTH * n * n,
        }
    }
}

/// All transfers of `tree`, ordered by destination leaf, face and octant.
pub fn ghost_transfers(tree: &Tree) -> Vec<GhostTransfer> {
    let mut out = Vec::new();
    for (d, &node) in tree.leaf_nodes().iter().enumerate() {
        let dst = LeafId(d as u32);
        for face in Face::ALL {
            let leaf_of = |id| tree.node(id).leaf().expect("neighbour is a leaf");
            match face_neighbor_wrapped(tree, node, face) {
                NeighborRef::SameLevel(id) => out.push(GhostTransfer {
                    src: leaf_of(id),
                    dst,
                    face,
                    kind: TransferKind::SameLevel,
                }),
                NeighborRef::Coarser { node: id, octant } => out.push(GhostTransfer {
                    src: leaf_of(id),
                    dst,
                    face,
                    kind: TransferKind::FromCoarser { octant },
                }),
                NeighborRef::Finer(id) => {
                    let kids = tree.node(id).children().expect("refined neighbour");
                    for oct in face_children(face.opposite()) {
                        out.push(GhostTransfer {
                            src: leaf_of(kids[oct]),
                            dst,
                            face,
                            kind: TransferKind::FromFiner { octant: oct as u8 },
                        });
                    }
                }
                NeighborRef::DomainBoundary => {}
            }
        }
    }
    out
}

/// Leaf faces on a non-periodic domain hull.
pub fn boundary_faces(tree: &Tree) -> Vec<(LeafId, Face)> {
    let mut out = Vec::new();
    for (d, &node) in tree.leaf_nodes().iter().enumerate() {
        for face in Face::ALL {
            if face_neighbor_wrapped(tree, node, face) == NeighborRef::DomainBoundary {
                out.push((LeafId(d as u32), face));
            }
        }
    }
    out
}

/// Cells for `t`, computed from the source leaf's interior, in the order
/// [`unpack`] expects (layer, then second transverse axis, then first).
pub fn pack(src: &SubGrid, t: &GhostTransfer) -> Vec<ConservedState> {
    let n = src.n_edge;
    let face = t.face;
    let (t1, t2) = face.transverse();
    let a = face.axis();
    let mut out = Vec::with_capacity(t.payload_cells(n));
    match t.kind {
        TransferKind::SameLevel => {
            for layer in 0..GHOST_WIDTH {
                for v in 0..n {
                    for u in 0..n {
                        let c = src.ghost_cell_in_neighbor(face, layer, u, v);
                        out.push(*src.cell(c[0], c[1], c[2]));
                    }
                }
            }
        }
        TransferKind::FromCoarser { octant } => {
            let bit = |ax: usize| ((octant as usize) >> ax) & 1;
            for layer in 0..GHOST_WIDTH {
                for v in 0..n {
                    for u in 0..n {
                        // Fine coordinates of the ghost cell in the virtual
                        // same-level neighbour, then the covering coarse cell.
                        let mut fine = [0usize; 3];
                        fine[a] = if face.is_plus() { layer } else { n - 1 - layer };
                        fine[t1] = u;
                        fine[t2] = v;
                        let g: [usize; 3] = std::array::from_fn(|ax| fine[ax] + n * bit(ax));
                        let coarse = g.map(|x| x / 2);
                        let sign = g.map(|x| if x % 2 == 1 { 0.25 } else { -0.25 });
                        out.push(interpolate(src, coarse, sign));
                    }
                }
            }
        }
        TransferKind::FromFiner { .. } => {
            // The octant only places the quarter on the receiving side.
            let half = n / 2;
            for layer in 0..GHOST_WIDTH {
                for v in 0..half {
                    for u in 0..half {
                        let mut acc = [0.0; NFIELDS];
                        for dl in 0..2 {
                            for dv in 0..2 {
                                for du in 0..2 {
                                    let mut c = [0usize; 3];
                                    let l = 2 * layer + dl;
                                    c[a] = if face.is_plus() { l } else { n - 1 - l };
                                    c[t1] = 2 * u + du;
                                    c[t2] = 2 * v + dv;
                                    let cell = src.cell(c[0], c[1], c[2]);
                                    for (k, s) in acc.iter_mut().enumerate() {
                                        *s += cell.field(k);
                                    }
                                }
                            }
                        }
                        out.push(ConservedState::from_array(&acc.map(|s| s * 0.125)));
                    }
                }
            }
        }
    }
    out
}

/// Coarse cell `c` evaluated at offset `sign` (in coarse cell widths) with
/// minmod slopes; slopes are zero where a neighbour lies outside the block.
fn interpolate(src: &SubGrid, c: [usize; 3], sign: [f64; 3]) -> ConservedState {
    let n = src.n_edge;
    let mid = *src.cell(c[0], c[1], c[2]);
    let mut out = mid.to_array();
    for ax in 0..3 {
        if c[ax] == 0 || c[ax] + 1 == n {
            continue;
        }
        let mut lo = c;
        let mut hi = c;
        lo[ax] -= 1;
        hi[ax] += 1;
        let (l, r) = (src.cell(lo[0], lo[1], lo[2]), src.cell(hi[0], hi[1], hi[2]));
        for k in 0..NFIELDS {
            let m = mid.field(k);
            out[k] += sign[ax] * minmod(m - l.field(k), r.field(k) - m);
        }
    }
    ConservedState::from_array(&out)
}

#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Writes a packed payload into the destination's ghost slab.
pub fn unpack(ghost: &mut GhostStore, n: usize, t: &GhostTransfer, payload: &[ConservedState]) {
    assert_eq!(payload.len(), t.payload_cells(n), "payload size");
    let face = t.face;
    match t.kind {
        TransferKind::FromFiner { octant } => {
            let half = n / 2;
            let (t1, t2) = face.transverse();
            let (ou, ov) = (half * ((octant as usize >> t1) & 1), half * ((octant as usize >> t2) & 1));
            let mut it = payload.iter();
            for layer in 0..GHOST_WIDTH {
                for v in 0..half {
                    for u in 0..half {
                        ghost.set(face, layer, ou + u, ov + v, *it.next().unwrap());
                    }
                }
            }
        }
        _ => ghost.slab_mut(face).copy_from_slice(payload),
    }
}

/// Fills a hull face of `grid` from its own interior.
pub fn fill_domain_boundary(grid: &mut SubGrid, face: Face, boundary: Boundary) {
    let n = grid.n_edge;
    let a = face.axis();
    for layer in 0..GHOST_WIDTH {
        for v in 0..n {
            for u in 0..n {
                let mut c = *grid.boundary_cell(face, layer, u, v);
                if boundary == Boundary::Reflecting {
                    c.s[a] = -c.s[a];
                }
                grid.ghost.set(face, layer, u, v, c);
            }
        }
    }
}

/// Performs every transfer and hull fill in place.
pub fn fill_ghosts(tree: &mut Tree, transfers: &[GhostTransfer]) {
    let n = tree.geometry.n_edge;
    let payloads: Vec<Vec<ConservedState>> = transfers.iter().map(|t| pack(&tree.grids[t.src.idx()], t)).collect();
    for (t, p) in transfers.iter().zip(&payloads) {
        unpack(&mut tree.grids[t.dst.idx()].ghost, n, t, p);
    }
    let boundary = tree.geometry.boundary;
    for (leaf, face) in boundary_faces(tree) {
        fill_domain_boundary(&mut tree.grids[leaf.idx()], face, boundary);
    }
}
