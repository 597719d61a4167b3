//! Cell-level interaction lists from a dual-tree traversal.
//!
//! Every node of the octree owns `n^3` cells: a leaf's cells are its hydro
//! cells, an interior node's cells are the 2x2x2 aggregates of its children's
//! cells. A cell is named by `node * n^3 + local` with `local` in the
//! sub-grid's x-fastest order.

use crate::error::{CoreError, Result};
use crate::grid::{NodeId, NodeKind, Tree};

/// Global cell id: `node * n^3 + local`.
pub type CellId = u32;

/// Integer placement of a cell on the finest lattice of the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub level: u32,
    pub lo: [u64; 3],
    pub width: u64,
}

impl CellBox {
    /// Chebyshev gap between the closed boxes, in finest-lattice units.
    pub fn gap(&self, other: &CellBox) -> u64 {
        let mut g = 0;
        for a in 0..3 {
            let (alo, ahi) = (self.lo[a], self.lo[a] + self.width);
            let (blo, bhi) = (other.lo[a], other.lo[a] + other.width);
            let d = if blo >= ahi {
                blo - ahi
            } else if alo >= bhi {
                alo - bhi
            } else {
                0
            };
            g = g.max(d);
        }
        g
    }
}

pub fn cells_per_node(tree: &Tree) -> usize {
    tree.geometry.n_edge.pow(3)
}

pub fn cell_id(tree: &Tree, node: NodeId, local: usize) -> CellId {
    (node.idx() * cells_per_node(tree) + local) as CellId
}

/// `(node, local index)` of a cell.
pub fn split_cell(tree: &Tree, cell: CellId) -> (NodeId, usize) {
    let per = cells_per_node(tree);
    (NodeId((cell as usize / per) as u32), cell as usize % per)
}

pub fn cell_box(tree: &Tree, cell: CellId) -> CellBox {
    let n = tree.geometry.n_edge;
    let (node, local) = split_cell(tree, cell);
    let nd = tree.node(node);
    let c = [local % n, (local / n) % n, local / (n * n)];
    let width = 1u64 << (tree.max_level - nd.level);
    CellBox {
        level: nd.level,
        lo: std::array::from_fn(|a| (nd.index[a] as u64 * n as u64 + c[a] as u64) * width),
        width,
    }
}

/// Geometric center of a cell in domain coordinates.
pub fn cell_center(tree: &Tree, cell: CellId) -> [f64; 3] {
    let b = cell_box(tree, cell);
    let unit = tree.geometry.cell_width(tree.max_level);
    let lo = tree.geometry.lower_corner();
    std::array::from_fn(|a| lo[a] + (b.lo[a] as f64 + 0.5 * b.width as f64) * unit)
}

/// `(child octant, local index in that child)` of the 8 sub-cells of
/// interior cell `local`, in octant order of the sub-cell (bit 0 = x).
pub fn child_slots(n: usize, local: usize) -> [(usize, usize); 8] {
    let c = [local % n, (local / n) % n, local / (n * n)];
    std::array::from_fn(|o| {
        let f: [usize; 3] = std::array::from_fn(|a| 2 * c[a] + ((o >> a) & 1));
        let octant = (f[0] / n) | ((f[1] / n) << 1) | ((f[2] / n) << 2);
        (octant, (f[0] % n) + n * ((f[1] % n) + n * (f[2] % n)))
    })
}

/// Local index of the parent-node cell covering cell `local` of the child
/// in `octant`.
pub fn parent_slot(n: usize, octant: usize, local: usize) -> usize {
    let c = [local % n, (local / n) % n, local / (n * n)];
    let f: [usize; 3] = std::array::from_fn(|a| (c[a] + n * ((octant >> a) & 1)) / 2);
    f[0] + n * (f[1] + n * f[2])
}

/// The 8 cells one level down covering `cell`, in octant order (bit 0 = x),
/// or `None` for a cell of a leaf node.
pub fn cell_children(tree: &Tree, cell: CellId) -> Option<[CellId; 8]> {
    let (node, local) = split_cell(tree, cell);
    let NodeKind::Interior(children) = tree.node(node).kind else {
        return None;
    };
    let slots = child_slots(tree.geometry.n_edge, local);
    Some(slots.map(|(o, l)| cell_id(tree, children[o], l)))
}

/// Per-target interaction lists in compressed-row form.
///
/// `m2l(t)` holds the well-separated cells whose expansions act on `t`;
/// `p2p(t)` the leaf cells that act on leaf cell `t` directly. Both lists
/// are symmetric and never contain `t` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionLists {
    cells: usize,
    near_radius: u32,
    m2l_offsets: Vec<usize>,
    m2l: Vec<CellId>,
    p2p_offsets: Vec<usize>,
    p2p: Vec<CellId>,
}

impl InteractionLists {
    /// Traverses all pairs of root cells. A pair is well separated when its
    /// Chebyshev gap is at least `near_radius` times the larger cell width;
    /// otherwise the larger (or, at equal size, both) cell is opened until
    /// two leaf cells remain.
    pub fn build(tree: &Tree, near_radius: u32) -> Result<InteractionLists> {
        if near_radius == 0 {
            return Err(CoreError::InvalidConfig("near_radius must be at least 1".into()));
        }
        let per = cells_per_node(tree);
        let cells = tree.node_count() * per;
        if cells > u32::MAX as usize {
            return Err(CoreError::InvalidConfig(format!("{cells} cells exceed the cell id range")));
        }
        let boxes: Vec<CellBox> = (0..cells as CellId).map(|c| cell_box(tree, c)).collect();
        let children: Vec<Option<[CellId; 8]>> =
            (0..cells as CellId).map(|c| cell_children(tree, c)).collect();
        let mut m2l: Vec<Vec<CellId>> = vec![Vec::new(); cells];
        let mut p2p: Vec<Vec<CellId>> = vec![Vec::new(); cells];

        let root: Vec<CellId> = (0..per as CellId).map(|l| cell_id(tree, tree.root(), l as usize)).collect();
        let mut stack: Vec<(CellId, CellId)> = Vec::new();
        for i in (0..root.len()).rev() {
            for j in (i..root.len()).rev() {
                stack.push((root[i], root[j]));
            }
        }
        let k = near_radius as u64;
        while let Some((a, b)) = stack.pop() {
            let (ba, bb) = (&boxes[a as usize], &boxes[b as usize]);
            if a != b && ba.gap(bb) >= k * ba.width.max(bb.width) {
                m2l[a as usize].push(b);
                m2l[b as usize].push(a);
                continue;
            }
            match (children[a as usize], children[b as usize]) {
                (None, None) => {
                    if a != b {
                        p2p[a as usize].push(b);
                        p2p[b as usize].push(a);
                    }
                }
                (Some(ca), Some(_)) if a == b => {
                    for i in (0..8).rev() {
                        for j in (i..8).rev() {
                            stack.push((ca[i], ca[j]));
                        }
                    }
                }
                (Some(ca), Some(cb)) if ba.width == bb.width => {
                    for i in (0..8).rev() {
                        for j in (0..8).rev() {
                            stack.push((ca[i], cb[j]));
                        }
                    }
                }
                (ca, cb) => {
                    // Open the larger cell, or the one that can be opened.
                    let open_a = match (ca, cb) {
                        (Some(_), None) => true,
                        (None, Some(_)) => false,
                        _ => ba.width > bb.width,
                    };
                    if open_a {
                        for &c in ca.unwrap().iter().rev() {
                            stack.push((c, b));
                        }
                    } else {
                        for &c in cb.unwrap().iter().rev() {
                            stack.push((a, c));
                        }
                    }
                }
            }
        }
        let (m2l_offsets, m2l) = flatten(m2l);
        let (p2p_offsets, p2p) = flatten(p2p);
        Ok(InteractionLists {
            cells,
            near_radius,
            m2l_offsets,
            m2l,
            p2p_offsets,
            p2p,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    pub fn near_radius(&self) -> u32 {
        self.near_radius
    }

    pub fn m2l(&self, cell: CellId) -> &[CellId] {
        let c = cell as usize;
        &self.m2l[self.m2l_offsets[c]..self.m2l_offsets[c + 1]]
    }

    pub fn p2p(&self, cell: CellId) -> &[CellId] {
        let c = cell as usize;
        &self.p2p[self.p2p_offsets[c]..self.p2p_offsets[c + 1]]
    }

    /// Directed M2L interactions (each separated pair counts twice).
    pub fn m2l_len(&self) -> usize {
        self.m2l.len()
    }

    /// Directed direct interactions.
    pub fn p2p_len(&self) -> usize {
        self.p2p.len()
    }
}

fn flatten(lists: Vec<Vec<CellId>>) -> (Vec<usize>, Vec<CellId>) {
    let mut offsets = Vec::with_capacity(lists.len() + 1);
    let mut flat = Vec::with_capacity(lists.iter().map(Vec::len).sum());
    offsets.push(0);
    for l in lists {
        flat.extend_from_slice(&l);
        offsets.push(flat.len());
    }
    (offsets, flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, DomainGeometry};
    use crate::state::ConservedState;

    fn tree(level: u32) -> Tree {
        let g = DomainGeometry::new(1.0, 4, Boundary::Periodic).unwrap();
        Tree::uniform(g, level, &|_| ConservedState::ZERO).unwrap()
    }

    #[test]
    fn gap_counts_empty_layers() {
        let a = CellBox { level: 0, lo: [0, 0, 0], width: 2 };
        let b = CellBox { level: 0, lo: [4, 1, 0], width: 2 };
        assert_eq!(a.gap(&b), 2);
        assert_eq!(b.gap(&a), 2);
        let c = CellBox { level: 1, lo: [2, 0, 0], width: 1 };
        assert_eq!(a.gap(&c), 0);
    }

    #[test]
    fn children_cover_parent() {
        let t = tree(1);
        let root_cell = cell_id(&t, t.root(), 1 + 4 * (2 + 4 * 3));
        let kids = cell_children(&t, root_cell).unwrap();
        let pb = cell_box(&t, root_cell);
        for k in kids {
            let b = cell_box(&t, k);
            assert_eq!(b.width * 2, pb.width);
            assert!((0..3).all(|a| b.lo[a] >= pb.lo[a] && b.lo[a] + b.width <= pb.lo[a] + pb.width));
            assert!(cell_children(&t, k).is_none());
            let (node, local) = split_cell(&t, k);
            let octant = t.node(t.root()).children().unwrap().iter().position(|&c| c == node).unwrap();
            assert_eq!(parent_slot(4, octant, local) as u32, root_cell);
        }
    }

    #[test]
    fn root_only_lists_follow_adjacency() {
        let t = tree(0);
        let l = InteractionLists::build(&t, 1).unwrap();
        for c in 0..64u32 {
            let b = cell_box(&t, c);
            for d in 0..64u32 {
                let near = cell_box(&t, d).gap(&b) == 0;
                assert_eq!(l.p2p(c).contains(&d), near && c != d);
                assert_eq!(l.m2l(c).contains(&d), !near);
            }
        }
        assert_eq!(l.m2l_len() + l.p2p_len(), 64 * 63);
    }

    #[test]
    fn rejects_zero_radius() {
        assert!(InteractionLists::build(&tree(0), 0).is_err());
    }
}
