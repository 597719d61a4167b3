//! Adaptive octree of fixed-size sub-grids.

mod ghost;
pub mod morton;
mod random;
mod refine;
mod snapshot;
mod subgrid;
mod tree;

pub use ghost::{
    boundary_faces, fill_domain_boundary, fill_ghosts, ghost_transfers, minmod, pack, unpack, GhostTransfer, TransferKind,
};
pub use random::{random_leaf_set, random_tree};
pub use refine::{flag_for_refinement, RefinementCriteria};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotLeaf};
pub use subgrid::{GhostStore, SubGrid, GHOST_WIDTH};
pub use tree::{
    balance_leaves, build_tree, enumerate_leaves, face_children, face_neighbor, face_neighbor_wrapped, sample_grid,
    InitialCondition, LeafId, NeighborRef, NodeId, NodeKind, OctreeNode, Tree, TreeLimits,
};

use crate::error::{CoreError, Result};

/// Outer boundary treatment for hydro ghosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    Reflecting,
}

/// The cubic domain `[-size/2, size/2]^3` tiled by sub-grids of `n_edge^3`
/// cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainGeometry {
    pub size: f64,
    pub n_edge: usize,
    pub boundary: Boundary,
}

impl DomainGeometry {
    pub fn new(size: f64, n_edge: usize, boundary: Boundary) -> Result<Self> {
        if !(size > 0.0) || !size.is_finite() {
            return Err(CoreError::InvalidConfig(format!(
                "domain size {size} must be positive"
            )));
        }
        if n_edge < 4 || n_edge % 2 != 0 {
            return Err(CoreError::InvalidConfig(format!(
                "n_edge {n_edge} must be even and at least 4"
            )));
        }
        Ok(DomainGeometry {
            size,
            n_edge,
            boundary,
        })
    }

    pub fn lower_corner(&self) -> [f64; 3] {
        [-0.5 * self.size; 3]
    }

    pub fn block_width(&self, level: u32) -> f64 {
        self.size / (1u64 << level) as f64
    }

    pub fn cell_width(&self, level: u32) -> f64 {
        self.block_width(level) / self.n_edge as f64
    }

    pub fn block_origin(&self, level: u32, index: [u32; 3]) -> [f64; 3] {
        let w = self.block_width(level);
        let lo = self.lower_corner();
        std::array::from_fn(|a| lo[a] + index[a] as f64 * w)
    }

    /// Maps a point into the primary periodic image of the domain.
    pub fn wrap(&self, x: [f64; 3]) -> [f64; 3] {
        let h = 0.5 * self.size;
        std::array::from_fn(|a| {
            let mut v = x[a];
            if v < -h {
                v += self.size;
            } else if v >= h {
                v -= self.size;
            }
            v
        })
    }
}

/// One of the six faces of a block, `2 * axis + (plus side as usize)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face(u8);

impl Face {
    pub const ALL: [Face; 6] = [Face(0), Face(1), Face(2), Face(3), Face(4), Face(5)];

    pub fn new(axis: usize, plus: bool) -> Face {
        assert!(axis < 3);
        Face((2 * axis + plus as usize) as u8)
    }

    pub fn from_id(id: u8) -> Option<Face> {
        (id < 6).then_some(Face(id))
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn axis(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_plus(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn opposite(self) -> Face {
        Face(self.0 ^ 1)
    }

    /// The two transverse axes, in increasing order.
    pub fn transverse(self) -> (usize, usize) {
        match self.axis() {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    pub fn step(self) -> i64 {
        if self.is_plus() {
            1
        } else {
            -1
        }
    }
}
