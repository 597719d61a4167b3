use super::Face;
use crate::state::ConservedState;

/// Ghost layers per face.
pub const GHOST_WIDTH: usize = 2;

/// Face-adjacent ghost slabs of a sub-grid.
///
/// Slab `f` holds `GHOST_WIDTH * n * n` cells ordered with the first
/// transverse axis fastest, then the second, then the layer (layer 0 touches
/// the face). Edge and corner ghosts are not stored; every stencil in the
/// crate is dimension-by-dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostStore {
    n_edge: usize,
    faces: [Vec<ConservedState>; 6],
}

impl GhostStore {
    pub fn new(n_edge: usize) -> Self {
        GhostStore {
            n_edge,
            faces: std::array::from_fn(|_| {
                vec![ConservedState::ZERO; GHOST_WIDTH * n_edge * n_edge]
            }),
        }
    }

    #[inline]
    pub fn slab_index(&self, layer: usize, u: usize, v: usize) -> usize {
        (layer * self.n_edge + v) * self.n_edge + u
    }

    pub fn slab(&self, face: Face) -> &[ConservedState] {
        &self.faces[face.id() as usize]
    }

    pub fn slab_mut(&mut self, face: Face) -> &mut [ConservedState] {
        &mut self.faces[face.id() as usize]
    }

    #[inline]
    pub fn get(&self, face: Face, layer: usize, u: usize, v: usize) -> &ConservedState {
        &self.faces[face.id() as usize][self.slab_index(layer, u, v)]
    }

    #[inline]
    pub fn set(&mut self, face: Face, layer: usize, u: usize, v: usize, value: ConservedState) {
        let i = self.slab_index(layer, u, v);
        self.faces[face.id() as usize][i] = value;
    }
}

/// An `n^3` block of conserved state owned by one octree leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct SubGrid {
    pub n_edge: usize,
    pub origin: [f64; 3],
    pub cell_width: f64,
    pub cells: Vec<ConservedState>,
    pub ghost: GhostStore,
}

impl SubGrid {
    pub fn new(n_edge: usize, origin: [f64; 3], cell_width: f64) -> Self {
        assert!(
            n_edge >= 4 && n_edge % 2 == 0,
            "n_edge must be even and >= 4"
        );
        assert!(cell_width > 0.0);
        SubGrid {
            n_edge,
            origin,
            cell_width,
            cells: vec![ConservedState::ZERO; n_edge * n_edge * n_edge],
            ghost: GhostStore::new(n_edge),
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n_edge * (j + self.n_edge * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let n = self.n_edge;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize, k: usize) -> &ConservedState {
        &self.cells[self.index(i, j, k)]
    }

    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        std::array::from_fn(|a| self.origin[a] + (c[a] as f64 + 0.5) * self.cell_width)
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width * self.cell_width * self.cell_width
    }

    /// Cell at padded coordinates; at most one coordinate may lie in the
    /// ghost range `[-GHOST_WIDTH, n + GHOST_WIDTH)`.
    #[inline]
    pub fn padded(&self, c: [isize; 3]) -> &ConservedState {
        let n = self.n_edge as isize;
        for axis in 0..3 {
            if c[axis] < 0 || c[axis] >= n {
                let plus = c[axis] >= n;
                let layer = if plus { c[axis] - n } else { -1 - c[axis] } as usize;
                let face = Face::new(axis, plus);
                let (t1, t2) = face.transverse();
                debug_assert!(layer < GHOST_WIDTH);
                return self.ghost.get(face, layer, c[t1] as usize, c[t2] as usize);
            }
        }
        self.cell(c[0] as usize, c[1] as usize, c[2] as usize)
    }

    /// Interior cell at `layer` cells inward from `face`, transverse (u, v).
    #[inline]
    pub fn boundary_cell(&self, face: Face, layer: usize, u: usize, v: usize) -> &ConservedState {
        let mut c = [0usize; 3];
        let (t1, t2) = face.transverse();
        c[face.axis()] = if face.is_plus() {
            self.n_edge - 1 - layer
        } else {
            layer
        };
        c[t1] = u;
        c[t2] = v;
        self.cell(c[0], c[1], c[2])
    }

    /// Interior coordinates of the ghost cell `(layer, u, v)` of `face`,
    /// expressed in the neighbouring block across that face.
    pub fn ghost_cell_in_neighbor(
        &self,
        face: Face,
        layer: usize,
        u: usize,
        v: usize,
    ) -> [usize; 3] {
        let mut c = [0usize; 3];
        let (t1, t2) = face.transverse();
        c[face.axis()] = if face.is_plus() {
            layer
        } else {
            self.n_edge - 1 - layer
        };
        c[t1] = u;
        c[t2] = v;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_reads_ghosts_and_cells() {
        let mut g = SubGrid::new(4, [0.0; 3], 1.0);
        for (i, c) in g.cells.iter_mut().enumerate() {
            c.rho = i as f64;
        }
        let f = Face::new(0, true);
        let mut marker = ConservedState::ZERO;
        marker.rho = -7.0;
        g.ghost.set(f, 1, 2, 3, marker);
        assert_eq!(g.padded([5, 2, 3]).rho, -7.0);
        assert_eq!(g.padded([1, 2, 3]).rho, g.cell(1, 2, 3).rho);
        assert_eq!(g.boundary_cell(f, 0, 2, 3).rho, g.cell(3, 2, 3).rho);
        assert_eq!(g.cells.len(), 64);
    }
}
