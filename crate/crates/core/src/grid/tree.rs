use std::collections::{BTreeSet, HashMap};

use super::morton::level_normalized_key;
use super::subgrid::GHOST_WIDTH;
use super::{flag_for_refinement, Boundary, DomainGeometry, Face, RefinementCriteria, SubGrid};
use crate::error::{CoreError, Result};
use crate::state::ConservedState;

/// Maps a physical position to the state sampled there.
pub type InitialCondition = dyn Fn([f64; 3]) -> ConservedState + Send + Sync;

/// Deepest level whose indices still fit a 63-bit Morton key.
const MORTON_MAX_LEVEL: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Position of a leaf in Morton order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafId(pub u32);

impl LeafId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf(LeafId),
    Interior([NodeId; 8]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctreeNode {
    pub level: u32,
    pub index: [u32; 3],
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub locality: u32,
}

impl OctreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn leaf(&self) -> Option<LeafId> {
        match self.kind {
            NodeKind::Leaf(l) => Some(l),
            NodeKind::Interior(_) => None,
        }
    }

    pub fn children(&self) -> Option<&[NodeId; 8]> {
        match &self.kind {
            NodeKind::Interior(c) => Some(c),
            NodeKind::Leaf(_) => None,
        }
    }
}

/// What lies across a face of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborRef {
    /// A leaf at the same level.
    SameLevel(NodeId),
    /// A coarser leaf; `octant` is the child slot of `node` that the
    /// same-level neighbour position would occupy.
    Coarser {
        node: NodeId,
        octant: u8,
    },
    /// A refined node at the same level; its face children are finer leaves.
    Finer(NodeId),
    DomainBoundary,
}

/// Resource guard for tree construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeLimits {
    pub max_cells_per_edge: usize,
}

impl Default for TreeLimits {
    fn default() -> Self {
        TreeLimits {
            max_cells_per_edge: 1 << 16,
        }
    }
}

impl TreeLimits {
    pub fn check(&self, max_level: u32, n_edge: usize) -> Result<()> {
        let cells_per_edge = if max_level >= 64 {
            u128::MAX
        } else {
            (n_edge as u128) << max_level
        };
        if max_level > MORTON_MAX_LEVEL || cells_per_edge > self.max_cells_per_edge as u128 {
            return Err(CoreError::CellBudgetExceeded {
                max_level,
                n_edge,
                cells_per_edge,
                budget: self.max_cells_per_edge,
            });
        }
        Ok(())
    }
}

type Key = (u32, [u32; 3]);

/// The adaptive octree. Node 0 is the root; `leaves` lists leaf nodes in
/// Morton order and `grids[i]` belongs to `leaves[i]`.
#[derive(Debug, Clone)]
pub struct Tree {
    pub geometry: DomainGeometry,
    pub max_level: u32,
    nodes: Vec<OctreeNode>,
    leaves: Vec<NodeId>,
    pub grids: Vec<SubGrid>,
    lookup: HashMap<Key, NodeId>,
}

impl Tree {
    /// Builds a tree whose leaves are exactly `leaves`, filled by sampling
    /// `ic` at cell centers. The set must tile the domain.
    pub fn from_leaves(
        geometry: DomainGeometry,
        leaves: &[(u32, [u32; 3])],
        ic: &InitialCondition,
    ) -> Result<Tree> {
        let set: BTreeSet<Key> = leaves.iter().copied().collect();
        if set.len() != leaves.len() {
            return Err(CoreError::InvalidConfig(
                "duplicate leaf in leaf set".into(),
            ));
        }
        let max_level = set.iter().map(|k| k.0).max().unwrap_or(0);
        if max_level > MORTON_MAX_LEVEL {
            return Err(CoreError::InvalidConfig(format!(
                "leaf level {max_level} too deep"
            )));
        }
        for &(level, index) in &set {
            if index.iter().any(|&i| i >= 1u32 << level) {
                return Err(CoreError::InvalidConfig(format!(
                    "leaf index {index:?} out of range at level {level}"
                )));
            }
        }
        // A tiling covers exactly the unit volume.
        let volume: u128 = set.iter().map(|k| 1u128 << (3 * (max_level - k.0))).sum();
        if volume != 1u128 << (3 * max_level) {
            return Err(CoreError::InvalidConfig(
                "leaf set does not tile the domain".into(),
            ));
        }
        let mut tree = Tree {
            geometry,
            max_level,
            nodes: Vec::new(),
            leaves: Vec::new(),
            grids: Vec::new(),
            lookup: HashMap::new(),
        };
        tree.insert(&set, (0, [0, 0, 0]), None)?;
        if tree.leaves.len() != set.len() {
            return Err(CoreError::InvalidConfig(
                "leaf set does not tile the domain".into(),
            ));
        }
        tree.grids = tree
            .leaves
            .iter()
            .map(|&n| {
                let node = &tree.nodes[n.idx()];
                sample_grid(&geometry, node.level, node.index, ic, false)
            })
            .collect();
        Ok(tree)
    }

    /// Every node at `level` is a leaf.
    pub fn uniform(geometry: DomainGeometry, level: u32, ic: &InitialCondition) -> Result<Tree> {
        let n = 1u32 << level;
        let mut leaves = Vec::with_capacity((n as usize).pow(3));
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    leaves.push((level, [x, y, z]));
                }
            }
        }
        Tree::from_leaves(geometry, &leaves, ic)
    }

    fn insert(&mut self, set: &BTreeSet<Key>, key: Key, parent: Option<NodeId>) -> Result<NodeId> {
        let id = NodeId(self.nodes.len() as u32);
        let (level, index) = key;
        self.nodes.push(OctreeNode {
            level,
            index,
            kind: NodeKind::Leaf(LeafId(0)),
            parent,
            locality: 0,
        });
        self.lookup.insert(key, id);
        if set.contains(&key) {
            let leaf = LeafId(self.leaves.len() as u32);
            self.leaves.push(id);
            self.nodes[id.idx()].kind = NodeKind::Leaf(leaf);
            return Ok(id);
        }
        if level >= self.max_level {
            return Err(CoreError::InvalidConfig(
                "leaf set does not tile the domain".into(),
            ));
        }
        let mut children = [NodeId(0); 8];
        for (oct, child) in children.iter_mut().enumerate() {
            *child = self.insert(set, (level + 1, child_index(index, oct)), Some(id))?;
        }
        self.nodes[id.idx()].kind = NodeKind::Interior(children);
        Ok(id)
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &OctreeNode {
        &self.nodes[id.idx()]
    }

    pub fn nodes(&self) -> &[OctreeNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn cell_count(&self) -> usize {
        self.leaves.len() * self.geometry.n_edge.pow(3)
    }

    pub fn leaf_node(&self, leaf: LeafId) -> NodeId {
        self.leaves[leaf.idx()]
    }

    /// Leaf node ids in Morton order.
    pub fn leaf_nodes(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn find(&self, level: u32, index: [u32; 3]) -> Option<NodeId> {
        self.lookup.get(&(level, index)).copied()
    }

    pub fn grid(&self, leaf: LeafId) -> &SubGrid {
        &self.grids[leaf.idx()]
    }

    pub fn set_locality(&mut self, node: NodeId, locality: u32) {
        self.nodes[node.idx()].locality = locality;
    }

    /// Node ids grouped by level, root first.
    pub fn levels(&self) -> Vec<Vec<NodeId>> {
        let deepest = self.nodes.iter().map(|n| n.level).max().unwrap_or(0);
        let mut out = vec![Vec::new(); deepest as usize + 1];
        for (i, n) in self.nodes.iter().enumerate() {
            out[n.level as usize].push(NodeId(i as u32));
        }
        out
    }

    /// The node's region at its own resolution: a leaf's cells, or the
    /// 8-to-1 mean of its children's restricted cells.
    pub fn restrict(&self, node: NodeId) -> Vec<ConservedState> {
        match self.node(node).kind {
            NodeKind::Leaf(l) => self.grids[l.idx()].cells.clone(),
            NodeKind::Interior(children) => {
                let kids: Vec<Vec<ConservedState>> =
                    children.iter().map(|&c| self.restrict(c)).collect();
                restrict_children(self.geometry.n_edge, |oct| &kids[oct])
            }
        }
    }

    /// True if face-adjacent leaves differ by at most one level, including
    /// across periodic faces.
    pub fn is_balanced(&self) -> bool {
        self.leaves.iter().all(|&leaf| {
            let level = self.node(leaf).level;
            Face::ALL
                .iter()
                .all(|&f| match face_neighbor_wrapped(self, leaf, f) {
                    NeighborRef::Coarser { node, .. } => self.node(node).level + 1 >= level,
                    NeighborRef::Finer(node) => face_children(f.opposite()).iter().all(|&oct| {
                        self.node(self.node(node).children().unwrap()[oct])
                            .is_leaf()
                    }),
                    _ => true,
                })
        })
    }
}

/// Restricts eight child blocks (indexed by octant) into one parent block.
pub(crate) fn restrict_children<'a>(
    n: usize,
    child: impl Fn(usize) -> &'a [ConservedState],
) -> Vec<ConservedState> {
    let half = n / 2;
    let mut out = vec![ConservedState::ZERO; n * n * n];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let oct = (i / half) | ((j / half) << 1) | ((k / half) << 2);
                let block = child(oct);
                let (fi, fj, fk) = (2 * (i % half), 2 * (j % half), 2 * (k % half));
                let mut acc = [0.0; crate::state::NFIELDS];
                for dz in 0..2 {
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let c = &block[(fi + dx) + n * ((fj + dy) + n * (fk + dz))];
                            for (f, a) in acc.iter_mut().enumerate() {
                                *a += c.field(f);
                            }
                        }
                    }
                }
                let mean = acc.map(|a| a * 0.125);
                out[i + n * (j + n * k)] = ConservedState::from_array(&mean);
            }
        }
    }
    out
}

#[inline]
pub(crate) fn child_index(index: [u32; 3], octant: usize) -> [u32; 3] {
    std::array::from_fn(|a| 2 * index[a] + ((octant >> a) & 1) as u32)
}

/// Octants of a node touching `face`.
pub fn face_children(face: Face) -> [usize; 4] {
    let bit = 1usize << face.axis();
    let want = if face.is_plus() { bit } else { 0 };
    let mut out = [0; 4];
    let mut n = 0;
    for oct in 0..8 {
        if oct & bit == want {
            out[n] = oct;
            n += 1;
        }
    }
    out
}

/// Leaves in Morton order of their level-normalised index.
pub fn enumerate_leaves(tree: &Tree) -> Vec<NodeId> {
    let mut v: Vec<(u64, NodeId)> = tree
        .leaves
        .iter()
        .map(|&id| {
            let n = tree.node(id);
            (level_normalized_key(n.level, n.index, tree.max_level), id)
        })
        .collect();
    v.sort_by_key(|e| e.0);
    v.into_iter().map(|e| e.1).collect()
}

/// Neighbour across `face` without wrapping: faces on the domain hull
/// report `DomainBoundary`.
pub fn face_neighbor(tree: &Tree, node: NodeId, face: Face) -> NeighborRef {
    neighbor_impl(tree, node, face, false)
}

/// Like [`face_neighbor`], but wraps across periodic domain faces.
pub fn face_neighbor_wrapped(tree: &Tree, node: NodeId, face: Face) -> NeighborRef {
    let wrap = tree.geometry.boundary == Boundary::Periodic;
    neighbor_impl(tree, node, face, wrap)
}

fn neighbor_impl(tree: &Tree, node: NodeId, face: Face, wrap: bool) -> NeighborRef {
    let n = tree.node(node);
    let Some(target) = shifted_index(n.level, n.index, face, wrap) else {
        return NeighborRef::DomainBoundary;
    };
    match tree.find(n.level, target) {
        Some(id) if tree.node(id).is_leaf() => NeighborRef::SameLevel(id),
        Some(id) => NeighborRef::Finer(id),
        None => {
            for up in 1..=n.level {
                let idx = target.map(|t| t >> up);
                if let Some(id) = tree.find(n.level - up, idx) {
                    let sub = target.map(|t| (t >> (up - 1)) & 1);
                    let octant = (sub[0] | (sub[1] << 1) | (sub[2] << 2)) as u8;
                    return NeighborRef::Coarser { node: id, octant };
                }
            }
            unreachable!("root covers every position")
        }
    }
}

fn shifted_index(level: u32, index: [u32; 3], face: Face, wrap: bool) -> Option<[u32; 3]> {
    let side = 1i64 << level;
    let mut out = index;
    let a = face.axis();
    let v = index[a] as i64 + face.step();
    if v < 0 || v >= side {
        if !wrap {
            return None;
        }
        out[a] = v.rem_euclid(side) as u32;
    } else {
        out[a] = v as u32;
    }
    Some(out)
}

/// Point-samples `ic` at the cell centers of block `(level, index)`. With
/// `ghosts`, the ghost slabs are sampled too (wrapped into the domain on
/// periodic boundaries, mirrored on reflecting ones).
pub fn sample_grid(
    geometry: &DomainGeometry,
    level: u32,
    index: [u32; 3],
    ic: &InitialCondition,
    ghosts: bool,
) -> SubGrid {
    let n = geometry.n_edge;
    let h = geometry.cell_width(level);
    let origin = geometry.block_origin(level, index);
    let mut g = SubGrid::new(n, origin, h);
    for idx in 0..g.cells.len() {
        g.cells[idx] = ic(g.cell_center(idx));
    }
    if ghosts {
        for f in Face::ALL {
            let (t1, t2) = f.transverse();
            for layer in 0..GHOST_WIDTH {
                for v in 0..n {
                    for u in 0..n {
                        let mut x = [0.0; 3];
                        x[f.axis()] = if f.is_plus() {
                            origin[f.axis()] + (n + layer) as f64 * h + 0.5 * h
                        } else {
                            origin[f.axis()] - (layer as f64 + 0.5) * h
                        };
                        x[t1] = origin[t1] + (u as f64 + 0.5) * h;
                        x[t2] = origin[t2] + (v as f64 + 0.5) * h;
                        g.ghost.set(f, layer, u, v, ic(fold(geometry, x)));
                    }
                }
            }
        }
    }
    g
}

fn fold(geometry: &DomainGeometry, x: [f64; 3]) -> [f64; 3] {
    match geometry.boundary {
        Boundary::Periodic => geometry.wrap(x),
        Boundary::Reflecting => {
            let h = 0.5 * geometry.size;
            x.map(|v| {
                if v > h {
                    2.0 * h - v
                } else if v < -h {
                    -2.0 * h - v
                } else {
                    v
                }
            })
        }
    }
}

/// Builds the refined, 2:1-balanced tree for `ic`.
///
/// Flagged leaves are split and the tree rebalanced until no leaf below
/// `criteria.max_level` trips a predicate.
pub fn build_tree(
    geometry: DomainGeometry,
    ic: &InitialCondition,
    criteria: &RefinementCriteria,
    limits: TreeLimits,
) -> Result<Tree> {
    limits.check(criteria.max_level, geometry.n_edge)?;
    let mut leaves: BTreeSet<Key> = BTreeSet::new();
    leaves.insert((0, [0, 0, 0]));
    let mut flagged: HashMap<Key, bool> = HashMap::new();
    loop {
        let split: Vec<Key> = leaves
            .iter()
            .copied()
            .filter(|&(level, index)| {
                level < criteria.max_level
                    && *flagged.entry((level, index)).or_insert_with(|| {
                        let g = sample_grid(&geometry, level, index, ic, true);
                        flag_for_refinement(&g, criteria)
                    })
            })
            .collect();
        for key in &split {
            split_leaf(&mut leaves, *key);
        }
        let rebalanced = balance(&mut leaves, geometry.boundary == Boundary::Periodic);
        if split.is_empty() && !rebalanced {
            break;
        }
    }
    let list: Vec<Key> = leaves.into_iter().collect();
    let mut tree = Tree::from_leaves(geometry, &list, ic)?;
    tree.max_level = criteria.max_level.max(tree.max_level);
    log::debug!(
        "built tree: {} leaves, {} nodes, max level {}",
        tree.leaf_count(),
        tree.node_count(),
        tree.max_level
    );
    Ok(tree)
}

fn split_leaf(leaves: &mut BTreeSet<Key>, key: Key) {
    if leaves.remove(&key) {
        for oct in 0..8 {
            leaves.insert((key.0 + 1, child_index(key.1, oct)));
        }
    }
}

/// Refines a leaf tiling until face neighbours differ by at most one level.
pub fn balance_leaves(leaves: &[(u32, [u32; 3])], periodic: bool) -> Vec<(u32, [u32; 3])> {
    let mut set: BTreeSet<Key> = leaves.iter().copied().collect();
    balance(&mut set, periodic);
    set.into_iter().collect()
}

/// Splits leaves until face neighbours differ by at most one level.
/// Returns true if anything was split.
fn balance(leaves: &mut BTreeSet<Key>, periodic: bool) -> bool {
    let mut any = false;
    loop {
        let mut to_split = BTreeSet::new();
        for &(level, index) in leaves.iter() {
            if level < 2 {
                continue;
            }
            for f in Face::ALL {
                let Some(target) = shifted_index(level, index, f, periodic) else {
                    continue;
                };
                for up in 2..=level {
                    let key = (level - up, target.map(|t| t >> up));
                    if leaves.contains(&key) {
                        to_split.insert(key);
                        break;
                    }
                }
            }
        }
        if to_split.is_empty() {
            return any;
        }
        any = true;
        for key in to_split {
            split_leaf(leaves, key);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> DomainGeometry {
        DomainGeometry::new(1.0, 4, Boundary::Periodic).unwrap()
    }

    fn constant(rho: f64) -> impl Fn([f64; 3]) -> ConservedState + Send + Sync {
        move |_| ConservedState {
            rho,
            s: [0.0; 3],
            egas: 1.0,
            tracers: [0.0; 2],
        }
    }

    #[test]
    fn max_level_zero_gives_root_leaf() {
        let crit = RefinementCriteria::new(1.0, 1.0, 0.1, 0).unwrap();
        let t = build_tree(geom(), &constant(100.0), &crit, TreeLimits::default()).unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.grids[0].cells.len(), 64);
        for f in Face::ALL {
            assert_eq!(face_neighbor(&t, t.root(), f), NeighborRef::DomainBoundary);
        }
    }

    #[test]
    fn dense_everywhere_fully_refines() {
        let crit = RefinementCriteria::new(1.0, 1.0, 0.1, 2).unwrap();
        let t = build_tree(geom(), &constant(10.0), &crit, TreeLimits::default()).unwrap();
        assert_eq!(t.leaf_count(), 64);
        assert!(t.is_balanced());
    }

    #[test]
    fn budget_guard_rejects() {
        let crit = RefinementCriteria::new(1.0, 1.0, 0.1, 15).unwrap();
        let err = build_tree(geom(), &constant(0.1), &crit, TreeLimits::default()).unwrap_err();
        assert!(matches!(err, CoreError::CellBudgetExceeded { .. }));
    }

    #[test]
    fn level_one_neighbors() {
        let t = Tree::uniform(geom(), 1, &constant(1.0)).unwrap();
        let leaves = enumerate_leaves(&t);
        let idx: Vec<[u32; 3]> = leaves.iter().map(|&l| t.node(l).index).collect();
        assert_eq!(idx[0], [0, 0, 0]);
        assert_eq!(idx[1], [1, 0, 0]);
        assert_eq!(idx[2], [0, 1, 0]);
        assert_eq!(idx[7], [1, 1, 1]);
        let a = t.find(1, [0, 0, 0]).unwrap();
        let b = t.find(1, [1, 0, 0]).unwrap();
        assert_eq!(
            face_neighbor(&t, a, Face::new(0, true)),
            NeighborRef::SameLevel(b)
        );
        assert_eq!(
            face_neighbor(&t, a, Face::new(0, false)),
            NeighborRef::DomainBoundary
        );
        assert_eq!(
            face_neighbor_wrapped(&t, a, Face::new(0, false)),
            NeighborRef::SameLevel(b)
        );
    }

    #[test]
    fn restriction_is_mean_of_children() {
        let ic = |x: [f64; 3]| ConservedState {
            rho: 1.0 + x[0] * x[0] + 0.3 * x[1] - x[2],
            s: [x[0], x[1], x[2]],
            egas: 2.0,
            tracers: [0.5, 0.1],
        };
        let t = Tree::uniform(geom(), 1, &ic).unwrap();
        let coarse = t.restrict(t.root());
        let fine: f64 = t
            .grids
            .iter()
            .flat_map(|g| g.cells.iter())
            .map(|c| c.rho)
            .sum();
        let sum: f64 = coarse.iter().map(|c| c.rho).sum();
        assert!((8.0 * sum - fine).abs() <= 1e-13 * fine);
    }

    #[test]
    fn from_leaves_rejects_gaps() {
        let leaves = vec![(1, [0, 0, 0]), (1, [1, 0, 0])];
        assert!(Tree::from_leaves(geom(), &leaves, &constant(1.0)).is_err());
    }

    #[test]
    fn face_children_touch_face() {
        assert_eq!(face_children(Face::new(0, true)), [1, 3, 5, 7]);
        assert_eq!(face_children(Face::new(2, false)), [0, 1, 2, 3]);
    }
}
