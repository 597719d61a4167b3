use octomini_core::grid::{
    build_tree, enumerate_leaves, face_neighbor, face_neighbor_wrapped, flag_for_refinement,
    sample_grid, Boundary, DomainGeometry, Face, NeighborRef, NodeId, NodeKind, RefinementCriteria,
    Tree, TreeLimits,
};
use octomini_core::state::ConservedState;
use proptest::prelude::*;

fn blob(
    center: [f64; 3],
    width: f64,
    peak: f64,
) -> impl Fn([f64; 3]) -> ConservedState + Send + Sync {
    move |x| {
        let r2: f64 = (0..3).map(|a| (x[a] - center[a]).powi(2)).sum();
        ConservedState {
            rho: 1e-3 + peak * (-r2 / (width * width)).exp(),
            s: [0.0; 3],
            egas: 1.0,
            tracers: [0.0; 2],
        }
    }
}

fn rho_of(ic: &dyn Fn([f64; 3]) -> ConservedState, size: f64, x: [f64; 3]) -> f64 {
    let w = x.map(|v| v - size * ((v + 0.5 * size) / size).floor());
    ic(w).rho
}

/// Scalar predicate for block (level, index), sampling the density directly.
fn lattice_flag(
    ic: &dyn Fn([f64; 3]) -> ConservedState,
    size: f64,
    n: usize,
    level: u32,
    index: [u32; 3],
    c: &RefinementCriteria,
) -> bool {
    let h = size / ((n as f64) * (1u64 << level) as f64);
    let bw = size / (1u64 << level) as f64;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let x = [
                    -0.5 * size + index[0] as f64 * bw + (i as f64 + 0.5) * h,
                    -0.5 * size + index[1] as f64 * bw + (j as f64 + 0.5) * h,
                    -0.5 * size + index[2] as f64 * bw + (k as f64 + 0.5) * h,
                ];
                let r = rho_of(ic, size, x);
                if r > c.density_threshold {
                    return true;
                }
                let mut g2 = 0.0;
                for a in 0..3 {
                    let mut p = x;
                    let mut m = x;
                    p[a] += h;
                    m[a] -= h;
                    let d = 0.5 * (rho_of(ic, size, p) - rho_of(ic, size, m));
                    g2 += d * d;
                }
                if g2.sqrt() / r > c.gradient_threshold {
                    return true;
                }
            }
        }
    }
    false
}

/// Leaf count from a per-lattice-cell level map at the finest level: refine
/// flagged blocks, enforce face balance cell by cell, repeat.
fn lattice_leaf_count(
    ic: &dyn Fn([f64; 3]) -> ConservedState,
    size: f64,
    n: usize,
    c: &RefinementCriteria,
) -> usize {
    let top = c.max_level;
    let side = 1usize << top;
    let at = |x: usize, y: usize, z: usize| x + side * (y + side * z);
    let mut lvl = vec![0u32; side * side * side];
    loop {
        let mut changed = false;
        let snapshot = lvl.clone();
        for z in 0..side {
            for y in 0..side {
                for x in 0..side {
                    let l = snapshot[at(x, y, z)];
                    if l < top {
                        let s = top - l;
                        let idx = [(x >> s) as u32, (y >> s) as u32, (z >> s) as u32];
                        if lattice_flag(ic, size, n, l, idx, c) {
                            lvl[at(x, y, z)] = l + 1;
                            changed = true;
                        }
                    }
                }
            }
        }
        loop {
            let mut raised = false;
            let snapshot = lvl.clone();
            for z in 0..side {
                for y in 0..side {
                    for x in 0..side {
                        let here = snapshot[at(x, y, z)];
                        for a in 0..3 {
                            for step in [1, side - 1] {
                                let mut p = [x, y, z];
                                p[a] = (p[a] + step) % side;
                                let there = snapshot[at(p[0], p[1], p[2])];
                                if there > here + 1 {
                                    // raise the whole block containing (x,y,z)
                                    let s = top - here;
                                    let base = [x >> s << s, y >> s << s, z >> s << s];
                                    for dz in 0..1 << s {
                                        for dy in 0..1 << s {
                                            for dx in 0..1 << s {
                                                let q =
                                                    at(base[0] + dx, base[1] + dy, base[2] + dz);
                                                lvl[q] = lvl[q].max(here + 1);
                                            }
                                        }
                                    }
                                    raised = true;
                                }
                            }
                        }
                    }
                }
            }
            if !raised {
                break;
            }
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let total: f64 = lvl.iter().map(|&l| 0.125f64.powi((top - l) as i32)).sum();
    total.round() as usize
}

#[test]
fn gaussian_blob_leaf_count_matches_lattice_oracle() {
    let geometry = DomainGeometry::new(2.0, 4, Boundary::Periodic).unwrap();
    let ic = blob([0.21, -0.13, 0.05], 0.25, 5.0);
    let crit = RefinementCriteria::new(2.0, 0.15, 0.01, 3).unwrap();
    let tree = build_tree(geometry, &ic, &crit, TreeLimits::default()).unwrap();
    let expected = lattice_leaf_count(&ic, 2.0, 4, &crit);
    assert_eq!(tree.leaf_count(), expected);
    assert!(tree.leaf_count() > 8 && tree.leaf_count() < 512);
    assert!(tree.is_balanced());
}

#[test]
fn build_reaches_fixed_point() {
    let geometry = DomainGeometry::new(2.0, 4, Boundary::Periodic).unwrap();
    let ic = blob([0.0, 0.4, -0.2], 0.2, 8.0);
    let crit = RefinementCriteria::new(3.0, 0.2, 0.01, 4).unwrap();
    let tree = build_tree(geometry, &ic, &crit, TreeLimits::default()).unwrap();
    for &leaf in tree.leaf_nodes() {
        let n = tree.node(leaf);
        if n.level < crit.max_level {
            let g = sample_grid(&geometry, n.level, n.index, &ic, true);
            assert!(
                !flag_for_refinement(&g, &crit),
                "leaf {:?} still flagged",
                n.index
            );
        }
    }
}

/// Root refined once, octant 0 refined again: 7 level-1 leaves plus 8
/// level-2 leaves.
fn fifteen_leaf_tree() -> Tree {
    let g = DomainGeometry::new(1.0, 4, Boundary::Periodic).unwrap();
    let mut leaves = Vec::new();
    for oct in 1..8u32 {
        leaves.push((1, [oct & 1, (oct >> 1) & 1, (oct >> 2) & 1]));
    }
    for oct in 0..8u32 {
        leaves.push((2, [oct & 1, (oct >> 1) & 1, (oct >> 2) & 1]));
    }
    Tree::from_leaves(g, &leaves, &|_| ConservedState::ZERO).unwrap()
}

#[test]
fn coarser_neighbor_reports_octant() {
    let t = fifteen_leaf_tree();
    let coarse = t.find(1, [1, 0, 0]).unwrap();
    let a = t.find(2, [1, 0, 0]).unwrap();
    assert_eq!(
        face_neighbor(&t, a, Face::new(0, true)),
        NeighborRef::Coarser {
            node: coarse,
            octant: 0
        }
    );
    let b = t.find(2, [1, 1, 1]).unwrap();
    assert_eq!(
        face_neighbor(&t, b, Face::new(0, true)),
        NeighborRef::Coarser {
            node: coarse,
            octant: 6
        }
    );
    let up = t.find(1, [0, 1, 0]).unwrap();
    assert_eq!(
        face_neighbor(&t, b, Face::new(1, true)),
        NeighborRef::Coarser {
            node: up,
            octant: 4 | 1
        }
    );
    // From the coarse side the refined octant shows up as Finer.
    let refined = t.find(1, [0, 0, 0]).unwrap();
    assert_eq!(
        face_neighbor(&t, coarse, Face::new(0, false)),
        NeighborRef::Finer(refined)
    );
    assert_eq!(
        face_neighbor(&t, a, Face::new(0, false)),
        NeighborRef::SameLevel(t.find(2, [0, 0, 0]).unwrap())
    );
    assert_eq!(
        face_neighbor(&t, t.find(2, [0, 0, 0]).unwrap(), Face::new(0, false)),
        NeighborRef::DomainBoundary
    );
    assert_eq!(
        face_neighbor_wrapped(&t, t.find(2, [0, 0, 0]).unwrap(), Face::new(0, false)),
        NeighborRef::Coarser {
            node: coarse,
            octant: 1
        }
    );
}

fn naive_leaves(t: &Tree, node: NodeId, out: &mut Vec<NodeId>) {
    match t.node(node).kind {
        NodeKind::Leaf(_) => out.push(node),
        NodeKind::Interior(children) => {
            for c in children {
                naive_leaves(t, c, out);
            }
        }
    }
}

#[test]
fn enumeration_matches_recursion() {
    let t = fifteen_leaf_tree();
    let mut expected = Vec::new();
    naive_leaves(&t, t.root(), &mut expected);
    assert_eq!(enumerate_leaves(&t), expected);
    assert_eq!(enumerate_leaves(&t), enumerate_leaves(&t));
    assert_eq!(t.leaf_nodes(), expected.as_slice());
}

/// Brute-force balance test on the finest lattice.
fn lattice_balanced(t: &Tree) -> bool {
    let top = t
        .leaf_nodes()
        .iter()
        .map(|&l| t.node(l).level)
        .max()
        .unwrap();
    let side = 1usize << top;
    let mut lvl = vec![0u32; side * side * side];
    for &l in t.leaf_nodes() {
        let n = t.node(l);
        let s = top - n.level;
        for dz in 0..1usize << s {
            for dy in 0..1usize << s {
                for dx in 0..1usize << s {
                    let x = ((n.index[0] as usize) << s) + dx;
                    let y = ((n.index[1] as usize) << s) + dy;
                    let z = ((n.index[2] as usize) << s) + dz;
                    lvl[x + side * (y + side * z)] = n.level;
                }
            }
        }
    }
    for z in 0..side {
        for y in 0..side {
            for x in 0..side {
                let here = lvl[x + side * (y + side * z)];
                for a in 0..3 {
                    let mut p = [x, y, z];
                    p[a] = (p[a] + 1) % side;
                    let there = lvl[p[0] + side * (p[1] + side * p[2])];
                    if here.abs_diff(there) > 1 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn built_trees_are_balanced(
        cx in -0.9f64..0.9, cy in -0.9f64..0.9, cz in -0.9f64..0.9,
        width in 0.05f64..0.4, max_level in 1u32..=5,
    ) {
        let geometry = DomainGeometry::new(2.0, 4, Boundary::Periodic).unwrap();
        let ic = blob([cx, cy, cz], width, 10.0);
        let crit = RefinementCriteria::new(4.0, 1e9, 0.01, max_level).unwrap();
        let tree = build_tree(geometry, &ic, &crit, TreeLimits::default()).unwrap();
        prop_assert!(tree.is_balanced());
        prop_assert!(lattice_balanced(&tree));
    }

    #[test]
    fn restriction_conserves_field_sums(seed in 0u64..1000) {
        let geometry = DomainGeometry::new(1.0, 4, Boundary::Periodic).unwrap();
        let ic = move |x: [f64; 3]| {
            let s = seed as f64 * 0.37;
            ConservedState {
                rho: 1.5 + (13.0 * x[0] + s).sin() * (7.0 * x[1]).cos(),
                s: [(x[2] * 9.0 + s).sin(), x[0] - x[1], 0.1],
                egas: 4.0 + (5.0 * x[2]).cos(),
                tracers: [0.2 + 0.1 * (x[0] * 3.0).sin(), 0.3],
            }
        };
        let crit = RefinementCriteria::new(2.2, 1e9, 0.01, 2).unwrap();
        let tree = build_tree(geometry, &ic, &crit, TreeLimits::default()).unwrap();
        for (id, node) in tree.nodes().iter().enumerate() {
            let Some(children) = node.children() else { continue };
            let parent = tree.restrict(NodeId(id as u32));
            for f in 0..7 {
                let coarse: f64 = parent.iter().map(|c| c.field(f)).sum::<f64>() * 8.0;
                let fine: f64 = children
                    .iter()
                    .flat_map(|&c| tree.restrict(c))
                    .map(|c| c.field(f))
                    .sum();
                let scale = parent.iter().map(|c| c.field(f).abs()).sum::<f64>() * 8.0;
                prop_assert!((coarse - fine).abs() <= 1e-13 * scale.max(1e-300));
            }
        }
    }
}
