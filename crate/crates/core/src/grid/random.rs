use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainGeometry, Tree};
use crate::error::{CoreError, Result};
use crate::state::ConservedState;

/// A random tiling of the unit octree: a random number of refinements, each
/// splitting a uniformly chosen leaf above `max_level`, never exceeding
/// `max_leaves` leaves.
pub fn random_leaf_set(rng: &mut impl Rng, max_level: u32, max_leaves: usize) -> Vec<(u32, [u32; 3])> {
    let mut leaves = vec![(0u32, [0u32; 3])];
    let budget = max_leaves.saturating_sub(1) / 7;
    let splits = if budget == 0 { 0 } else { rng.gen_range(1..=budget) };
    for _ in 0..splits {
        let open: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i].0 < max_level).collect();
        let Some(&i) = open.choose(rng) else { break };
        let (level, idx) = leaves.swap_remove(i);
        for o in 0..8u32 {
            let c = [2 * idx[0] + (o & 1), 2 * idx[1] + ((o >> 1) & 1), 2 * idx[2] + (o >> 2)];
            leaves.push((level + 1, c));
        }
    }
    leaves
}

/// Random tree with density uniform in `[0.1, 1)` per cell, at rest.
pub fn random_tree(geometry: DomainGeometry, seed: u64, max_level: u32, max_leaves: usize) -> Result<Tree> {
    if max_leaves == 0 {
        return Err(CoreError::InvalidConfig("max_leaves must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaves = random_leaf_set(&mut rng, max_level, max_leaves);
    let mut tree = Tree::from_leaves(geometry, &leaves, &|_| ConservedState::ZERO)?;
    for g in tree.grids.iter_mut() {
        for c in g.cells.iter_mut() {
            c.rho = rng.gen_range(0.1..1.0);
            c.egas = 1.0;
        }
    }
    Ok(tree)
}
