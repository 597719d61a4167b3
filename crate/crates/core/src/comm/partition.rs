use std::ops::Range;

use crate::error::{CoreError, Result};
use crate::grid::LeafId;

/// Owner locality of every leaf; localities own contiguous runs of the
/// Morton-ordered leaf list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionMap {
    ranges: Vec<Range<usize>>,
    owner: Vec<u32>,
}

impl DistributionMap {
    pub fn localities(&self) -> usize {
        self.ranges.len()
    }

    pub fn owner(&self, leaf: LeafId) -> u32 {
        self.owner[leaf.idx()]
    }

    pub fn leaves_of(&self, locality: u32) -> Range<usize> {
        self.ranges[locality as usize].clone()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }
}

/// Splits `leaves` Morton-ordered leaves into `localities` slabs whose
/// sizes differ by at most one, larger slabs first.
pub fn partition(leaves: usize, localities: usize) -> Result<DistributionMap> {
    if localities == 0 {
        return Err(CoreError::InvalidConfig("at least one locality is required".into()));
    }
    if localities > leaves {
        log::info!("{localities} localities for {leaves} leaves: some own nothing");
    }
    let (base, extra) = (leaves / localities, leaves % localities);
    let mut ranges = Vec::with_capacity(localities);
    let mut owner = Vec::with_capacity(leaves);
    let mut start = 0;
    for l in 0..localities {
        let len = base + usize::from(l < extra);
        ranges.push(start..start + len);
        owner.extend(std::iter::repeat(l as u32).take(len));
        start += len;
    }
    Ok(DistributionMap { ranges, owner })
}
