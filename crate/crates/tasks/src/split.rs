use std::ops::Range;

/// How many tasks a single kernel launch is split into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitPolicy {
    tasks_per_kernel: usize,
}

impl SplitPolicy {
    /// Returns `None` for `tasks_per_kernel == 0`.
    pub fn new(tasks_per_kernel: usize) -> Option<Self> {
        (tasks_per_kernel >= 1).then_some(SplitPolicy { tasks_per_kernel })
    }

    pub fn single() -> Self {
        SplitPolicy {
            tasks_per_kernel: 1,
        }
    }

    pub fn tasks_per_kernel(&self) -> usize {
        self.tasks_per_kernel
    }

    /// Number of chunks actually launched for a range of `len` indices.
    pub fn effective_tasks(&self, len: usize) -> usize {
        self.tasks_per_kernel.min(len)
    }
}

impl Default for SplitPolicy {
    fn default() -> Self {
        Self::single()
    }
}

/// Partitions `range` into `min(tasks, len)` contiguous chunks whose sizes
/// differ by at most one. Larger chunks come first.
pub fn split_chunks(range: Range<usize>, tasks: usize) -> Vec<Range<usize>> {
    let len = range.end.saturating_sub(range.start);
    let k = tasks.max(1).min(len);
    if k == 0 {
        return Vec::new();
    }
    let base = len / k;
    let extra = len % k;
    let mut out = Vec::with_capacity(k);
    let mut start = range.start;
    for c in 0..k {
        let size = base + usize::from(c < extra);
        out.push(start..start + size);
        start += size;
    }
    debug_assert_eq!(start, range.end);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sixteen_chunks_of_thirty_two() {
        let chunks = split_chunks(0..512, 16);
        assert_eq!(chunks.len(), 16);
        assert!(chunks.iter().all(|c| c.len() == 32));
    }

    #[test]
    fn single_chunk_is_whole_range() {
        assert_eq!(split_chunks(3..40, 1), vec![3..40]);
    }

    #[test]
    fn clamps_to_range_length() {
        let chunks = split_chunks(0..5, 16);
        assert_eq!(chunks, vec![0..1, 1..2, 2..3, 3..4, 4..5]);
        assert_eq!(SplitPolicy::new(16).unwrap().effective_tasks(5), 5);
    }

    #[test]
    fn empty_range_has_no_chunks() {
        assert!(split_chunks(7..7, 4).is_empty());
    }

    #[test]
    fn zero_tasks_rejected() {
        assert!(SplitPolicy::new(0).is_none());
    }

    proptest! {
        #[test]
        fn chunks_cover_range_exactly(start in 0usize..1000, len in 0usize..5000, t in 1usize..64) {
            let chunks = split_chunks(start..start + len, t);
            prop_assert_eq!(chunks.len(), t.min(len));
            let mut next = start;
            for c in &chunks {
                prop_assert_eq!(c.start, next);
                next = c.end;
            }
            prop_assert_eq!(next, start + len);
            if let (Some(max), Some(min)) = (chunks.iter().map(|c| c.len()).max(), chunks.iter().map(|c| c.len()).min()) {
                prop_assert!(max - min <= 1);
            }
        }
    }
}
