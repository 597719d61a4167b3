use sha2::{Digest, Sha256};

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation with a fixed split pattern.
///
/// The result depends only on the input order, never on how the caller
/// scheduled the computation of the inputs.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(0.0, |a, b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Component-wise pairwise sum of 3-vectors.
pub fn pairwise_sum3(values: &[[f64; 3]]) -> [f64; 3] {
    std::array::from_fn(|k| {
        let comp: Vec<f64> = values.iter().map(|v| v[k]).collect();
        pairwise_sum(&comp)
    })
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// SHA-256 over a stream of f64 values in their little-endian encoding.
#[derive(Default)]
pub struct StateHasher {
    inner: Sha256,
}

impl StateHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, v: f64) {
        self.inner.update(v.to_le_bytes());
    }

    pub fn push_u64(&mut self, v: u64) {
        self.inner.update(v.to_le_bytes());
    }

    pub fn finish(self) -> String {
        hex::encode(self.inner.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn hasher_distinguishes_signed_zero() {
        let mut a = StateHasher::new();
        a.push(0.0);
        let mut b = StateHasher::new();
        b.push(-0.0);
        assert_ne!(a.finish(), b.finish());
    }
}
