//! Lane-width abstraction for the hot kernels.
//!
//! Every kernel body is generic over [`Real`] and instantiated once for
//! plain `f64` (the scalar path) and once per supported [`Lanes`] width.

mod bench;
mod flux;
mod lanes;
mod m2l;

pub use bench::{simd_microbench, vector_capable_host, KernelId, KernelReport};
pub use flux::{run_flux_kernel, rusanov, FaceBatch, FluxBatch};
pub use lanes::{fill, Lanes, Real};
pub use m2l::{m2l_terms, run_m2l_kernel, M2lBatch, M2lSource, EXPANSION_LEN};

use crate::error::{CoreError, Result};

/// Lane widths a kernel can be instantiated for.
pub const WIDTHS: [usize; 5] = [1, 2, 4, 8, 16];

/// Width used by `--simd vector`.
pub const DEFAULT_VECTOR_WIDTH: usize = 4;

/// Process-wide choice of lanes per vector operation; width 1 is the scalar
/// path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LaneConfig {
    width: usize,
}

impl Default for LaneConfig {
    fn default() -> Self {
        LaneConfig::scalar()
    }
}

impl LaneConfig {
    pub fn new(width: usize) -> Result<Self> {
        if WIDTHS.contains(&width) {
            Ok(LaneConfig { width })
        } else {
            Err(CoreError::InvalidConfig(format!(
                "lane width {width} not in {WIDTHS:?}"
            )))
        }
    }

    pub fn scalar() -> Self {
        LaneConfig { width: 1 }
    }

    pub fn vector() -> Self {
        LaneConfig {
            width: DEFAULT_VECTOR_WIDTH,
        }
    }

    /// Parses `scalar`, `vector` or `vector<W>` (e.g. `vector4`).
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(LaneConfig::scalar()),
            "vector" => Ok(LaneConfig::vector()),
            _ => match s
                .strip_prefix("vector")
                .and_then(|w| w.parse::<usize>().ok())
            {
                Some(w) if w > 1 => LaneConfig::new(w),
                _ => Err(CoreError::InvalidConfig(format!(
                    "simd mode must be scalar or vector, got {s:?}"
                ))),
            },
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_scalar(&self) -> bool {
        self.width == 1
    }

    pub fn mode(&self) -> &'static str {
        if self.is_scalar() {
            "scalar"
        } else {
            "vector"
        }
    }
}

/// Lane kernels run through an AVX2-compiled copy when the CPU has it. The
/// scalar path always uses the baseline target, which has no 256-bit
/// registers.
#[cfg(target_arch = "x86_64")]
fn avx2_enabled() -> bool {
    static FLAG: std::sync::OnceLock<bool> = std::sync::OnceLock::new();
    *FLAG.get_or_init(|| std::is_x86_feature_detected!("avx2"))
}

/// Largest normwise deviation between `reference` and `candidate` over
/// groups of columns: for each group, max |c - r| divided by max |r|.
/// A group whose reference is identically zero must match exactly.
pub fn max_relative_deviation(
    reference: &[f64],
    candidate: &[f64],
    groups: &[std::ops::Range<usize>],
) -> f64 {
    assert_eq!(reference.len(), candidate.len());
    let mut worst: f64 = 0.0;
    for g in groups {
        let scale = reference[g.clone()]
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = reference[g.clone()]
            .iter()
            .zip(&candidate[g.clone()])
            .fold(0.0f64, |a, (r, c)| a.max((r - c).abs()));
        let dev = if scale > 0.0 {
            diff / scale
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(dev);
    }
    worst
}
