use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    max_relative_deviation, run_flux_kernel, run_m2l_kernel, FaceBatch, FluxBatch, LaneConfig,
    M2lBatch, M2lSource, EXPANSION_LEN,
};
use crate::error::{CoreError, Result};
use crate::state::NFIELDS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    M2l,
    Flux,
}

impl KernelId {
    pub fn name(self) -> &'static str {
        match self {
            KernelId::M2l => "m2l",
            KernelId::Flux => "flux",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "m2l" => Ok(KernelId::M2l),
            "flux" => Ok(KernelId::Flux),
            _ => Err(CoreError::InvalidConfig(format!("unknown kernel {s:?}"))),
        }
    }
}

/// Timing and accuracy of one kernel run.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub kernel: &'static str,
    pub mode: &'static str,
    pub width: usize,
    pub elements: usize,
    /// Best wall time of one pass over the input.
    pub seconds: f64,
    /// Max relative deviation from the scalar result on the same input.
    pub deviation: f64,
}

/// True if the running CPU executes more than one f64 per vector
/// instruction at the width the lane kernels are compiled for (256-bit
/// AVX2 on x86-64, SVE on aarch64).
pub fn vector_capable_host() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("avx2")
    }
    #[cfg(target_arch = "aarch64")]
    {
        std::arch::is_aarch64_feature_detected!("sve")
    }
    #[cfg(not(any(target_arch = "x86_64", target_arch = "aarch64")))]
    {
        false
    }
}

pub(crate) fn random_m2l_batch(rng: &mut ChaCha8Rng, n: usize) -> M2lBatch {
    let mut b = M2lBatch::with_capacity(n);
    for _ in 0..n {
        let dir: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2])
            .sqrt()
            .max(1e-3);
        let dist = rng.gen_range(2.0..10.0);
        b.push(&M2lSource {
            r: dir.map(|v| v / len * dist),
            m: rng.gen_range(0.0..1.0),
            quad: std::array::from_fn(|_| rng.gen_range(-0.1..0.1)),
            oct: std::array::from_fn(|_| rng.gen_range(-0.05..0.05)),
        });
    }
    b
}

pub(crate) fn random_face_batch(rng: &mut ChaCha8Rng, n: usize) -> FaceBatch {
    let mut b = FaceBatch::new();
    let state = |rng: &mut ChaCha8Rng| {
        let x1 = rng.gen_range(0.0..0.5);
        [
            rng.gen_range(0.1..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.1..3.0),
            x1,
            rng.gen_range(0.0..1.0 - x1),
        ]
    };
    for _ in 0..n {
        let l = state(rng);
        let r = state(rng);
        b.push(&l, &r);
    }
    b
}

fn best_time(mut pass: impl FnMut()) -> f64 {
    pass();
    let budget = Duration::from_millis(60);
    let start = Instant::now();
    let mut best = f64::INFINITY;
    let mut reps = 0;
    while reps < 3 || (start.elapsed() < budget && reps < 1000) {
        let t = Instant::now();
        pass();
        best = best.min(t.elapsed().as_secs_f64());
        reps += 1;
    }
    best
}

/// Times `kernel` at each size in scalar mode and at `lanes`, over the same
/// random inputs. Returns a scalar and a vector report per size.
pub fn simd_microbench(
    kernel: KernelId,
    sizes: &[usize],
    lanes: LaneConfig,
    seed: u64,
) -> Result<Vec<KernelReport>> {
    if let Some(_) = sizes.iter().find(|&&s| s == 0) {
        return Err(CoreError::InvalidConfig(
            "microbench size must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let scalar = LaneConfig::scalar();
    for &n in sizes {
        let modes = [scalar, lanes];
        match kernel {
            KernelId::M2l => {
                let batch = random_m2l_batch(&mut rng, n);
                let reference = run_m2l_kernel(&batch, scalar);
                let groups = [0..1, 1..4, 4..10, 10..20, 20..EXPANSION_LEN];
                for mode in modes {
                    let mut res = [0.0; EXPANSION_LEN];
                    let seconds =
                        best_time(|| res = std::hint::black_box(run_m2l_kernel(&batch, mode)));
                    out.push(KernelReport {
                        kernel: kernel.name(),
                        mode: mode.mode(),
                        width: mode.width(),
                        elements: n,
                        seconds,
                        deviation: max_relative_deviation(&reference, &res, &groups),
                    });
                }
            }
            KernelId::Flux => {
                let batch = random_face_batch(&mut rng, n);
                let axis = rng.gen_range(0..3);
                let mut reference = FluxBatch::new();
                run_flux_kernel(&batch, axis, 5.0 / 3.0, scalar, &mut reference);
                let flat_ref: Vec<f64> = reference.flux.concat();
                let groups: Vec<_> = (0..NFIELDS).map(|k| k * n..(k + 1) * n).collect();
                for mode in modes {
                    let mut res = FluxBatch::new();
                    let seconds = best_time(|| {
                        run_flux_kernel(&batch, axis, 5.0 / 3.0, mode, &mut res);
                        std::hint::black_box(&res);
                    });
                    out.push(KernelReport {
                        kernel: kernel.name(),
                        mode: mode.mode(),
                        width: mode.width(),
                        elements: n,
                        seconds,
                        deviation: max_relative_deviation(&flat_ref, &res.flux.concat(), &groups),
                    });
                }
            }
        }
    }
    Ok(out)
}
