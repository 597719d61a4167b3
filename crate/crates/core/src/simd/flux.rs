use super::{LaneConfig, Lanes, Real};
use crate::state::{NFIELDS, NPRIM};

/// Left/right primitive states of a set of faces, one column per
/// component (rho, u, v, w, p, X1, X2).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceBatch {
    pub left: [Vec<f64>; NPRIM],
    pub right: [Vec<f64>; NPRIM],
}

/// Fluxes per face, one column per conserved field.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxBatch {
    pub flux: [Vec<f64>; NFIELDS],
}

impl Default for FaceBatch {
    fn default() -> Self {
        Self::new()
    }
}

impl FaceBatch {
    pub fn new() -> Self {
        FaceBatch {
            left: Default::default(),
            right: Default::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.left[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.left
            .iter_mut()
            .chain(self.right.iter_mut())
            .for_each(Vec::clear);
    }

    pub fn push(&mut self, left: &[f64; NPRIM], right: &[f64; NPRIM]) {
        for k in 0..NPRIM {
            self.left[k].push(left[k]);
            self.right[k].push(right[k]);
        }
    }
}

impl FluxBatch {
    pub fn new() -> Self {
        FluxBatch {
            flux: Default::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.flux[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> [f64; NFIELDS] {
        std::array::from_fn(|k| self.flux[k][i])
    }
}

impl Default for FluxBatch {
    fn default() -> Self {
        Self::new()
    }
}

/// Inert primitive state used to fill tail lanes; its flux is discarded.
const PAD: [f64; NPRIM] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];

#[inline(always)]
fn conserved_and_flux<T: Real>(
    w: &[T; NPRIM],
    axis: usize,
    gamma: f64,
) -> ([T; NFIELDS], [T; NFIELDS], T) {
    let rho = w[0];
    let u = [w[1], w[2], w[3]];
    let p = w[4];
    let s = [rho * u[0], rho * u[1], rho * u[2]];
    let ke = T::splat(0.5) * (s[0] * u[0] + s[1] * u[1] + s[2] * u[2]);
    let e = p / T::splat(gamma - 1.0) + ke;
    let t = [rho * w[5], rho * w[6]];
    let un = u[axis];
    let cons = [rho, s[0], s[1], s[2], e, t[0], t[1]];
    let mut f = [
        rho * un,
        s[0] * un,
        s[1] * un,
        s[2] * un,
        (e + p) * un,
        t[0] * un,
        t[1] * un,
    ];
    f[1 + axis] += p;
    let c = (T::splat(gamma) * p / rho).sqrt();
    (cons, f, un.abs() + c)
}

/// Rusanov flux through a face normal to `axis`.
#[inline(always)]
pub fn rusanov<T: Real>(wl: &[T; NPRIM], wr: &[T; NPRIM], axis: usize, gamma: f64) -> [T; NFIELDS] {
    let (ul, fl, sl) = conserved_and_flux(wl, axis, gamma);
    let (ur, fr, sr) = conserved_and_flux(wr, axis, gamma);
    let a = sl.max(sr);
    let half = T::splat(0.5);
    let mut f = [T::splat(0.0); NFIELDS];
    for k in 0..NFIELDS {
        f[k] = half * (fl[k] + fr[k]) - half * a * (ur[k] - ul[k]);
    }
    f
}

#[inline(always)]
fn kernel_scalar<const AXIS: usize>(b: &FaceBatch, gamma: f64, out: &mut FluxBatch) {
    for i in 0..b.len() {
        let mut wl = [0.0; NPRIM];
        let mut wr = [0.0; NPRIM];
        for k in 0..NPRIM {
            wl[k] = b.left[k][i];
            wr[k] = b.right[k][i];
        }
        let f = rusanov(&wl, &wr, AXIS, gamma);
        for k in 0..NFIELDS {
            out.flux[k][i] = f[k];
        }
    }
}

#[inline(always)]
fn kernel_lanes<const W: usize, const AXIS: usize>(b: &FaceBatch, gamma: f64, out: &mut FluxBatch) {
    let n = b.len();
    // Slicing every column to exactly n lets the compiler drop the per-chunk
    // bounds checks.
    let left: [&[f64]; NPRIM] = std::array::from_fn(|k| &b.left[k][..n]);
    let right: [&[f64]; NPRIM] = std::array::from_fn(|k| &b.right[k][..n]);
    let mut base = 0;
    let mut wl = [Lanes::<W>::splat(0.0); NPRIM];
    let mut wr = [Lanes::<W>::splat(0.0); NPRIM];
    {
        let [f0, f1, f2, f3, f4, f5, f6] = &mut out.flux;
        let dst: [&mut [f64]; NFIELDS] = [
            &mut f0[..n],
            &mut f1[..n],
            &mut f2[..n],
            &mut f3[..n],
            &mut f4[..n],
            &mut f5[..n],
            &mut f6[..n],
        ];
        while base + W <= n {
            for k in 0..NPRIM {
                wl[k] = Lanes::load(&left[k][base..base + W]);
                wr[k] = Lanes::load(&right[k][base..base + W]);
            }
            let f = rusanov(&wl, &wr, AXIS, gamma);
            for k in 0..NFIELDS {
                f[k].store(&mut dst[k][base..base + W]);
            }
            base += W;
        }
    }
    if base < n {
        for k in 0..NPRIM {
            wl[k] = Lanes::splat(PAD[k]);
            wr[k] = Lanes::splat(PAD[k]);
            for l in 0..n - base {
                wl[k].0[l] = b.left[k][base + l];
                wr[k].0[l] = b.right[k][base + l];
            }
        }
        let f = rusanov(&wl, &wr, AXIS, gamma);
        for k in 0..NFIELDS {
            out.flux[k][base..n].copy_from_slice(&f[k].0[..n - base]);
        }
    }
}

/// Rusanov fluxes for every face in `batch`; `out` is resized to match.
pub fn run_flux_kernel(
    batch: &FaceBatch,
    axis: usize,
    gamma: f64,
    lanes: LaneConfig,
    out: &mut FluxBatch,
) {
    assert!(axis < 3);
    let n = batch.len();
    for col in out.flux.iter_mut() {
        col.resize(n, 0.0);
    }
    #[cfg(target_arch = "x86_64")]
    if !lanes.is_scalar() && super::avx2_enabled() {
        // SAFETY: the CPU supports AVX2 (checked at runtime).
        unsafe { dispatch_avx2(batch, axis, gamma, lanes, out) };
        return;
    }
    dispatch(batch, axis, gamma, lanes, out);
}

// The axis is a const parameter so the normal-velocity pick and the
// pressure term fold away inside the lane loop.
#[inline(always)]
fn dispatch(batch: &FaceBatch, axis: usize, gamma: f64, lanes: LaneConfig, out: &mut FluxBatch) {
    macro_rules! by_axis {
        ($k:ident $(, $w:literal)?) => {
            match axis {
                0 => $k::<$($w,)? 0>(batch, gamma, out),
                1 => $k::<$($w,)? 1>(batch, gamma, out),
                _ => $k::<$($w,)? 2>(batch, gamma, out),
            }
        };
    }
    match lanes.width() {
        1 => by_axis!(kernel_scalar),
        2 => by_axis!(kernel_lanes, 2),
        4 => by_axis!(kernel_lanes, 4),
        8 => by_axis!(kernel_lanes, 8),
        16 => by_axis!(kernel_lanes, 16),
        w => unreachable!("LaneConfig admits no width {w}"),
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dispatch_avx2(
    batch: &FaceBatch,
    axis: usize,
    gamma: f64,
    lanes: LaneConfig,
    out: &mut FluxBatch,
) {
    dispatch(batch, axis, gamma, lanes, out)
}
