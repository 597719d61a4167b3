use super::{LaneConfig, Lanes, Real};
use crate::gravity::tensor::{contract2_3, contract2_4, contract3_4, dot2, dot3, Derivatives};

/// Columns of an interaction batch: separation R (3), mass, quadrupole (6),
/// octupole (10).
pub const M2L_COLUMNS: usize = 20;
/// Expansion coefficients per target: orders 0..4 packed as
/// 1 + 3 + 6 + 10 + 15.
pub const EXPANSION_LEN: usize = 35;

/// One source seen from one target. `r` is target center minus source
/// center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2lSource {
    pub r: [f64; 3],
    pub m: f64,
    pub quad: [f64; 6],
    pub oct: [f64; 10],
}

impl M2lSource {
    /// Contributes exactly zero.
    pub const INERT: M2lSource = M2lSource {
        r: [1.0, 0.0, 0.0],
        m: 0.0,
        quad: [0.0; 6],
        oct: [0.0; 10],
    };

    fn column(&self, c: usize) -> f64 {
        match c {
            0..=2 => self.r[c],
            3 => self.m,
            4..=9 => self.quad[c - 4],
            _ => self.oct[c - 10],
        }
    }
}

/// Structure-of-arrays batch of sources acting on a single target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct M2lBatch {
    cols: Vec<Vec<f64>>,
}

impl M2lBatch {
    pub fn new() -> Self {
        M2lBatch {
            cols: vec![Vec::new(); M2L_COLUMNS],
        }
    }

    pub fn with_capacity(n: usize) -> Self {
        M2lBatch {
            cols: (0..M2L_COLUMNS).map(|_| Vec::with_capacity(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        if self.cols.is_empty() {
            self.cols = vec![Vec::new(); M2L_COLUMNS];
        }
        self.cols.iter_mut().for_each(Vec::clear);
    }

    pub fn push(&mut self, s: &M2lSource) {
        if self.cols.is_empty() {
            self.cols = vec![Vec::new(); M2L_COLUMNS];
        }
        for (c, col) in self.cols.iter_mut().enumerate() {
            col.push(s.column(c));
        }
    }

    /// Appends inert entries up to a multiple of `width`.
    pub fn pad_to(&mut self, width: usize) {
        while self.len() % width != 0 {
            self.push(&M2lSource::INERT);
        }
    }

    pub fn get(&self, i: usize) -> M2lSource {
        let c = |k: usize| self.cols[k][i];
        M2lSource {
            r: [c(0), c(1), c(2)],
            m: c(3),
            quad: std::array::from_fn(|k| c(4 + k)),
            oct: std::array::from_fn(|k| c(10 + k)),
        }
    }
}

/// Positive contribution of one source; the expansion is minus the sum.
///
/// L0 = m D0 + Q:D2/2 - O:D3/6, L1 = m D1 + Q:D3/2 - O:D4/6,
/// L2 = m D2 + Q:D4/2, L3 = m D3, L4 = m D4.
///
/// The force between two cells then pairs source order s with target
/// order t for (s, t) in {(0,0), (2,0), (0,2), (3,0), (0,3)}; the set is
/// closed under swapping, so the pair force is antisymmetric.
#[inline(always)]
pub fn m2l_terms<T: Real>(r: [T; 3], m: T, q: &[T; 6], o: &[T; 10]) -> [T; EXPANSION_LEN] {
    let d = Derivatives::new(r);
    let half = T::splat(0.5);
    let sixth = T::splat(1.0 / 6.0);
    let mut out = [T::splat(0.0); EXPANSION_LEN];
    out[0] = m * d.d0 + half * dot2(q, &d.d2) - sixth * dot3(o, &d.d3);
    let q3 = contract2_3(q, &d.d3);
    let o4 = contract3_4(o, &d.d4);
    for k in 0..3 {
        out[1 + k] = m * d.d1[k] + half * q3[k] - sixth * o4[k];
    }
    let q4 = contract2_4(q, &d.d4);
    for k in 0..6 {
        out[4 + k] = m * d.d2[k] + half * q4[k];
    }
    for k in 0..10 {
        out[10 + k] = m * d.d3[k];
    }
    for k in 0..15 {
        out[20 + k] = m * d.d4[k];
    }
    out
}

#[inline(always)]
fn kernel_scalar(b: &M2lBatch) -> [f64; EXPANSION_LEN] {
    let mut acc = [0.0; EXPANSION_LEN];
    let mut v = [0.0; M2L_COLUMNS];
    for i in 0..b.len() {
        for c in 0..M2L_COLUMNS {
            v[c] = b.cols[c][i];
        }
        let (r, m, q, o) = split_columns(&v);
        let t = m2l_terms(r, m, &q, &o);
        for k in 0..EXPANSION_LEN {
            acc[k] += t[k];
        }
    }
    acc.map(|v| -v)
}

#[inline(always)]
fn split_columns<T: Real>(v: &[T; M2L_COLUMNS]) -> ([T; 3], T, [T; 6], [T; 10]) {
    let mut q = [T::splat(0.0); 6];
    let mut o = [T::splat(0.0); 10];
    q.copy_from_slice(&v[4..10]);
    o.copy_from_slice(&v[10..20]);
    ([v[0], v[1], v[2]], v[3], q, o)
}

#[inline(always)]
fn kernel_lanes<const W: usize>(b: &M2lBatch) -> [f64; EXPANSION_LEN] {
    let n = b.len();
    let mut acc = [Lanes::<W>::splat(0.0); EXPANSION_LEN];
    let mut v = [Lanes::<W>::splat(0.0); M2L_COLUMNS];
    let mut base = 0;
    while base < n {
        if base + W <= n {
            for c in 0..M2L_COLUMNS {
                v[c] = Lanes::load(&b.cols[c][base..base + W]);
            }
        } else {
            for c in 0..M2L_COLUMNS {
                v[c] = Lanes::splat(M2lSource::INERT.column(c));
                for l in 0..n - base {
                    v[c].0[l] = b.cols[c][base + l];
                }
            }
        }
        let (r, m, q, o) = split_columns(&v);
        let t = m2l_terms(r, m, &q, &o);
        for k in 0..EXPANSION_LEN {
            acc[k] += t[k];
        }
        base += W;
    }
    acc.map(|v| -v.horizontal_sum())
}

/// Expansion coefficients at the target from every source in `batch`.
///
/// Lane `l` accumulates entries `l, l + W, ...`; lanes are then summed in
/// index order, so results for a fixed width are deterministic.
pub fn run_m2l_kernel(batch: &M2lBatch, lanes: LaneConfig) -> [f64; EXPANSION_LEN] {
    #[cfg(target_arch = "x86_64")]
    if !lanes.is_scalar() && super::avx2_enabled() {
        // SAFETY: the CPU supports AVX2 (checked at runtime).
        return unsafe { dispatch_avx2(batch, lanes) };
    }
    dispatch(batch, lanes)
}

#[inline(always)]
fn dispatch(batch: &M2lBatch, lanes: LaneConfig) -> [f64; EXPANSION_LEN] {
    match lanes.width() {
        1 => kernel_scalar(batch),
        2 => kernel_lanes::<2>(batch),
        4 => kernel_lanes::<4>(batch),
        8 => kernel_lanes::<8>(batch),
        16 => kernel_lanes::<16>(batch),
        w => unreachable!("LaneConfig admits no width {w}"),
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn dispatch_avx2(batch: &M2lBatch, lanes: LaneConfig) -> [f64; EXPANSION_LEN] {
    dispatch(batch, lanes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mass_batch_is_zero() {
        let mut b = M2lBatch::new();
        for i in 0..13 {
            let mut s = M2lSource::INERT;
            s.r = [1.0 + i as f64, 2.0, -0.5];
            b.push(&s);
        }
        for w in [1, 2, 4, 8, 16] {
            let out = run_m2l_kernel(&b, LaneConfig::new(w).unwrap());
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn point_mass_coefficients() {
        let mut b = M2lBatch::new();
        b.push(&M2lSource {
            r: [8.0, 0.0, 0.0],
            m: 1.0,
            quad: [0.0; 6],
            oct: [0.0; 10],
        });
        let out = run_m2l_kernel(&b, LaneConfig::scalar());
        assert_eq!(out[0], -1.0 / 8.0);
        // g = -L1 points from target toward the source, magnitude 1/d^2.
        assert!((-out[1] + 1.0 / 64.0).abs() < 1e-18);
    }
}
