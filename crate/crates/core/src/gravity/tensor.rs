//! Symmetric Cartesian tensors up to rank 4 and the derivative tensors of
//! 1/r.
//!
//! Components are stored once per sorted multi-index: rank 2 as
//! xx, xy, xz, yy, yz, zz; rank 3 as xxx, xxy, xxz, xyy, xyz, xzz, yyy, yyz,
//! yzz, zzz; rank 4 in the same lexicographic order (15 entries).

pub type Sym2 = [f64; 6];
pub type Sym3 = [f64; 10];
pub type Sym4 = [f64; 15];

use crate::simd::Real;

const fn build2() -> [[usize; 3]; 3] {
    let mut t = [[0; 3]; 3];
    let mut n = 0;
    let mut i = 0;
    while i < 3 {
        let mut j = i;
        while j < 3 {
            t[i][j] = n;
            t[j][i] = n;
            n += 1;
            j += 1;
        }
        i += 1;
    }
    t
}

const fn sorted3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let (mut a, mut b, mut c) = (a, b, c);
    if a > b {
        let t = a;
        a = b;
        b = t;
    }
    if b > c {
        let t = b;
        b = c;
        c = t;
    }
    if a > b {
        let t = a;
        a = b;
        b = t;
    }
    (a, b, c)
}

const fn build3() -> [[[usize; 3]; 3]; 3] {
    let mut ord = [[[usize::MAX; 3]; 3]; 3];
    let mut n = 0;
    let mut i = 0;
    while i < 3 {
        let mut j = i;
        while j < 3 {
            let mut k = j;
            while k < 3 {
                ord[i][j][k] = n;
                n += 1;
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    let mut t = [[[0; 3]; 3]; 3];
    let mut i = 0;
    while i < 3 {
        let mut j = 0;
        while j < 3 {
            let mut k = 0;
            while k < 3 {
                let (a, b, c) = sorted3(i, j, k);
                t[i][j][k] = ord[a][b][c];
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    t
}

const fn build4() -> [[[[usize; 3]; 3]; 3]; 3] {
    let mut ord = [[[[usize::MAX; 3]; 3]; 3]; 3];
    let mut n = 0;
    let mut i = 0;
    while i < 3 {
        let mut j = i;
        while j < 3 {
            let mut k = j;
            while k < 3 {
                let mut l = k;
                while l < 3 {
                    ord[i][j][k][l] = n;
                    n += 1;
                    l += 1;
                }
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    let mut t = [[[[0; 3]; 3]; 3]; 3];
    let mut i = 0;
    while i < 3 {
        let mut j = 0;
        while j < 3 {
            let mut k = 0;
            while k < 3 {
                let mut l = 0;
                while l < 3 {
                    // sort four indices
                    let mut s = [i, j, k, l];
                    let mut p = 0;
                    while p < 4 {
                        let mut q = 0;
                        while q + 1 < 4 - p {
                            if s[q] > s[q + 1] {
                                let tmp = s[q];
                                s[q] = s[q + 1];
                                s[q + 1] = tmp;
                            }
                            q += 1;
                        }
                        p += 1;
                    }
                    t[i][j][k][l] = ord[s[0]][s[1]][s[2]][s[3]];
                    l += 1;
                }
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    t
}

/// Full index to packed rank-2 slot.
pub const I2: [[usize; 3]; 3] = build2();
/// Full index to packed rank-3 slot.
pub const I3: [[[usize; 3]; 3]; 3] = build3();
/// Full index to packed rank-4 slot.
pub const I4: [[[[usize; 3]; 3]; 3]; 3] = build4();

/// Sorted multi-index and multiplicity of each packed rank-2 slot.
pub const U2: [([usize; 2], f64); 6] = [
    ([0, 0], 1.0),
    ([0, 1], 2.0),
    ([0, 2], 2.0),
    ([1, 1], 1.0),
    ([1, 2], 2.0),
    ([2, 2], 1.0),
];

/// Sorted multi-index and multiplicity of each packed rank-3 slot.
pub const U3: [([usize; 3], f64); 10] = [
    ([0, 0, 0], 1.0),
    ([0, 0, 1], 3.0),
    ([0, 0, 2], 3.0),
    ([0, 1, 1], 3.0),
    ([0, 1, 2], 6.0),
    ([0, 2, 2], 3.0),
    ([1, 1, 1], 1.0),
    ([1, 1, 2], 3.0),
    ([1, 2, 2], 3.0),
    ([2, 2, 2], 1.0),
];

/// Derivatives of 1/|R| with respect to R, ranks 0 through 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives<T = f64> {
    pub d0: T,
    pub d1: [T; 3],
    pub d2: [T; 6],
    pub d3: [T; 10],
    pub d4: [T; 15],
}

impl<T: Real> Derivatives<T> {
    /// Every component is a monomial in R times a function of |R|^2, so
    /// `Derivatives::new(-r)` equals `(-1)^n` times `new(r)` bit for bit.
    #[inline(always)]
    pub fn new(r: [T; 3]) -> Derivatives<T> {
        let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        let inv_r2 = T::splat(1.0) / r2;
        let d0 = inv_r2.sqrt();
        let f1 = -(d0 * inv_r2);
        let f2 = T::splat(3.0) * d0 * inv_r2 * inv_r2;
        let f3 = T::splat(-15.0) * d0 * inv_r2 * inv_r2 * inv_r2;
        let f4 = T::splat(105.0) * d0 * inv_r2 * inv_r2 * inv_r2 * inv_r2;
        let d1 = [f1 * r[0], f1 * r[1], f1 * r[2]];
        let d2 = {
            let mut a = [T::splat(0.0); 6];
            for s in 0..6 {
                a[s] = {
                    let [i, j] = U2[s].0;
                    let v = f2 * r[i] * r[j];
                    if i == j {
                        v + f1
                    } else {
                        v
                    }
                };
            }
            a
        };
        let d3 = {
            let mut a = [T::splat(0.0); 10];
            for s in 0..10 {
                a[s] = {
                    let [i, j, k] = U3[s].0;
                    let mut lin = T::splat(0.0);
                    let mut any = false;
                    for (a, b, c) in [(i, j, k), (j, i, k), (k, i, j)] {
                        if b == c {
                            lin = if any { lin + r[a] } else { r[a] };
                            any = true;
                        }
                    }
                    let v = f3 * r[i] * r[j] * r[k];
                    if any {
                        v + f2 * lin
                    } else {
                        v
                    }
                };
            }
            a
        };
        let d4 = {
            let mut a = [T::splat(0.0); 15];
            for s in 0..15 {
                a[s] = {
                    let [i, j, k, l] = U4[s];
                    let idx = [i, j, k, l];
                    // pairings (a b)(c d) of the four slots
                    const PAIRS: [(usize, usize, usize, usize); 6] = [
                        (0, 1, 2, 3),
                        (0, 2, 1, 3),
                        (0, 3, 1, 2),
                        (1, 2, 0, 3),
                        (1, 3, 0, 2),
                        (2, 3, 0, 1),
                    ];
                    let mut quad = T::splat(0.0);
                    let mut any = false;
                    for (a, b, c, d) in PAIRS {
                        if idx[c] == idx[d] {
                            let t = r[idx[a]] * r[idx[b]];
                            quad = if any { quad + t } else { t };
                            any = true;
                        }
                    }
                    let mut v = f4 * r[i] * r[j] * r[k] * r[l];
                    if any {
                        v = v + f3 * quad;
                    }
                    let mut dd = 0;
                    for (a, b, c, d) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
                        if idx[a] == idx[b] && idx[c] == idx[d] {
                            dd += 1;
                        }
                    }
                    if dd > 0 {
                        v = v + f2 * T::splat(dd as f64);
                    }
                    v
                };
            }
            a
        };
        Derivatives { d0, d1, d2, d3, d4 }
    }
}

/// Sorted multi-index of each packed rank-4 slot.
pub const U4: [[usize; 4]; 15] = [
    [0, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, 0, 2],
    [0, 0, 1, 1],
    [0, 0, 1, 2],
    [0, 0, 2, 2],
    [0, 1, 1, 1],
    [0, 1, 1, 2],
    [0, 1, 2, 2],
    [0, 2, 2, 2],
    [1, 1, 1, 1],
    [1, 1, 1, 2],
    [1, 1, 2, 2],
    [1, 2, 2, 2],
    [2, 2, 2, 2],
];

/// Multiplicity of each packed rank-4 slot.
pub const M4: [f64; 15] = [1.0, 4.0, 4.0, 6.0, 12.0, 6.0, 4.0, 12.0, 12.0, 4.0, 1.0, 4.0, 6.0, 4.0, 1.0];

/// Full contraction A:B of two symmetric rank-2 tensors.
#[inline(always)]
pub fn dot2<T: Real>(a: &[T; 6], b: &[T; 6]) -> T {
    let mut s = a[0] * b[0];
    for k in 1..6 {
        s += T::splat(U2[k].1) * a[k] * b[k];
    }
    s
}

/// Full contraction of two symmetric rank-3 tensors.
#[inline(always)]
pub fn dot3<T: Real>(a: &[T; 10], b: &[T; 10]) -> T {
    let mut s = a[0] * b[0];
    for k in 1..10 {
        s += T::splat(U3[k].1) * a[k] * b[k];
    }
    s
}

/// (Q:T)_k = sum_ij Q_ij T_ijk.
#[inline(always)]
pub fn contract2_3<T: Real>(q: &[T; 6], t: &[T; 10]) -> [T; 3] {
    {
        let mut a = [T::splat(0.0); 3];
        for k in 0..3 {
            a[k] = {
                let mut s = q[0] * t[I3[0][0][k]];
                for p in 1..6 {
                    let [i, j] = U2[p].0;
                    s += T::splat(U2[p].1) * q[p] * t[I3[i][j][k]];
                }
                s
            };
        }
        a
    }
}

/// Full contraction of two symmetric rank-4 tensors.
#[inline(always)]
pub fn dot4<T: Real>(a: &[T; 15], b: &[T; 15]) -> T {
    let mut s = a[0] * b[0];
    for k in 1..15 {
        s += T::splat(M4[k]) * a[k] * b[k];
    }
    s
}

/// (O:T)_l = sum_ijk O_ijk T_ijkl.
#[inline(always)]
pub fn contract3_4<T: Real>(o: &[T; 10], t: &[T; 15]) -> [T; 3] {
    let mut a = [T::splat(0.0); 3];
    for l in 0..3 {
        let mut s = o[0] * t[I4[0][0][0][l]];
        for p in 1..10 {
            let [i, j, k] = U3[p].0;
            s += T::splat(U3[p].1) * o[p] * t[I4[i][j][k][l]];
        }
        a[l] = s;
    }
    a
}

/// (T.d)_ijk = sum_l T_ijkl d_l.
#[inline(always)]
pub fn contract4_1<T: Real>(t: &[T; 15], d: [T; 3]) -> [T; 10] {
    let mut a = [T::splat(0.0); 10];
    for p in 0..10 {
        let [i, j, k] = U3[p].0;
        a[p] = t[I4[i][j][k][0]] * d[0] + t[I4[i][j][k][1]] * d[1] + t[I4[i][j][k][2]] * d[2];
    }
    a
}

/// (Q:T)_kl = sum_ij Q_ij T_ijkl.
#[inline(always)]
pub fn contract2_4<T: Real>(q: &[T; 6], t: &[T; 15]) -> [T; 6] {
    {
        let mut a = [T::splat(0.0); 6];
        for o in 0..6 {
            a[o] = {
                let [k, l] = U2[o].0;
                let mut s = q[0] * t[I4[0][0][k][l]];
                for p in 1..6 {
                    let [i, j] = U2[p].0;
                    s += T::splat(U2[p].1) * q[p] * t[I4[i][j][k][l]];
                }
                s
            };
        }
        a
    }
}

/// (T.d)_ij = sum_k T_ijk d_k.
#[inline(always)]
pub fn contract3_1<T: Real>(t: &[T; 10], d: [T; 3]) -> [T; 6] {
    {
        let mut a = [T::splat(0.0); 6];
        for o in 0..6 {
            a[o] = {
                let [i, j] = U2[o].0;
                t[I3[i][j][0]] * d[0] + t[I3[i][j][1]] * d[1] + t[I3[i][j][2]] * d[2]
            };
        }
        a
    }
}

/// (S.d)_i = sum_j S_ij d_j.
#[inline(always)]
pub fn contract2_1<T: Real>(s: &[T; 6], d: [T; 3]) -> [T; 3] {
    {
        let mut a = [T::splat(0.0); 3];
        for i in 0..3 {
            a[i] = s[I2[i][0]] * d[0] + s[I2[i][1]] * d[1] + s[I2[i][2]] * d[2];
        }
        a
    }
}

/// Outer product d d as a packed symmetric tensor.
#[inline]
pub fn outer2(d: [f64; 3]) -> Sym2 {
    std::array::from_fn(|s| {
        let [i, j] = U2[s].0;
        d[i] * d[j]
    })
}

/// Outer product d d d.
#[inline]
pub fn outer3(d: [f64; 3]) -> Sym3 {
    std::array::from_fn(|s| {
        let [i, j, k] = U3[s].0;
        d[i] * d[j] * d[k]
    })
}

/// Outer product d d d d.
#[inline]
pub fn outer4(d: [f64; 3]) -> Sym4 {
    std::array::from_fn(|s| {
        let [i, j, k, l] = U4[s];
        d[i] * d[j] * d[k] * d[l]
    })
}

/// d_i Q_jk + d_j Q_ik + d_k Q_ij.
#[inline]
pub fn sym_outer_1_2(d: [f64; 3], q: &Sym2) -> Sym3 {
    std::array::from_fn(|s| {
        let [i, j, k] = U3[s].0;
        d[i] * q[I2[j][k]] + d[j] * q[I2[i][k]] + d[k] * q[I2[i][j]]
    })
}
