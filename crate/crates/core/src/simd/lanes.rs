use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Arithmetic shared by scalars and lane packs, so every kernel body is
/// written once and instantiated for both.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn splat(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn max(self, other: Self) -> Self;
}

impl Real for f64 {
    #[inline(always)]
    fn splat(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline(always)]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline(always)]
    fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

/// Array built element by element. Unlike `std::array::from_fn` this is
/// always inlined, so it stays inside target-feature specialised callers.
#[inline(always)]
pub fn fill<T: Real, const N: usize>(mut f: impl FnMut(usize) -> T) -> [T; N] {
    let mut a = [T::splat(0.0); N];
    for (i, v) in a.iter_mut().enumerate() {
        *v = f(i);
    }
    a
}

/// `W` doubles operated on element-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[repr(transparent)]
pub struct Lanes<const W: usize>(pub [f64; W]);

impl<const W: usize> Lanes<W> {
    #[inline(always)]
    pub fn load(src: &[f64]) -> Self {
        let src = &src[..W];
        let mut a = [0.0; W];
        for i in 0..W {
            a[i] = src[i];
        }
        Lanes(a)
    }

    #[inline(always)]
    pub fn store(self, dst: &mut [f64]) {
        let dst = &mut dst[..W];
        for i in 0..W {
            dst[i] = self.0[i];
        }
    }

    /// Sum of the lanes in index order.
    #[inline(always)]
    pub fn horizontal_sum(self) -> f64 {
        let mut s = 0.0;
        for v in self.0 {
            s += v;
        }
        s
    }
}

macro_rules! lanewise {
    ($tr:ident, $f:ident, $op:tt) => {
        impl<const W: usize> $tr for Lanes<W> {
            type Output = Self;
            #[inline(always)]
            fn $f(self, rhs: Self) -> Self {
                let mut out = [0.0; W];
                for i in 0..W {
                    out[i] = self.0[i] $op rhs.0[i];
                }
                Lanes(out)
            }
        }
    };
}

lanewise!(Add, add, +);
lanewise!(Sub, sub, -);
lanewise!(Mul, mul, *);
lanewise!(Div, div, /);

impl<const W: usize> Neg for Lanes<W> {
    type Output = Self;
    #[inline(always)]
    fn neg(self) -> Self {
        let mut out = self.0;
        for v in out.iter_mut() {
            *v = -*v;
        }
        Lanes(out)
    }
}

impl<const W: usize> AddAssign for Lanes<W> {
    #[inline(always)]
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..W {
            self.0[i] += rhs.0[i];
        }
    }
}

impl<const W: usize> Real for Lanes<W> {
    #[inline(always)]
    fn splat(v: f64) -> Self {
        Lanes([v; W])
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        let mut out = self.0;
        for v in out.iter_mut() {
            *v = v.sqrt();
        }
        Lanes(out)
    }
    #[inline(always)]
    fn abs(self) -> Self {
        let mut out = self.0;
        for v in out.iter_mut() {
            *v = v.abs();
        }
        Lanes(out)
    }
    #[inline(always)]
    fn max(self, other: Self) -> Self {
        let mut out = [0.0; W];
        for i in 0..W {
            out[i] = Real::max(self.0[i], other.0[i]);
        }
        Lanes(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanes_match_scalar_ops() {
        let a = Lanes([1.0, -2.0, 3.5, 4.0]);
        let b = Lanes([0.5, 2.0, -1.0, 8.0]);
        let c = (a * b + a) / b - (-a);
        for i in 0..4 {
            let (x, y) = (a.0[i], b.0[i]);
            assert_eq!(c.0[i], (x * y + x) / y - (-x));
        }
        assert_eq!(Real::max(a, b).0, [1.0, 2.0, 3.5, 8.0]);
        assert_eq!(a.abs().0[1], 2.0);
        assert_eq!(a.horizontal_sum(), 6.5);
    }
}
