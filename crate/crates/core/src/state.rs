//! Conserved and primitive hydro state, ideal-gas EOS and floors.

use std::ops::{Add, AddAssign, Mul, Sub};

/// Number of passive tracer fields (component mass-fraction densities).
pub const NTRACERS: usize = 2;
/// Conserved fields per cell: density, momentum x/y/z, energy, tracers.
pub const NFIELDS: usize = 5 + NTRACERS;

pub const FIELD_NAMES: [&str; NFIELDS] = ["rho", "sx", "sy", "sz", "egas", "tracer1", "tracer2"];

/// Per-cell conserved state. `egas` is total (internal + kinetic) energy
/// density; `tracers` hold rho * X_i.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState {
    pub rho: f64,
    pub s: [f64; 3],
    pub egas: f64,
    pub tracers: [f64; NTRACERS],
}

impl ConservedState {
    pub const ZERO: ConservedState = ConservedState {
        rho: 0.0,
        s: [0.0; 3],
        egas: 0.0,
        tracers: [0.0; NTRACERS],
    };

    /// Field `k` in field-major order (see [`FIELD_NAMES`]).
    #[inline]
    pub fn field(&self, k: usize) -> f64 {
        match k {
            0 => self.rho,
            1..=3 => self.s[k - 1],
            4 => self.egas,
            _ => self.tracers[k - 5],
        }
    }

    #[inline]
    pub fn field_mut(&mut self, k: usize) -> &mut f64 {
        match k {
            0 => &mut self.rho,
            1..=3 => &mut self.s[k - 1],
            4 => &mut self.egas,
            _ => &mut self.tracers[k - 5],
        }
    }

    pub fn to_array(&self) -> [f64; NFIELDS] {
        std::array::from_fn(|k| self.field(k))
    }

    pub fn from_array(a: &[f64; NFIELDS]) -> Self {
        let mut c = ConservedState::ZERO;
        for (k, v) in a.iter().enumerate() {
            *c.field_mut(k) = *v;
        }
        c
    }

    pub fn kinetic_energy(&self) -> f64 {
        if self.rho > 0.0 {
            0.5 * (self.s[0] * self.s[0] + self.s[1] * self.s[1] + self.s[2] * self.s[2]) / self.rho
        } else {
            0.0
        }
    }

    pub fn internal_energy(&self) -> f64 {
        self.egas - self.kinetic_energy()
    }

    pub fn is_finite(&self) -> bool {
        (0..NFIELDS).all(|k| self.field(k).is_finite())
    }

    /// `self + a * other`, field by field.
    #[inline]
    pub fn axpy(&self, a: f64, other: &ConservedState) -> ConservedState {
        let mut out = *self;
        for k in 0..NFIELDS {
            *out.field_mut(k) += a * other.field(k);
        }
        out
    }
}

impl Add for ConservedState {
    type Output = ConservedState;
    fn add(self, rhs: Self) -> Self {
        self.axpy(1.0, &rhs)
    }
}

impl AddAssign for ConservedState {
    fn add_assign(&mut self, rhs: Self) {
        for k in 0..NFIELDS {
            *self.field_mut(k) += rhs.field(k);
        }
    }
}

impl Sub for ConservedState {
    type Output = ConservedState;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for k in 0..NFIELDS {
            *out.field_mut(k) -= rhs.field(k);
        }
        out
    }
}

impl Mul<f64> for ConservedState {
    type Output = ConservedState;
    fn mul(self, a: f64) -> Self {
        let mut out = self;
        for k in 0..NFIELDS {
            *out.field_mut(k) *= a;
        }
        out
    }
}

/// Primitive variables: density, velocity, pressure, tracer mass fractions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Primitive {
    pub rho: f64,
    pub u: [f64; 3],
    pub p: f64,
    pub x: [f64; NTRACERS],
}

pub const NPRIM: usize = 5 + NTRACERS;

impl Primitive {
    #[inline]
    pub fn component(&self, k: usize) -> f64 {
        match k {
            0 => self.rho,
            1..=3 => self.u[k - 1],
            4 => self.p,
            _ => self.x[k - 5],
        }
    }

    #[inline]
    pub fn component_mut(&mut self, k: usize) -> &mut f64 {
        match k {
            0 => &mut self.rho,
            1..=3 => &mut self.u[k - 1],
            4 => &mut self.p,
            _ => &mut self.x[k - 5],
        }
    }

    pub fn is_finite(&self) -> bool {
        (0..NPRIM).all(|k| self.component(k).is_finite())
    }
}

/// Ideal-gas equation of state, p = (gamma - 1) * e_int.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealGas {
    pub gamma: f64,
}

impl Default for IdealGas {
    fn default() -> Self {
        IdealGas { gamma: 5.0 / 3.0 }
    }
}

impl IdealGas {
    pub fn new(gamma: f64) -> Self {
        IdealGas { gamma }
    }

    #[inline]
    pub fn to_primitive(&self, c: &ConservedState) -> Primitive {
        let inv = 1.0 / c.rho;
        let u = [c.s[0] * inv, c.s[1] * inv, c.s[2] * inv];
        let ke = 0.5 * (c.s[0] * u[0] + c.s[1] * u[1] + c.s[2] * u[2]);
        Primitive {
            rho: c.rho,
            u,
            p: (self.gamma - 1.0) * (c.egas - ke),
            x: std::array::from_fn(|i| c.tracers[i] * inv),
        }
    }

    #[inline]
    pub fn to_conserved(&self, w: &Primitive) -> ConservedState {
        let s = [w.rho * w.u[0], w.rho * w.u[1], w.rho * w.u[2]];
        let ke = 0.5 * (s[0] * w.u[0] + s[1] * w.u[1] + s[2] * w.u[2]);
        ConservedState {
            rho: w.rho,
            s,
            egas: w.p / (self.gamma - 1.0) + ke,
            tracers: std::array::from_fn(|i| w.rho * w.x[i]),
        }
    }

    #[inline]
    pub fn sound_speed(&self, w: &Primitive) -> f64 {
        (self.gamma * w.p / w.rho).sqrt()
    }

    /// Physical flux of `w` through a face normal to `axis`.
    #[inline]
    pub fn physical_flux(&self, w: &Primitive, axis: usize) -> ConservedState {
        let un = w.u[axis];
        let c = self.to_conserved(w);
        let mut f = ConservedState {
            rho: c.rho * un,
            s: [c.s[0] * un, c.s[1] * un, c.s[2] * un],
            egas: (c.egas + w.p) * un,
            tracers: std::array::from_fn(|i| c.tracers[i] * un),
        };
        f.s[axis] += w.p;
        f
    }
}

/// Lower bounds enforced after every stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Floors {
    pub density: f64,
    pub internal_energy: f64,
}

impl Floors {
    /// Floors scaled to a scenario's peak density.
    pub fn for_peak_density(peak: f64) -> Self {
        Floors {
            density: 1e-12 * peak,
            internal_energy: 1e-14 * peak,
        }
    }

    /// Clamps `c` into the admissible set. Returns true if anything changed.
    pub fn apply(&self, c: &mut ConservedState) -> bool {
        let mut hit = false;
        if !(c.rho >= self.density) {
            c.rho = self.density;
            hit = true;
        }
        let eint = c.internal_energy();
        if !(eint >= self.internal_energy) {
            c.egas = c.kinetic_energy() + self.internal_energy;
            hit = true;
        }
        for t in c.tracers.iter_mut() {
            if !(*t >= 0.0) {
                *t = 0.0;
                hit = true;
            }
        }
        let total: f64 = c.tracers.iter().sum();
        if total > c.rho * (1.0 + 1e-12) {
            let scale = c.rho / total;
            for t in c.tracers.iter_mut() {
                *t *= scale;
            }
            hit = true;
        }
        hit
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_roundtrip() {
        let eos = IdealGas::new(1.4);
        let w = Primitive {
            rho: 1.3,
            u: [0.2, -0.7, 1.1],
            p: 2.5,
            x: [0.25, 0.5],
        };
        let back = eos.to_primitive(&eos.to_conserved(&w));
        for k in 0..NPRIM {
            assert!((back.component(k) - w.component(k)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_order_is_stable() {
        let c = ConservedState {
            rho: 1.0,
            s: [2.0, 3.0, 4.0],
            egas: 5.0,
            tracers: [6.0, 7.0],
        };
        assert_eq!(c.to_array(), [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(ConservedState::from_array(&c.to_array()), c);
    }

    #[test]
    fn floors_clamp_and_report() {
        let floors = Floors {
            density: 1e-6,
            internal_energy: 1e-8,
        };
        let mut c = ConservedState {
            rho: -1.0,
            s: [0.0; 3],
            egas: -3.0,
            tracers: [2.0, -1.0],
        };
        assert!(floors.apply(&mut c));
        assert_eq!(c.rho, 1e-6);
        assert!(c.internal_energy() >= 1e-8 * (1.0 - 1e-12));
        assert_eq!(c.tracers[1], 0.0);
        assert!(c.tracers.iter().sum::<f64>() <= c.rho * (1.0 + 1e-12));
        let mut ok = ConservedState {
            rho: 1.0,
            s: [0.0; 3],
            egas: 1.0,
            tracers: [0.5, 0.5],
        };
        assert!(!floors.apply(&mut ok));
    }
}
