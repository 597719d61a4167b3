//! Initial conditions: a rotating n=1 polytrope, a polytrope binary in its
//! co-rotating frame, a 3D Sod tube and a perturbed uniform box.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use octomini_core::grid::{build_tree, Boundary, DomainGeometry, RefinementCriteria, Tree, TreeLimits};
use octomini_core::hydro::HydroConfig;
use octomini_core::state::{ConservedState, Floors, IdealGas, Primitive};
use octomini_core::{CoreError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Position to state; boxed so scenarios can be chosen at runtime.
pub type InitFn = Arc<dyn Fn([f64; 3]) -> ConservedState + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    RotatingStar,
    Binary,
    Sod,
    Uniform,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] =
        [ScenarioKind::RotatingStar, ScenarioKind::Binary, ScenarioKind::Sod, ScenarioKind::Uniform];

    pub fn id(self) -> &'static str {
        match self {
            ScenarioKind::RotatingStar => "rotating_star",
            ScenarioKind::Binary => "binary",
            ScenarioKind::Sod => "sod",
            ScenarioKind::Uniform => "uniform",
        }
    }

    pub fn has_gravity(self) -> bool {
        matches!(self, ScenarioKind::RotatingStar | ScenarioKind::Binary)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScenarioKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| CoreError::InvalidConfig(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub max_level: u32,
    pub n_edge: usize,
    /// Star spin rate (rotating star); the binary derives its own.
    pub omega: f64,
    /// Secondary over primary mass, binary only.
    pub mass_ratio: f64,
    /// Center distance of the binary components.
    pub separation: f64,
    pub star_radius: f64,
    pub central_density: f64,
    /// Background density as a fraction of the central density.
    pub ambient: f64,
    pub gamma: f64,
    pub density_threshold: f64,
    pub gradient_threshold: f64,
    pub tracer_threshold: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kind: ScenarioKind::RotatingStar,
            max_level: 3,
            n_edge: 8,
            omega: 0.5,
            mass_ratio: 0.7,
            separation: 0.45,
            star_radius: 0.2,
            central_density: 1.0,
            ambient: 1e-4,
            gamma: 5.0 / 3.0,
            density_threshold: 0.01,
            gradient_threshold: 0.5,
            tracer_threshold: 1e-3,
            steps: 10,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn with_kind(kind: ScenarioKind) -> Self {
        ScenarioConfig { kind, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::InvalidConfig(m));
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.mass_ratio > 0.0 && self.mass_ratio <= 1.0) {
            return bad(format!("mass ratio {} outside (0, 1]", self.mass_ratio));
        }
        for (name, v) in [
            ("star_radius", self.star_radius),
            ("central_density", self.central_density),
            ("ambient", self.ambient),
            ("separation", self.separation),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.gamma > 1.0) {
            return bad(format!("gamma {} must exceed 1", self.gamma));
        }
        if !self.omega.is_finite() {
            return bad("omega must be finite".into());
        }
        match self.kind {
            ScenarioKind::RotatingStar if self.star_radius >= 0.5 => {
                bad(format!("star radius {} does not fit the unit box", self.star_radius))
            }
            ScenarioKind::Binary => {
                if self.separation <= 2.0 * self.star_radius {
                    return bad(format!(
                        "separation {} must exceed the summed radii {}",
                        self.separation,
                        2.0 * self.star_radius
                    ));
                }
                let [x1, x2] = self.binary_positions();
                if x1.abs().max(x2.abs()) + self.star_radius >= 0.5 {
                    return bad("binary components do not fit the unit box".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// x coordinates of primary and secondary; barycenter at the origin.
    pub fn binary_positions(&self) -> [f64; 2] {
        let q = self.mass_ratio;
        [-self.separation * q / (1.0 + q), self.separation / (1.0 + q)]
    }

    pub fn binary_components(&self) -> [Polytrope; 2] {
        // Same polytropic constant, so same radius; masses scale with the
        // central density.
        let p = Polytrope { central_density: self.central_density, radius: self.star_radius };
        [p, Polytrope { central_density: self.central_density * self.mass_ratio, ..p }]
    }

    /// Kepler rate of the binary's circular orbit (G = 1).
    pub fn orbital_frequency(&self) -> f64 {
        let [a, b] = self.binary_components();
        ((a.mass() + b.mass()) / self.separation.powi(3)).sqrt()
    }

    /// Frame rotation rate the solver runs in.
    pub fn frame_omega(&self) -> f64 {
        match self.kind {
            ScenarioKind::Binary => self.orbital_frequency(),
            _ => 0.0,
        }
    }

    /// The binary runs in a closed box: its centrifugal potential is not
    /// periodic, and gas leaving one face would re-enter at the other.
    pub fn boundary(&self) -> Boundary {
        match self.kind {
            ScenarioKind::Sod | ScenarioKind::Binary => Boundary::Reflecting,
            _ => Boundary::Periodic,
        }
    }

    pub fn peak_density(&self) -> f64 {
        match self.kind {
            ScenarioKind::RotatingStar | ScenarioKind::Binary => self.central_density,
            ScenarioKind::Sod => 1.0,
            ScenarioKind::Uniform => 1.0,
        }
    }

    pub fn hydro(&self) -> HydroConfig {
        HydroConfig {
            eos: IdealGas::new(self.gamma),
            omega: self.frame_omega(),
            floors: Floors::for_peak_density(self.peak_density()),
            ..Default::default()
        }
    }

    pub fn criteria(&self) -> Result<RefinementCriteria> {
        // The tube is refined on its density jump alone.
        let density = match self.kind {
            ScenarioKind::Sod => f64::INFINITY,
            _ => self.density_threshold * self.peak_density(),
        };
        RefinementCriteria::new(
            density,
            self.gradient_threshold,
            self.tracer_threshold,
            self.max_level,
        )
    }
}

/// n=1 polytrope with G = 1: rho = rho_c sin(xi)/xi, xi = pi r / R, and
/// p = K rho^2 with K = 2 R^2 / pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polytrope {
    pub central_density: f64,
    pub radius: f64,
}

impl Polytrope {
    pub fn kappa(&self) -> f64 {
        2.0 * self.radius * self.radius / PI
    }

    pub fn density(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        let xi = PI * r / self.radius;
        if xi < 1e-8 {
            self.central_density
        } else {
            self.central_density * xi.sin() / xi
        }
    }

    pub fn mass(&self) -> f64 {
        4.0 * self.central_density * self.radius.powi(3) / PI
    }
}

/// Background pressure at the central temperature. A cold background
/// falls onto the star supersonically and trips the energy floor.
fn ambient_pressure(kappa: f64, central_density: f64, ambient_density: f64) -> f64 {
    kappa * central_density * ambient_density
}

fn state(eos: IdealGas, rho: f64, u: [f64; 3], p: f64, tracers: [f64; 2]) -> ConservedState {
    eos.to_conserved(&Primitive { rho, u, p, x: tracers })
}

/// Rotating star centred in the box, spinning rigidly at `omega` about z,
/// at rest outside; tracer 1 marks star material.
pub fn init_rotating_star(cfg: &ScenarioConfig) -> Result<InitFn> {
    cfg.validate()?;
    if cfg.star_radius >= 0.5 {
        return Err(CoreError::InvalidConfig(format!("star radius {} does not fit the unit box", cfg.star_radius)));
    }
    let star = Polytrope { central_density: cfg.central_density, radius: cfg.star_radius };
    let (eos, floor, omega) = (IdealGas::new(cfg.gamma), cfg.ambient * cfg.central_density, cfg.omega);
    let k = star.kappa();
    let p_amb = ambient_pressure(k, cfg.central_density, floor);
    Ok(Arc::new(move |x: [f64; 3]| {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let profile = star.density(r);
        let rho = profile.max(floor);
        let inside = profile > floor;
        let u = if inside { [-omega * x[1], omega * x[0], 0.0] } else { [0.0; 3] };
        state(eos, rho, u, (k * rho * rho).max(p_amb), [if inside { 1.0 } else { 0.0 }, 0.0])
    }))
}

/// Two polytropes at rest in the frame co-rotating with their circular
/// orbit; tracers 1 and 2 mark the components.
pub fn init_binary(cfg: &ScenarioConfig) -> Result<InitFn> {
    let mut c = cfg.clone();
    c.kind = ScenarioKind::Binary;
    c.validate()?;
    let [p1, p2] = c.binary_components();
    let [x1, x2] = c.binary_positions();
    let (eos, floor) = (IdealGas::new(c.gamma), c.ambient * c.central_density);
    let k = p1.kappa();
    let p_amb = ambient_pressure(k, c.central_density, floor);
    Ok(Arc::new(move |x: [f64; 3]| {
        let r = |cx: f64| ((x[0] - cx).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt();
        let (d1, d2) = (p1.density(r(x1)), p2.density(r(x2)));
        let rho = (d1 + d2).max(floor);
        let f1 = if d1 > floor { 1.0 } else { 0.0 };
        let f2 = if d2 > floor { 1.0 } else { 0.0 };
        state(eos, rho, [0.0; 3], (k * rho * rho).max(p_amb), [f1, f2])
    }))
}

/// Sod states split at x = 0 (gamma from the config; the textbook case
/// uses 1.4).
pub fn init_sod(cfg: &ScenarioConfig) -> Result<InitFn> {
    cfg.validate()?;
    let eos = IdealGas::new(cfg.gamma);
    Ok(Arc::new(move |x: [f64; 3]| {
        if x[0] < 0.0 {
            state(eos, 1.0, [0.0; 3], 1.0, [1.0, 0.0])
        } else {
            state(eos, 0.125, [0.0; 3], 0.1, [0.0, 1.0])
        }
    }))
}

/// Unit density and pressure with a small seeded sinusoidal velocity.
pub fn init_uniform(cfg: &ScenarioConfig) -> Result<InitFn> {
    cfg.validate()?;
    let eos = IdealGas::new(cfg.gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phase: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.0..TAU));
    Ok(Arc::new(move |x: [f64; 3]| {
        let u = std::array::from_fn(|a| 0.01 * (TAU * x[(a + 1) % 3] + phase[a]).sin());
        state(eos, 1.0, u, 1.0, [0.5, 0.0])
    }))
}

pub fn init_fn(cfg: &ScenarioConfig) -> Result<InitFn> {
    match cfg.kind {
        ScenarioKind::RotatingStar => init_rotating_star(cfg),
        ScenarioKind::Binary => init_binary(cfg),
        ScenarioKind::Sod => init_sod(cfg),
        ScenarioKind::Uniform => init_uniform(cfg),
    }
}

/// Refined initial tree; the uniform box is refined everywhere to
/// `max_level`.
pub fn build_scenario_tree(cfg: &ScenarioConfig) -> Result<Tree> {
    cfg.validate()?;
    let geometry = DomainGeometry::new(1.0, cfg.n_edge, cfg.boundary())?;
    let ic = init_fn(cfg)?;
    match cfg.kind {
        ScenarioKind::Uniform => {
            TreeLimits::default().check(cfg.max_level, cfg.n_edge)?;
            Tree::uniform(geometry, cfg.max_level, &*ic)
        }
        _ => build_tree(geometry, &*ic, &cfg.criteria()?, TreeLimits::default()),
    }
}
