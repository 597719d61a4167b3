use crate::gravity::GravityField;
use crate::grid::Tree;
use crate::state::NTRACERS;
use crate::util::{cross, pairwise_sum, pairwise_sum3};

/// Domain totals. Every sum is a pairwise reduction over cells in leaf
/// order, so the result does not depend on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Totals {
    pub mass: f64,
    pub momentum: [f64; 3],
    /// About the origin.
    pub angular_momentum: [f64; 3],
    pub kinetic: f64,
    pub internal: f64,
    /// Half of sum m phi; zero without a gravity field.
    pub potential: f64,
    pub tracer_mass: [f64; NTRACERS],
}

impl Totals {
    pub fn total_energy(&self) -> f64 {
        self.kinetic + self.internal + self.potential
    }
}

pub fn diagnostics(tree: &Tree, field: Option<&GravityField>) -> Totals {
    let cells = tree.cell_count();
    let mut mass = Vec::with_capacity(cells);
    let mut mom = Vec::with_capacity(cells);
    let mut ang = Vec::with_capacity(cells);
    let mut kin = Vec::with_capacity(cells);
    let mut int = Vec::with_capacity(cells);
    let mut pot = Vec::with_capacity(cells);
    let mut tr: [Vec<f64>; NTRACERS] = std::array::from_fn(|_| Vec::with_capacity(cells));
    for (l, g) in tree.grids.iter().enumerate() {
        let vol = g.cell_volume();
        for (i, c) in g.cells.iter().enumerate() {
            let p = c.s.map(|v| v * vol);
            mass.push(c.rho * vol);
            mom.push(p);
            ang.push(cross(g.cell_center(i), p));
            let ke = c.kinetic_energy();
            kin.push(ke * vol);
            int.push((c.egas - ke) * vol);
            if let Some(f) = field {
                pot.push(0.5 * c.rho * vol * f.phi[l][i]);
            }
            for k in 0..NTRACERS {
                tr[k].push(c.tracers[k] * vol);
            }
        }
    }
    Totals {
        mass: pairwise_sum(&mass),
        momentum: pairwise_sum3(&mom),
        angular_momentum: pairwise_sum3(&ang),
        kinetic: pairwise_sum(&kin),
        internal: pairwise_sum(&int),
        potential: pairwise_sum(&pot),
        tracer_mass: std::array::from_fn(|k| pairwise_sum(&tr[k])),
    }
}
