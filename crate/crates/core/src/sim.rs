//! Time stepping of a whole tree: per RK stage a ghost exchange, an optional
//! gravity solve, one flux and one update kernel per leaf, and refluxing at
//! coarse-fine faces in between.

use std::sync::Arc;
use std::time::Instant;

use octomini_tasks::{Engine, SplitPolicy, TaskHandle};

use crate::comm::{Comm, CommConfig, CommStats};
use crate::error::{CoreError, Result};
use crate::gravity::{GravityConfig, GravityField, GravityPlan, GravityStats};
use crate::grid::{GhostTransfer, SubGrid, Tree};
use crate::hydro::{
    boundary_potentials, compute_dt, diagnostics, leaf_fluxes, reflux, reflux_pairs, update_cells, BoundaryPotentials,
    HydroConfig, LeafFluxes, StageGravity, StageInput, Totals,
};
use crate::simd::FluxBatch;
use crate::state::ConservedState;
use crate::util::StateHasher;

/// Extra source density `f(state, position)` added to every cell.
pub type SourceFn = Arc<dyn Fn(&ConservedState, [f64; 3]) -> ConservedState + Send + Sync>;

#[derive(Clone)]
pub struct SimConfig {
    pub hydro: HydroConfig,
    /// Self-gravity; `None` turns it off.
    pub gravity: Option<GravityConfig>,
    pub comm: CommConfig,
    /// Split policy of the hydro kernels.
    pub kernel_tasks: SplitPolicy,
    /// Use this step instead of the CFL step.
    pub fixed_dt: Option<f64>,
    pub extra_source: Option<SourceFn>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            hydro: HydroConfig::default(),
            gravity: None,
            comm: CommConfig::default(),
            kernel_tasks: SplitPolicy::single(),
            fixed_dt: None,
            extra_source: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub dt: f64,
    pub floor_events: usize,
    pub kernel_launches: usize,
    pub gravity_seconds: f64,
    /// M2L phase time summed over the step's gravity solves.
    pub multipole_seconds: f64,
}

pub struct Simulation {
    tree: Tree,
    config: SimConfig,
    comm: Comm,
    plan: Option<GravityPlan>,
    reflux: Arc<Vec<GhostTransfer>>,
    epoch: u64,
    time: f64,
    steps: u64,
    floor_events: usize,
}

impl Simulation {
    pub fn new(tree: Tree, config: SimConfig) -> Result<Simulation> {
        if let Some(dt) = config.fixed_dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(CoreError::InvalidConfig(format!("fixed dt {dt} must be positive")));
            }
        }
        if !(config.hydro.cfl > 0.0) || !config.hydro.omega.is_finite() {
            return Err(CoreError::InvalidConfig("cfl must be positive and omega finite".into()));
        }
        let comm = Comm::new(&tree, config.comm)?;
        let plan = match &config.gravity {
            Some(g) => Some(GravityPlan::new(&tree, g.near_radius)?),
            None => None,
        };
        let reflux = Arc::new(reflux_pairs(comm.transfers()));
        comm.publish_all(0);
        Ok(Simulation {
            tree,
            config,
            comm,
            plan,
            reflux,
            epoch: 0,
            time: 0.0,
            steps: 0,
            floor_events: 0,
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn into_tree(self) -> Tree {
        self.tree
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn comm_stats(&self) -> CommStats {
        self.comm.stats()
    }

    pub fn comm(&self) -> &Comm {
        &self.comm
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn floor_events(&self) -> usize {
        self.floor_events
    }

    /// Gravity of the current state, if gravity is on.
    pub fn gravity_field(&self, engine: &Engine) -> Result<Option<(GravityField, GravityStats)>> {
        match (&self.plan, &self.config.gravity) {
            (Some(plan), Some(cfg)) => Ok(Some(plan.solve(&self.tree, engine, cfg)?)),
            _ => Ok(None),
        }
    }

    /// Totals of the current state; the potential term needs a gravity
    /// solve when gravity is on.
    pub fn diagnostics(&self, engine: &Engine) -> Result<Totals> {
        let field = self.gravity_field(engine)?;
        Ok(diagnostics(&self.tree, field.as_ref().map(|f| &f.0)))
    }

    /// Hash of every interior cell in leaf order.
    pub fn digest(&self) -> String {
        state_digest(&self.tree, false)
    }

    pub fn step(&mut self, engine: &Engine) -> Result<StepReport> {
        let dt = match self.config.fixed_dt {
            Some(dt) => dt,
            None => self.global_dt()?,
        };
        let mut report = StepReport { dt, ..Default::default() };
        let u0: Arc<Vec<Vec<ConservedState>>> = Arc::new(self.tree.grids.iter().map(|g| g.cells.clone()).collect());
        for stage in 0..3 {
            self.stage(engine, stage, dt, &u0, &mut report)?;
        }
        self.time += dt;
        self.steps += 1;
        self.floor_events += report.floor_events;
        Ok(report)
    }

    /// The smallest step over all localities' leaves.
    fn global_dt(&self) -> Result<f64> {
        let map = self.comm.map();
        let mut dt = f64::INFINITY;
        for loc in 0..map.localities() as u32 {
            let r = map.leaves_of(loc);
            if r.is_empty() {
                continue;
            }
            let local = compute_dt(&self.tree.grids[r.clone()], &self.config.hydro).map_err(|e| match e {
                CoreError::Vacuum { leaf, cell } => CoreError::Vacuum { leaf: leaf + r.start, cell },
                e => e,
            })?;
            dt = dt.min(local);
        }
        Ok(dt)
    }

    fn stage(
        &mut self,
        engine: &Engine,
        stage: usize,
        dt: f64,
        u0: &Arc<Vec<Vec<ConservedState>>>,
        report: &mut StepReport,
    ) -> Result<()> {
        self.comm.exchange(&mut self.tree, self.epoch)?;

        let gravity: Option<Arc<(GravityField, Vec<BoundaryPotentials>)>> = match (&self.plan, &self.config.gravity) {
            (Some(plan), Some(cfg)) => {
                let t = Instant::now();
                let (field, stats) = plan.solve(&self.tree, engine, cfg)?;
                let bounds = boundary_potentials(&self.tree, self.comm.transfers(), &field.phi);
                report.gravity_seconds += t.elapsed().as_secs_f64();
                report.multipole_seconds += stats.m2l_seconds;
                report.kernel_launches += stats.kernel_launches;
                Some(Arc::new((field, bounds)))
            }
            _ => None,
        };

        let grids: Vec<Arc<SubGrid>> = self.tree.grids.iter().map(|g| Arc::new(g.clone())).collect();
        let hydro = self.config.hydro;
        let policy = self.config.kernel_tasks;
        let handles = grids
            .iter()
            .map(|g| {
                let g = g.clone();
                engine.launch_split_kernel(0..3, policy, move |axes| leaf_fluxes(&g, axes, &hydro))
            })
            .collect::<Result<Vec<_>, _>>()?;
        report.kernel_launches += handles.len();
        let mut fluxes: Vec<LeafFluxes> = Vec::with_capacity(grids.len());
        for h in handles {
            let v: Vec<FluxBatch> = h.wait()?.into_iter().flatten().collect();
            let arr: [FluxBatch; 3] = v.try_into().map_err(|_| CoreError::Protocol("flux kernel lost an axis".into()))?;
            fluxes.push(arr);
        }
        reflux(&mut fluxes, &self.reflux, self.tree.geometry.n_edge);

        let per = self.tree.geometry.n_edge.pow(3);
        let extra = self.config.extra_source.clone();
        let handles: Vec<TaskHandle<Vec<(Vec<ConservedState>, usize)>>> = fluxes
            .into_iter()
            .enumerate()
            .map(|(l, f)| {
                let (grid, f, u0, gravity, extra) = (grids[l].clone(), Arc::new(f), u0.clone(), gravity.clone(), extra.clone());
                engine.launch_split_kernel(0..per, policy, move |r| {
                    let input = StageInput {
                        u0: &u0[l],
                        grid: &grid,
                        fluxes: &f,
                        gravity: gravity.as_ref().map(|g| StageGravity {
                            g: &g.0.g[l],
                            phi: &g.0.phi[l],
                            bounds: &g.1[l],
                        }),
                        extra: extra.as_deref().map(|e| e as &(dyn Fn(&ConservedState, [f64; 3]) -> ConservedState + Sync)),
                        stage,
                        dt,
                        config: &hydro,
                    };
                    update_cells(r, &input)
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        report.kernel_launches += handles.len();
        self.epoch += 1;
        for (l, h) in handles.into_iter().enumerate() {
            let mut cells = Vec::with_capacity(per);
            for (part, floored) in h.wait()? {
                cells.extend(part);
                report.floor_events += floored;
            }
            self.tree.grids[l].cells = cells;
            self.comm.readiness().publish(crate::grid::LeafId(l as u32), self.epoch);
        }
        Ok(())
    }
}

/// SHA-256 over every interior cell (and optionally every ghost) in leaf
/// order, fields in declaration order.
pub fn state_digest(tree: &Tree, with_ghosts: bool) -> String {
    let mut h = StateHasher::new();
    h.push_u64(tree.leaf_count() as u64);
    for g in &tree.grids {
        for c in &g.cells {
            for v in c.to_array() {
                h.push(v);
            }
        }
        if with_ghosts {
            for f in crate::grid::Face::ALL {
                for c in g.ghost.slab(f) {
                    for v in c.to_array() {
                        h.push(v);
                    }
                }
            }
        }
    }
    h.finish()
}
