use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use octomini_tasks::{Engine, SplitPolicy, TaskHandle};

use super::expansion::{evaluate, l2l, Expansion};
use super::lists::{cell_center, child_slots, parent_slot, CellId, InteractionLists};
use super::moments::Multipole;
use crate::error::{CoreError, Result};
use crate::util::{cross, norm, pairwise_sum, pairwise_sum3};
use crate::grid::{LeafId, NodeId, NodeKind, Tree};
use crate::simd::{run_m2l_kernel, LaneConfig, M2lBatch, M2lSource, EXPANSION_LEN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityConfig {
    /// Well-separation threshold in cell widths; see [`InteractionLists`].
    pub near_radius: u32,
    pub lanes: LaneConfig,
    /// Split policy of the M2L (multipole) kernel.
    pub multipole_tasks: SplitPolicy,
    /// Split policy of the other gravity kernels.
    pub kernel_tasks: SplitPolicy,
}

impl Default for GravityConfig {
    fn default() -> Self {
        GravityConfig {
            near_radius: 2,
            lanes: LaneConfig::scalar(),
            multipole_tasks: SplitPolicy::single(),
            kernel_tasks: SplitPolicy::single(),
        }
    }
}

/// Potential and acceleration per leaf cell, indexed like `Tree::grids`.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityField {
    pub phi: Vec<Vec<f64>>,
    pub g: Vec<Vec<[f64; 3]>>,
}

impl GravityField {
    pub fn zero(tree: &Tree) -> GravityField {
        let per = tree.geometry.n_edge.pow(3);
        GravityField {
            phi: vec![vec![0.0; per]; tree.leaf_count()],
            g: vec![vec![[0.0; 3]; per]; tree.leaf_count()],
        }
    }
}

/// Wall time per phase and interaction counts of one solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GravityStats {
    pub p2m_seconds: f64,
    pub m2m_seconds: f64,
    pub m2l_seconds: f64,
    pub l2l_seconds: f64,
    pub eval_seconds: f64,
    pub kernel_launches: usize,
}

struct Topology {
    n: usize,
    per: usize,
    kind: Vec<NodeKind>,
    /// Parent node and this node's octant in it.
    parent: Vec<Option<(NodeId, usize)>>,
    levels: Vec<Vec<NodeId>>,
    centers: Vec<[f64; 3]>,
}

/// Interaction lists and tree topology of a fixed tree, reusable across
/// solves while the tree structure does not change.
pub struct GravityPlan {
    topo: Arc<Topology>,
    lists: Arc<InteractionLists>,
}

type Moments = Arc<Vec<Multipole>>;
type Expansions = Arc<Vec<Expansion>>;

impl GravityPlan {
    pub fn new(tree: &Tree, near_radius: u32) -> Result<GravityPlan> {
        let lists = InteractionLists::build(tree, near_radius)?;
        let n = tree.geometry.n_edge;
        let per = n * n * n;
        let mut parent = vec![None; tree.node_count()];
        for (i, node) in tree.nodes().iter().enumerate() {
            if let Some(ch) = node.children() {
                for (o, c) in ch.iter().enumerate() {
                    parent[c.idx()] = Some((NodeId(i as u32), o));
                }
            }
        }
        let topo = Topology {
            n,
            per,
            kind: tree.nodes().iter().map(|nd| nd.kind).collect(),
            parent,
            levels: tree.levels(),
            centers: (0..lists.cell_count() as CellId).map(|c| cell_center(tree, c)).collect(),
        };
        Ok(GravityPlan {
            topo: Arc::new(topo),
            lists: Arc::new(lists),
        })
    }

    pub fn lists(&self) -> &InteractionLists {
        &self.lists
    }

    /// Runs the five phases (P2M, M2M upward, M2L, L2L downward, leaf
    /// evaluation with direct near-field sums). Every phase is one kernel
    /// launch per node; levels are synchronized by waiting on all launches of
    /// a level before the next starts.
    pub fn solve(&self, tree: &Tree, engine: &Engine, config: &GravityConfig) -> Result<(GravityField, GravityStats)> {
        assert_eq!(tree.node_count(), self.topo.kind.len(), "plan built for another tree");
        if config.near_radius != self.lists.near_radius() {
            return Err(CoreError::InvalidConfig(format!(
                "plan built with near_radius {}, config asks for {}",
                self.lists.near_radius(),
                config.near_radius
            )));
        }
        let topo = &self.topo;
        let nodes = tree.node_count();
        let mut stats = GravityStats::default();

        // P2M: leaf cells become point masses at their centers.
        let t = Instant::now();
        let mut moments: Vec<Option<Moments>> = vec![None; nodes];
        let leaves = tree.leaf_nodes();
        let handles = leaves
            .iter()
            .enumerate()
            .map(|(l, _)| {
                let grid = tree.grid(LeafId(l as u32));
                let rho: Arc<Vec<f64>> = Arc::new(grid.cells.iter().map(|c| c.rho).collect());
                let (origin, h, n) = (grid.origin, grid.cell_width, grid.n_edge);
                launch(engine, topo.per, config.kernel_tasks, move |r: Range<usize>| {
                    // Same arithmetic as SubGrid::cell_center and cell_volume.
                    let vol = h * h * h;
                    r.map(|i| {
                        let c = [i % n, (i / n) % n, i / (n * n)];
                        let x = std::array::from_fn(|a| origin[a] + (c[a] as f64 + 0.5) * h);
                        Multipole::point(rho[i] * vol, x)
                    })
                    .collect()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        stats.kernel_launches += handles.len();
        for (&node, h) in leaves.iter().zip(handles) {
            moments[node.idx()] = Some(Arc::new(join(h)?));
        }
        stats.p2m_seconds = t.elapsed().as_secs_f64();

        // M2M, deepest interior level first.
        let t = Instant::now();
        for level in topo.levels.iter().rev() {
            let interior: Vec<NodeId> = level
                .iter()
                .copied()
                .filter(|nd| matches!(topo.kind[nd.idx()], NodeKind::Interior(_)))
                .collect();
            let handles = interior
                .iter()
                .map(|&node| {
                    let NodeKind::Interior(ch) = topo.kind[node.idx()] else { unreachable!() };
                    let kids: [Moments; 8] = ch.map(|c| moments[c.idx()].clone().expect("children done"));
                    let topo = topo.clone();
                    launch(engine, topo.per, config.kernel_tasks, move |r: Range<usize>| {
                        let base = node.idx() * topo.per;
                        r.map(|i| {
                            let parts = child_slots(topo.n, i).map(|(o, l)| kids[o][l]);
                            Multipole::combine(&parts, topo.centers[base + i])
                        })
                        .collect()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            stats.kernel_launches += handles.len();
            for (&node, h) in interior.iter().zip(handles) {
                moments[node.idx()] = Some(Arc::new(join(h)?));
            }
        }
        let moments: Arc<Vec<Moments>> = Arc::new(moments.into_iter().map(|m| m.expect("all nodes")).collect());
        stats.m2m_seconds = t.elapsed().as_secs_f64();

        // M2L: each target cell gathers its well-separated sources.
        let t = Instant::now();
        let handles = (0..nodes)
            .map(|node| {
                let (topo, lists, moments) = (topo.clone(), self.lists.clone(), moments.clone());
                let lanes = config.lanes;
                launch(engine, topo.per, config.multipole_tasks, move |r: Range<usize>| {
                    let mut batch = M2lBatch::new();
                    let base = node * topo.per;
                    r.map(|i| {
                        let target = moments[node][i].com;
                        batch.clear();
                        for &s in lists.m2l((base + i) as CellId) {
                            let src = &moments[s as usize / topo.per][s as usize % topo.per];
                            batch.push(&M2lSource {
                                r: std::array::from_fn(|a| target[a] - src.com[a]),
                                m: src.m,
                                quad: src.quad,
                                oct: src.oct,
                            });
                        }
                        run_m2l_kernel(&batch, lanes)
                    })
                    .collect()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        stats.kernel_launches += handles.len();
        let mut local: Vec<Expansions> = Vec::with_capacity(nodes);
        for h in handles {
            local.push(Arc::new(join(h)?));
        }
        stats.m2l_seconds = t.elapsed().as_secs_f64();

        // L2L, root first: add the parent's expansion shifted to each cell.
        let t = Instant::now();
        let mut full: Vec<Option<Expansions>> = vec![None; nodes];
        for level in topo.levels.iter() {
            let handles = level
                .iter()
                .map(|&node| {
                    let own = local[node.idx()].clone();
                    let up = topo.parent[node.idx()].map(|(p, o)| {
                        (o, full[p.idx()].clone().expect("parent done"), moments[p.idx()].clone())
                    });
                    let (topo, moments) = (topo.clone(), moments.clone());
                    launch(engine, topo.per, config.kernel_tasks, move |r: Range<usize>| {
                        r.map(|i| {
                            let Some((octant, ref pexp, ref pmom)) = up else {
                                return own[i];
                            };
                            let pi = parent_slot(topo.n, octant, i);
                            let c = moments[node.idx()][i].com;
                            let pc = pmom[pi].com;
                            let shifted = l2l(&pexp[pi], std::array::from_fn(|a| c[a] - pc[a]));
                            std::array::from_fn::<f64, EXPANSION_LEN, _>(|k| own[i][k] + shifted[k])
                        })
                        .collect()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            stats.kernel_launches += handles.len();
            for (&node, h) in level.iter().zip(handles) {
                full[node.idx()] = Some(Arc::new(join(h)?));
            }
        }
        stats.l2l_seconds = t.elapsed().as_secs_f64();

        // Leaf evaluation plus direct near-field sums.
        let t = Instant::now();
        let handles = leaves
            .iter()
            .map(|&node| {
                let exp = full[node.idx()].clone().expect("all levels done");
                let (topo, lists, moments) = (topo.clone(), self.lists.clone(), moments.clone());
                launch(engine, topo.per, config.kernel_tasks, move |r: Range<usize>| {
                    let base = node.idx() * topo.per;
                    r.map(|i| {
                        let (mut phi, mut g) = evaluate(&exp[i]);
                        let x = moments[node.idx()][i].com;
                        for &s in lists.p2p((base + i) as CellId) {
                            let src = &moments[s as usize / topo.per][s as usize % topo.per];
                            let d = [src.com[0] - x[0], src.com[1] - x[1], src.com[2] - x[2]];
                            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                            let rr = r2.sqrt();
                            phi -= src.m / rr;
                            let f = src.m / (r2 * rr);
                            for a in 0..3 {
                                g[a] += f * d[a];
                            }
                        }
                        (phi, g)
                    })
                    .collect()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        stats.kernel_launches += handles.len();
        let mut field = GravityField {
            phi: Vec::with_capacity(leaves.len()),
            g: Vec::with_capacity(leaves.len()),
        };
        for h in handles {
            let (phi, g) = join(h)?.into_iter().unzip();
            field.phi.push(phi);
            field.g.push(g);
        }
        stats.eval_seconds = t.elapsed().as_secs_f64();
        Ok((field, stats))
    }
}

fn launch<R, F>(engine: &Engine, len: usize, policy: SplitPolicy, body: F) -> Result<TaskHandle<Vec<Vec<R>>>>
where
    R: Clone + Send + Sync + 'static,
    F: Fn(Range<usize>) -> Vec<R> + Send + Sync + 'static,
{
    Ok(engine.launch_split_kernel(0..len, policy, body)?)
}

fn join<R: Clone + Send + 'static>(h: TaskHandle<Vec<Vec<R>>>) -> Result<Vec<R>> {
    Ok(h.wait()?.into_iter().flatten().collect())
}

/// Leaf-cell point masses `(rho h^3, center)` in leaf order, the input the
/// solver sees.
pub fn leaf_point_masses(tree: &Tree) -> Vec<(f64, [f64; 3])> {
    tree.grids
        .iter()
        .flat_map(|g| {
            let vol = g.cell_volume();
            (0..g.cells.len()).map(move |i| (g.cells[i].rho * vol, g.cell_center(i)))
        })
        .collect()
}

/// How a solved field compares with exact pairwise sums over the same
/// point masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldCheck {
    /// max |g - g_direct| over max |g_direct|.
    pub max_rel_error: f64,
    /// |sum m g| over sum m |g|.
    pub momentum_residual: f64,
    /// |sum x cross m g| over sum |x cross m g|.
    pub torque_residual: f64,
}

/// Compares `field` with the direct-sum oracle and measures the net force
/// and torque it implies.
pub fn check_field(tree: &Tree, field: &GravityField) -> Result<FieldCheck> {
    let pts = leaf_point_masses(tree);
    let direct = super::direct_sum_oracle(&pts)?;
    let g: Vec<[f64; 3]> = field.g.concat();
    let gmax = direct.iter().map(|s| norm(s.g)).fold(0.0, f64::max);
    let err = g
        .iter()
        .zip(&direct)
        .map(|(a, b)| norm([a[0] - b.g[0], a[1] - b.g[1], a[2] - b.g[2]]))
        .fold(0.0, f64::max);
    let force: Vec<[f64; 3]> = pts.iter().zip(&g).map(|(&(m, _), g)| g.map(|v| m * v)).collect();
    let torque: Vec<[f64; 3]> = pts.iter().zip(&force).map(|(&(_, x), f)| cross(x, *f)).collect();
    let ratio = |v: &[[f64; 3]]| {
        let mags: Vec<f64> = v.iter().map(|&f| norm(f)).collect();
        let scale = pairwise_sum(&mags);
        if scale > 0.0 {
            norm(pairwise_sum3(v)) / scale
        } else {
            0.0
        }
    };
    Ok(FieldCheck {
        max_rel_error: if gmax > 0.0 { err / gmax } else { err },
        momentum_residual: ratio(&force),
        torque_residual: ratio(&torque),
    })
}
