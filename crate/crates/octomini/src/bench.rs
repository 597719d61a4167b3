//! Timed runs, parameter sweeps and their CSV output.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use octomini_core::comm::CommConfig;
use octomini_core::gravity::GravityConfig;
use octomini_core::grid::{write_snapshot, Tree};
use octomini_core::hydro::{diagnostics, Totals};
use octomini_core::sim::{SimConfig, Simulation};
use octomini_core::simd::{LaneConfig, DEFAULT_VECTOR_WIDTH};
use octomini_core::CoreError;
use octomini_tasks::{Engine, EngineConfig, SplitPolicy};

use crate::scenario::{build_scenario_tree, ScenarioConfig};
use crate::AppError;

pub const CSV_HEADER: [&str; 11] = [
    "scenario",
    "localities",
    "workers",
    "simd",
    "comm_opt",
    "multipole_tasks",
    "leaves",
    "cells",
    "steps",
    "wall_s",
    "cells_per_s",
];

pub const DIAG_HEADER: [&str; 17] = [
    "scenario", "run", "step", "time", "dt", "mass", "px", "py", "pz", "lx", "ly", "lz", "kinetic", "internal",
    "tracer1", "tracer2", "digest",
];

/// Engine, communication and lane settings of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub workers: usize,
    pub localities: usize,
    pub simd: LaneConfig,
    pub comm_opt: bool,
    pub multipole_tasks: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { workers: 1, localities: 1, simd: LaneConfig::scalar(), comm_opt: true, multipole_tasks: 1 }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<(), AppError> {
        if self.workers == 0 || self.localities == 0 || self.multipole_tasks == 0 {
            return Err(AppError::Config("workers, localities and multipole_tasks must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sim_config(&self, scenario: &ScenarioConfig) -> Result<SimConfig, AppError> {
        self.validate()?;
        let t = SplitPolicy::new(self.multipole_tasks)
            .ok_or_else(|| AppError::Config(format!("bad multipole task count {}", self.multipole_tasks)))?;
        let gravity = scenario.kind.has_gravity().then(|| GravityConfig {
            lanes: self.simd,
            multipole_tasks: t,
            ..Default::default()
        });
        Ok(SimConfig {
            hydro: octomini_core::hydro::HydroConfig { lanes: self.simd, ..scenario.hydro() },
            gravity,
            comm: CommConfig { local_opt: self.comm_opt, localities: self.localities },
            ..Default::default()
        })
    }
}

pub fn simd_label(lanes: LaneConfig) -> String {
    match lanes.width() {
        1 => "scalar".into(),
        DEFAULT_VECTOR_WIDTH => "vector".into(),
        w => format!("vector{w}"),
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

pub fn parse_on_off(s: &str) -> Result<bool, AppError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        other => Err(AppError::Config(format!("expected on/off, got {other:?}"))),
    }
}

/// One row of the benchmark CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scenario: String,
    pub localities: usize,
    pub workers: usize,
    pub simd: String,
    pub comm_opt: bool,
    pub multipole_tasks: usize,
    pub leaves: u64,
    /// `leaves * n_edge^3`.
    pub cells: u64,
    pub steps: u64,
    pub wall_s: f64,
    pub cells_per_s: f64,
}

impl BenchRecord {
    pub fn new(scenario: &str, settings: &RunSettings, leaves: u64, cells: u64, steps: u64, wall_s: f64) -> Self {
        BenchRecord {
            scenario: scenario.to_string(),
            localities: settings.localities,
            workers: settings.workers,
            simd: simd_label(settings.simd),
            comm_opt: settings.comm_opt,
            multipole_tasks: settings.multipole_tasks,
            leaves,
            cells,
            steps,
            wall_s,
            cells_per_s: cells_per_second(cells, steps, wall_s),
        }
    }

    /// Row for a run that did not finish; timing fields are NaN.
    pub fn failed(scenario: &str, settings: &RunSettings) -> Self {
        BenchRecord::new(scenario, settings, 0, 0, 0, f64::NAN)
    }

    pub fn is_failed(&self) -> bool {
        self.wall_s.is_nan()
    }

    pub fn to_row(&self) -> [String; 11] {
        [
            self.scenario.clone(),
            self.localities.to_string(),
            self.workers.to_string(),
            self.simd.clone(),
            on_off(self.comm_opt).to_string(),
            self.multipole_tasks.to_string(),
            self.leaves.to_string(),
            self.cells.to_string(),
            self.steps.to_string(),
            self.wall_s.to_string(),
            self.cells_per_s.to_string(),
        ]
    }

    pub fn from_row(row: &csv::StringRecord) -> Result<Self, AppError> {
        if row.len() != CSV_HEADER.len() {
            return Err(AppError::Config(format!("expected {} fields, got {}", CSV_HEADER.len(), row.len())));
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, AppError> {
            s.parse().map_err(|_| AppError::Config(format!("bad {what} {s:?}")))
        }
        Ok(BenchRecord {
            scenario: row[0].to_string(),
            localities: num(&row[1], "localities")?,
            workers: num(&row[2], "workers")?,
            simd: row[3].to_string(),
            comm_opt: parse_on_off(&row[4])?,
            multipole_tasks: num(&row[5], "multipole_tasks")?,
            leaves: num(&row[6], "leaves")?,
            cells: num(&row[7], "cells")?,
            steps: num(&row[8], "steps")?,
            wall_s: num(&row[9], "wall_s")?,
            cells_per_s: num(&row[10], "cells_per_s")?,
        })
    }
}

pub fn cells_per_second(cells: u64, steps: u64, wall_s: f64) -> f64 {
    cells as f64 * steps as f64 / wall_s
}

pub fn csv_writer<W: Write>(out: W) -> Result<csv::Writer<W>, AppError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    Ok(w)
}

/// Reads a benchmark CSV, checking the header.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<BenchRecord>, AppError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(AppError::Config(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    r.records().map(|row| BenchRecord::from_row(&row?)).collect()
}

/// Conserved totals after one step, plus the state digest.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagRow {
    pub step: u64,
    pub time: f64,
    pub dt: f64,
    pub totals: Totals,
    pub digest: String,
}

impl DiagRow {
    fn to_row(&self, scenario: &str, run: usize) -> Vec<String> {
        let t = &self.totals;
        let mut v = vec![scenario.to_string(), run.to_string(), self.step.to_string()];
        v.extend(
            [self.time, self.dt, t.mass]
                .into_iter()
                .chain(t.momentum)
                .chain(t.angular_momentum)
                .chain([t.kinetic, t.internal])
                .chain(t.tracer_mass)
                .map(|x| format!("{x:e}")),
        );
        v.push(self.digest.clone());
        v
    }
}

pub fn write_diagnostics<W: Write>(out: W, runs: &[(String, Vec<DiagRow>)]) -> Result<(), AppError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(DIAG_HEADER)?;
    for (i, (scenario, rows)) in runs.iter().enumerate() {
        for row in rows {
            w.write_record(row.to_row(scenario, i))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Result of a finished run.
#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub record: BenchRecord,
    pub digest: String,
    /// Row 0 is the initial state.
    pub diagnostics: Vec<DiagRow>,
    pub multipole_seconds: f64,
    pub tree: Tree,
}

fn setup_error(e: CoreError) -> AppError {
    AppError::Config(e.to_string())
}

/// Builds the scenario and runs `scenario.steps` full steps. Only the step
/// calls are timed; the per-step diagnostics (no potential) are not.
pub fn run_benchmark(scenario: &ScenarioConfig, settings: &RunSettings) -> Result<BenchOutcome, AppError> {
    let sim_config = settings.sim_config(scenario)?;
    let tree = build_scenario_tree(scenario).map_err(setup_error)?;
    let engine = Engine::new(EngineConfig::with_workers(settings.workers)).map_err(|e| AppError::Config(e.to_string()))?;
    let mut sim = Simulation::new(tree, sim_config).map_err(setup_error)?;
    let (leaves, cells) = (sim.tree().leaf_count() as u64, sim.tree().cell_count() as u64);
    info!("{}: {leaves} leaves, {cells} cells, {:?}", scenario.kind, settings);

    let row = |sim: &Simulation, dt: f64| DiagRow {
        step: sim.steps(),
        time: sim.time(),
        dt,
        totals: diagnostics(sim.tree(), None),
        digest: sim.digest(),
    };
    let mut diag = vec![row(&sim, 0.0)];
    let (mut wall, mut multipole) = (0.0, 0.0);
    for step in 1..=scenario.steps {
        let t0 = Instant::now();
        let report = sim
            .step(&engine)
            .map_err(|source| AppError::Solver { step, digest: sim.digest(), source })?;
        wall += t0.elapsed().as_secs_f64();
        multipole += report.multipole_seconds;
        diag.push(row(&sim, report.dt));
    }
    let digest = sim.digest();
    let record = BenchRecord::new(scenario.kind.id(), settings, leaves, cells, scenario.steps as u64, wall);
    Ok(BenchOutcome { record, digest, diagnostics: diag, multipole_seconds: multipole, tree: sim.into_tree() })
}

pub fn save_snapshot(tree: &Tree, path: &Path) -> Result<(), AppError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_snapshot(tree, &mut out).map_err(|e| AppError::Config(e.to_string()))?;
    out.flush()?;
    Ok(())
}

/// Value lists whose Cartesian product a sweep runs, nested in CSV column
/// order (localities outermost).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SweepGrid {
    pub localities: Vec<usize>,
    pub workers: Vec<usize>,
    pub simd: Vec<LaneConfig>,
    pub comm_opt: Vec<bool>,
    pub multipole_tasks: Vec<usize>,
}

impl SweepGrid {
    pub fn settings(&self) -> Vec<RunSettings> {
        let mut out = Vec::new();
        for &localities in &self.localities {
            for &workers in &self.workers {
                for &simd in &self.simd {
                    for &comm_opt in &self.comm_opt {
                        for &multipole_tasks in &self.multipole_tasks {
                            out.push(RunSettings { workers, localities, simd, comm_opt, multipole_tasks });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One sweep row; `outcome` is `None` for a failed run.
#[derive(Debug)]
pub struct SweepRow {
    pub record: BenchRecord,
    pub outcome: Option<BenchOutcome>,
    pub error: Option<AppError>,
}

/// Runs every settings tuple in order, writing each CSV row as it
/// finishes. Failures become NaN rows and the sweep carries on.
pub fn sweep<W: Write>(scenario: &ScenarioConfig, runs: &[RunSettings], out: W) -> Result<Vec<SweepRow>, AppError> {
    let mut w = csv_writer(out)?;
    w.flush()?;
    let mut rows = Vec::with_capacity(runs.len());
    for s in runs {
        let row = match run_benchmark(scenario, s) {
            Ok(o) => SweepRow { record: o.record.clone(), outcome: Some(o), error: None },
            Err(e) => {
                warn!("sweep row {s:?} failed: {e}");
                SweepRow { record: BenchRecord::failed(scenario.kind.id(), s), outcome: None, error: Some(e) }
            }
        };
        w.write_record(row.record.to_row())?;
        w.flush()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_stable() {
        let mut buf = Vec::new();
        csv_writer(&mut buf).unwrap().flush().unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scenario,localities,workers,simd,comm_opt,multipole_tasks,leaves,cells,steps,wall_s,cells_per_s\n"
        );
    }

    #[test]
    fn failed_rows_round_trip() {
        let r = BenchRecord::failed("sod", &RunSettings::default());
        let mut buf = Vec::new();
        {
            let mut w = csv_writer(&mut buf).unwrap();
            w.write_record(r.to_row()).unwrap();
        }
        let back = read_csv(&buf[..]).unwrap();
        assert!(back[0].is_failed() && back[0].cells_per_s.is_nan());
        assert_eq!(back[0].scenario, "sod");
    }

    #[test]
    fn grid_product_order() {
        let g = SweepGrid {
            localities: vec![1, 2],
            workers: vec![4, 1],
            simd: vec![LaneConfig::scalar()],
            comm_opt: vec![true],
            multipole_tasks: vec![1],
        };
        let s = g.settings();
        let pairs: Vec<_> = s.iter().map(|r| (r.localities, r.workers)).collect();
        assert_eq!(pairs, [(1, 4), (1, 1), (2, 4), (2, 1)]);
    }

    #[test]
    fn on_off_parsing() {
        assert!(parse_on_off("ON").unwrap());
        assert!(!parse_on_off("off").unwrap());
        assert!(parse_on_off("maybe").is_err());
    }
}
