use octomini::bench::{
    cells_per_second, csv_writer, read_csv, run_benchmark, sweep, BenchRecord, RunSettings, SweepGrid, CSV_HEADER,
};
use octomini::scenario::{ScenarioConfig, ScenarioKind};
use octomini_core::simd::LaneConfig;

fn small(kind: ScenarioKind) -> ScenarioConfig {
    ScenarioConfig { kind, max_level: 1, steps: 3, ..Default::default() }
}

fn settings(workers: usize, localities: usize, simd: LaneConfig, comm_opt: bool, t: usize) -> RunSettings {
    RunSettings { workers, localities, simd, comm_opt, multipole_tasks: t }
}

#[test]
fn contrived_throughput() {
    let r = BenchRecord::new("rotating_star", &RunSettings::default(), 5048, 5048 * 512, 10, 100.0);
    assert_eq!(r.cells, 2_584_576);
    assert_eq!(r.cells_per_s, 258_457.6);
    assert_eq!(r.to_row()[10], "258457.6");
}

#[test]
fn throughput_survives_the_csv() {
    let rows: Vec<BenchRecord> = [(17u64, 3u64, 0.123_456_789_f64), (5048, 10, 100.0), (1, 1, 3.0), (977, 7, 1e-3)]
        .iter()
        .map(|&(leaves, steps, wall)| BenchRecord::new("uniform", &RunSettings::default(), leaves, leaves * 512, steps, wall))
        .collect();
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf).unwrap();
        for r in &rows {
            w.write_record(r.to_row()).unwrap();
        }
    }
    let back = read_csv(&buf[..]).unwrap();
    assert_eq!(back, rows);
    for r in &back {
        let again = r.cells as f64 * r.steps as f64 / r.wall_s;
        assert!((again - r.cells_per_s).abs() <= 1e-15 * r.cells_per_s);
        assert_eq!(again, cells_per_second(r.cells, r.steps, r.wall_s));
    }
}

#[test]
fn foreign_header_is_rejected() {
    let text = "scenario,workers\nsod,1\n";
    assert!(read_csv(text.as_bytes()).is_err());
}

#[test]
fn empty_grid_gives_header_only() {
    let mut buf = Vec::new();
    let rows = sweep(&small(ScenarioKind::Uniform), &SweepGrid::default().settings(), &mut buf).unwrap();
    assert!(rows.is_empty());
    assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn toggle_grid_rows_agree() {
    let grid = SweepGrid {
        localities: vec![2],
        workers: vec![2],
        simd: vec![LaneConfig::scalar(), LaneConfig::vector()],
        comm_opt: vec![false, true],
        multipole_tasks: vec![1],
    };
    let mut buf = Vec::new();
    let rows = sweep(&small(ScenarioKind::Uniform), &grid.settings(), &mut buf).unwrap();
    assert_eq!(rows.len(), 4);
    let csv = read_csv(&buf[..]).unwrap();
    assert_eq!(csv.len(), 4);
    let toggles: Vec<_> = csv.iter().map(|r| (r.simd.as_str(), r.comm_opt)).collect();
    assert_eq!(toggles, [("scalar", false), ("scalar", true), ("vector", false), ("vector", true)]);

    let out: Vec<_> = rows.iter().map(|r| r.outcome.as_ref().unwrap()).collect();
    // comm_opt never changes the state; lanes may move the last bits.
    assert_eq!(out[0].digest, out[1].digest);
    assert_eq!(out[2].digest, out[3].digest);
    let (a, b) = (out[1].diagnostics.last().unwrap(), out[3].diagnostics.last().unwrap());
    assert!((a.totals.mass - b.totals.mass).abs() <= 1e-10 * a.totals.mass);
    assert!((a.totals.kinetic - b.totals.kinetic).abs() <= 1e-10 * a.totals.kinetic);
    assert!((a.totals.internal - b.totals.internal).abs() <= 1e-10 * a.totals.internal);
}

#[test]
fn workers_scan_keeps_the_digest() {
    let grid = SweepGrid {
        localities: vec![1],
        workers: vec![1, 2, 4],
        simd: vec![LaneConfig::scalar()],
        comm_opt: vec![true],
        multipole_tasks: vec![1],
    };
    let rows = sweep(&small(ScenarioKind::Sod), &grid.settings(), Vec::new()).unwrap();
    let workers: Vec<usize> = rows.iter().map(|r| r.record.workers).collect();
    assert_eq!(workers, [1, 2, 4]);
    let digests: Vec<&str> = rows.iter().map(|r| r.outcome.as_ref().unwrap().digest.as_str()).collect();
    assert!(digests.iter().all(|d| *d == digests[0]));
}

#[test]
fn failed_rows_do_not_stop_the_sweep() {
    let runs = [
        settings(1, 1, LaneConfig::scalar(), true, 1),
        settings(1, 0, LaneConfig::scalar(), true, 1),
        settings(2, 1, LaneConfig::scalar(), true, 1),
    ];
    let mut buf = Vec::new();
    let rows = sweep(&small(ScenarioKind::Uniform), &runs, &mut buf).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].error.is_none() && rows[2].error.is_none());
    assert_eq!(rows[1].error.as_ref().unwrap().exit_code(), 2);
    let csv = read_csv(&buf[..]).unwrap();
    assert!(csv[1].is_failed() && csv[1].cells_per_s.is_nan());
    assert!(!csv[0].is_failed() && !csv[2].is_failed());
}

#[test]
fn repeated_runs_are_identical() {
    let c = ScenarioConfig { max_level: 1, steps: 2, ..Default::default() };
    let a = run_benchmark(&c, &settings(1, 1, LaneConfig::scalar(), true, 1)).unwrap();
    let b = run_benchmark(&c, &settings(3, 2, LaneConfig::scalar(), false, 4)).unwrap();
    assert_eq!(a.digest, b.digest);
    assert_eq!(a.diagnostics.len(), 3);
    assert_eq!(a.record.leaves, b.record.leaves);
    assert_eq!(a.record.cells, a.record.leaves * 512);
    assert_eq!(a.record.steps, 2);
    assert!(a.record.wall_s > 0.0);
    for (x, y) in a.diagnostics.iter().zip(&b.diagnostics) {
        assert_eq!(x.digest, y.digest);
        assert_eq!(x.totals, y.totals);
    }
}

#[test]
fn sod_run_keeps_mass() {
    let out = run_benchmark(&small(ScenarioKind::Sod), &RunSettings::default()).unwrap();
    let (m0, m1) = (out.diagnostics[0].totals.mass, out.diagnostics.last().unwrap().totals.mass);
    assert!((m1 - m0).abs() <= 1e-13 * m0);
    assert_eq!(out.record.scenario, "sod");
}

#[test]
fn setup_errors_are_configuration_errors() {
    let c = ScenarioConfig { max_level: 40, ..small(ScenarioKind::Uniform) };
    assert_eq!(run_benchmark(&c, &RunSettings::default()).unwrap_err().exit_code(), 2);
    let c = ScenarioConfig { mass_ratio: 2.0, ..small(ScenarioKind::Binary) };
    assert_eq!(run_benchmark(&c, &RunSettings::default()).unwrap_err().exit_code(), 2);
}

#[test]
fn solver_failures_carry_step_and_digest() {
    // A central density near the top of the f64 range overflows the
    // energy once it is updated.
    let c = ScenarioConfig { central_density: 1e300, max_level: 1, ..Default::default() };
    match run_benchmark(&c, &RunSettings::default()) {
        Err(e @ octomini::AppError::Solver { .. }) => {
            assert_eq!(e.exit_code(), 3);
            let octomini::AppError::Solver { step, digest, .. } = e else { unreachable!() };
            assert!(step >= 1);
            assert_eq!(digest.len(), 64);
        }
        other => panic!("expected a solver failure, got {other:?}"),
    }
}
