use std::fs::File;
use std::io::{self, BufReader, BufWriter};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use octomini::bench::{csv_writer, parse_on_off, save_snapshot, write_diagnostics, RunSettings, SweepGrid};
use octomini::oracle::run_oracle;
use octomini::preset::{find_preset, PRESETS};
use octomini::{run_benchmark, sweep, AppError, RunConfig};
use octomini_core::simd::{simd_microbench, vector_capable_host, KernelId, LaneConfig};

#[derive(Parser)]
#[command(name = "octomini", version, about = "Desk-scale AMR self-gravitating hydro benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report processed cells per second.
    Run(RunArgs),
    /// Run the Cartesian product of comma-separated settings lists.
    Sweep(SweepArgs),
    /// Direct-sum potential and acceleration of `m x y z` lines.
    Oracle {
        /// Input file; stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Time the lane kernels in scalar and vector mode.
    Microbench {
        /// flux, m2l or all.
        #[arg(long, default_value = "all")]
        kernel: String,
        /// Comma-separated batch sizes.
        #[arg(long, default_value = "1000000")]
        sizes: String,
        #[arg(long, default_value = "vector")]
        simd: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the production-scale presets.
    Presets,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named production-scale size (see `octomini presets`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    max_level: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-step conserved totals and state digests.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    localities: Option<String>,
    /// on or off.
    #[arg(long)]
    comm_opt: Option<String>,
    /// scalar, vector or vector<W>.
    #[arg(long)]
    simd: Option<String>,
    #[arg(long)]
    multipole_tasks: Option<String>,
    /// Final state, written after the last step.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    localities: Option<String>,
    #[arg(long)]
    comm_opt: Option<String>,
    #[arg(long)]
    simd: Option<String>,
    #[arg(long)]
    multipole_tasks: Option<String>,
}

fn base_config(a: &ScenarioArgs) -> Result<RunConfig, AppError> {
    let mut c = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &a.preset {
        let p = find_preset(name).ok_or_else(|| AppError::Config(format!("unknown preset {name:?}")))?;
        c.set("scenario", p.kind.id())?;
        if let Some(level) = p.max_level {
            c.set("max_level", &level.to_string())?;
        }
    }
    for (key, v) in [("scenario", &a.scenario), ("max_level", &a.max_level), ("steps", &a.steps), ("seed", &a.seed)] {
        if let Some(v) = v {
            c.set(key, v)?;
        }
    }
    if let Some(p) = &a.csv {
        c.csv = Some(p.clone());
    }
    if let Some(p) = &a.diagnostics {
        c.diagnostics = Some(p.clone());
    }
    Ok(c)
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, AppError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::Config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_run(a: RunArgs) -> Result<(), AppError> {
    let mut c = base_config(&a.common)?;
    for (key, v) in [
        ("workers", &a.workers),
        ("localities", &a.localities),
        ("comm_opt", &a.comm_opt),
        ("simd", &a.simd),
        ("multipole_tasks", &a.multipole_tasks),
    ] {
        if let Some(v) = v {
            c.set(key, v)?;
        }
    }
    if let Some(p) = a.snapshot {
        c.snapshot = Some(p);
    }
    let out = run_benchmark(&c.scenario, &c.settings)?;
    let r = &out.record;
    println!(
        "{}: {} leaves, {} cells, {} steps in {:.3} s -> {:.4e} cells/s (digest {})",
        r.scenario, r.leaves, r.cells, r.steps, r.wall_s, r.cells_per_s, out.digest
    );
    if let Some(p) = &c.csv {
        let mut w = csv_writer(create(p)?)?;
        w.write_record(r.to_row())?;
        w.flush()?;
    }
    if let Some(p) = &c.diagnostics {
        write_diagnostics(create(p)?, &[(r.scenario.clone(), out.diagnostics.clone())])?;
    }
    if let Some(p) = &c.snapshot {
        save_snapshot(&out.tree, p)?;
    }
    Ok(())
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T, AppError>) -> Result<Vec<T>, AppError> {
    s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(f).collect()
}

fn count(s: &str) -> Result<usize, AppError> {
    s.parse().map_err(|_| AppError::Config(format!("bad count {s:?}")))
}

fn lanes(s: &str) -> Result<LaneConfig, AppError> {
    LaneConfig::parse(s).map_err(|e| AppError::Config(e.to_string()))
}

fn cmd_sweep(a: SweepArgs) -> Result<(), AppError> {
    let c = base_config(&a.common)?;
    let d: RunSettings = c.settings;
    let grid = SweepGrid {
        localities: a.localities.as_deref().map_or(Ok(vec![d.localities]), |s| list(s, count))?,
        workers: a.workers.as_deref().map_or(Ok(vec![d.workers]), |s| list(s, count))?,
        simd: a.simd.as_deref().map_or(Ok(vec![d.simd]), |s| list(s, lanes))?,
        comm_opt: a.comm_opt.as_deref().map_or(Ok(vec![d.comm_opt]), |s| list(s, parse_on_off))?,
        multipole_tasks: a.multipole_tasks.as_deref().map_or(Ok(vec![d.multipole_tasks]), |s| list(s, count))?,
    };
    let runs = grid.settings();
    let rows = match &c.csv {
        Some(p) => sweep(&c.scenario, &runs, create(p)?)?,
        None => sweep(&c.scenario, &runs, io::stdout().lock())?,
    };
    if let Some(p) = &c.diagnostics {
        let done: Vec<_> = rows
            .iter()
            .filter_map(|r| r.outcome.as_ref().map(|o| (o.record.scenario.clone(), o.diagnostics.clone())))
            .collect();
        write_diagnostics(create(p)?, &done)?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("octomini: {failed} of {} sweep rows failed", rows.len());
    }
    Ok(())
}

fn cmd_microbench(kernel: &str, sizes: &str, simd: &str, seed: u64) -> Result<(), AppError> {
    let kernels = match kernel {
        "all" => vec![KernelId::Flux, KernelId::M2l],
        k => vec![KernelId::parse(k).map_err(|e| AppError::Config(e.to_string()))?],
    };
    let sizes = list(sizes, count)?;
    let lanes = lanes(simd)?;
    let capable = vector_capable_host();
    println!("vector-capable host: {}", if capable { "yes" } else { "no" });
    println!("kernel mode   width elements seconds    max_rel_dev speedup");
    for k in kernels {
        let reports = simd_microbench(k, &sizes, lanes, seed).map_err(|e| AppError::Config(e.to_string()))?;
        for pair in reports.chunks(2) {
            let base = pair[0].seconds;
            for r in pair {
                println!(
                    "{:<6} {:<6} {:>5} {:>8} {:>10.4e} {:>11.3e} {:>7.2}",
                    r.kernel,
                    r.mode,
                    r.width,
                    r.elements,
                    r.seconds,
                    r.deviation,
                    base / r.seconds
                );
            }
        }
    }
    if !capable {
        println!("(speedups are informational on this host)");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle { input } => {
            let out = io::stdout().lock();
            match input {
                Some(p) => {
                    let f = File::open(&p).map_err(|e| AppError::Config(format!("cannot read {}: {e}", p.display())))?;
                    run_oracle(BufReader::new(f), out)?
                }
                None => run_oracle(io::stdin().lock(), out)?,
            };
            Ok(())
        }
        Command::Microbench { kernel, sizes, simd, seed } => cmd_microbench(&kernel, &sizes, &simd, seed),
        Command::Presets => {
            println!("name     scenario       level leaves      cells");
            for p in &PRESETS {
                let level = p.max_level.map_or("-".to_string(), |l| l.to_string());
                println!("{:<8} {:<14} {:>5} {:>10} {:>13}", p.name, p.kind.id(), level, p.leaves, p.cells);
            }
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("octomini: {e}");
        std::process::exit(e.exit_code());
    }
}
