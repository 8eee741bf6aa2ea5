//! `sekbest` command-line driver.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage or
//! configuration errors. Progress goes to stderr; tables and CSV to stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sekbest::detector::{Algorithm, DEFAULT_ML_BUDGET};
use sekbest::harness::{
    compare_complexity_table, oracle_check, render_complexity_table, run_experiment, write_csv,
    ComplexityMode, ExperimentSpec, OracleParams,
};
use sekbest::Error;

#[derive(Debug, Parser)]
#[command(name = "sekbest", version, about = "Schnorr-Euchner K-best MIMO detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs an experiment from a config file or a preset and writes CSV + JSON
    Run(RunArgs),
    /// Runs a single (N, M, K) sweep over SNR and prints CSV to stdout
    Sweep(SweepArgs),
    /// Prints node-count tables for ML, conventional and SE K-best
    Complexity {
        #[arg(long, value_enum, default_value = "formula")]
        mode: Mode,
    },
    /// Checks SE K-best against exhaustive ML on seeded trials
    OracleCheck(OracleArgs),
    /// Lists the built-in presets, or prints one as a config file
    Presets { name: Option<String> },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Formula,
    Tabulated,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// TOML experiment config
    #[arg(conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset (model1, model2, model3)
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for results.csv and summary.json
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides the config's run seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's frame count
    #[arg(long)]
    frames: Option<u64>,
    /// Worker threads (all cores by default)
    #[arg(long, env = "SE_KBEST_THREADS")]
    threads: Option<usize>,
    /// Exit with status 1 if any cell failed
    #[arg(long)]
    strict: bool,
    /// Overwrite existing result files
    #[arg(long)]
    force: bool,
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    /// SNR points in dB: a list `0,5,10` or a range `start:step:stop`
    #[arg(long)]
    snr: String,
    #[arg(long, default_value_t = 1000)]
    frames: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "se_kbest")]
    algorithm: String,
    #[arg(long)]
    sorted_qrd: bool,
    #[arg(long, env = "SE_KBEST_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 2)]
    nt: usize,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SE_KBEST_THREADS")]
    threads: Option<usize>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Complexity { mode } => cmd_complexity(mode),
        Command::OracleCheck(args) => cmd_oracle_check(args),
        Command::Presets { name } => cmd_presets(name),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut spec = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentSpec::from_file(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => ExperimentSpec::preset(name)?,
        (None, None) => return Err(Failure::Usage("a config path or --preset is required".into())),
    };
    if let Some(seed) = args.seed {
        spec.run_seed = seed;
    }
    if let Some(frames) = args.frames {
        spec.frames = frames;
    }
    spec.validate()?;
    let cells = spec.cells().len();
    eprintln!("running `{}`: {cells} cells x {} frames", spec.name, spec.frames);
    let report = run_experiment(&spec, args.threads)?;
    let (csv, json) = report.write(&args.out, args.force)?;
    eprintln!(
        "wrote {} and {} ({} points, {} failures, {:.1}s)",
        csv.display(),
        json.display(),
        report.points.len(),
        report.failures.len(),
        report.elapsed_s
    );
    for f in &report.failures {
        eprintln!("failed cell {:?}: {}", f.cell, f.error);
    }
    if args.strict && !report.failures.is_empty() {
        return Err(Failure::Check(format!("{} cells failed", report.failures.len())));
    }
    Ok(())
}

fn parse_snr_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("invalid SNR grid `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
            );
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [_] => text
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let algorithm: Algorithm = args.algorithm.parse()?;
    let spec = ExperimentSpec {
        name: "sweep".into(),
        antenna_sizes: vec![args.n],
        m_orders: vec![args.m],
        k_values: vec![args.k],
        snr_grid_db: parse_snr_grid(&args.snr)?,
        frames: args.frames,
        run_seed: args.seed,
        algorithm,
        sorted_qrd: args.sorted_qrd,
        snr_convention: Default::default(),
        early_stop_errors: None,
        ml_budget: DEFAULT_ML_BUDGET,
    };
    spec.validate()?;
    let report = run_experiment(&spec, args.threads)?;
    write_csv(&report.points, std::io::stdout().lock())?;
    if let Some(f) = report.failures.first() {
        return Err(Failure::Usage(f.error.clone()));
    }
    Ok(())
}

fn cmd_complexity(mode: Mode) -> Result<(), Failure> {
    let mode = match mode {
        Mode::Formula => ComplexityMode::Formula,
        Mode::Tabulated => ComplexityMode::Tabulated,
    };
    print!("{}", render_complexity_table(&compare_complexity_table(mode), mode));
    Ok(())
}

fn cmd_oracle_check(args: OracleArgs) -> Result<(), Failure> {
    let params = OracleParams {
        n_t: args.nt,
        m: args.m,
        k: args.k,
        trials: args.trials,
        snr_db: args.snr,
        run_seed: args.seed,
        ml_budget: DEFAULT_ML_BUDGET,
    };
    let pool = rayon_pool(args.threads)?;
    let report = pool.install(|| oracle_check(&params))?;
    println!(
        "trials={} saturated={} hard_mismatches={} ped_violations={}",
        report.trials, report.saturated, report.hard_mismatches, report.ped_violations
    );
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!("{report:?}")))
    }
}

fn rayon_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    builder.build().map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_presets(name: Option<String>) -> Result<(), Failure> {
    match name {
        Some(name) => print!("{}", ExperimentSpec::preset(&name)?.to_toml()),
        None => {
            for name in ExperimentSpec::preset_names() {
                let p = ExperimentSpec::preset(name)?;
                println!(
                    "{name}: N={:?} M={:?} K={:?} snr={:?} frames={}",
                    p.antenna_sizes, p.m_orders, p.k_values, p.snr_grid_db, p.frames
                );
            }
        }
    }
    Ok(())
}
