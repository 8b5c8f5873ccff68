//! `meanfield` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use meanfield::experiments::{preset_names, run_acceptance, run_experiment, Event};
use meanfield::io::{read_checkpoint, read_config, write_events, write_run, RunConfig};
use meanfield::numerics::parallel::with_workers;
use meanfield::Error;

const WORKERS_ENV: &str = "MEANFIELD_WORKERS";

#[derive(Parser)]
#[command(name = "meanfield", version, about = "Mean-field diffusion and particle-system experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its report.
    Run {
        /// Scenario preset (may come from --config instead).
        scenario: Option<String>,
        /// TOML run configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config key, e.g. `--set dt=1e-4`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: config, then $MEANFIELD_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also write a gnuplot script.
        #[arg(long)]
        emit_plots: bool,
    },
    /// Run the full acceptance suite.
    Verify {
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the shape and metadata of a checkpoint file.
    Inspect { checkpoint: PathBuf },
    /// List the scenario presets.
    List,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::Config(_) | Error::PresetNotFound(_) | Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn env_workers() -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

#[allow(clippy::too_many_arguments)]
fn effective_config(
    scenario: Option<String>,
    config: Option<PathBuf>,
    set: &[String],
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    emit_plots: bool,
) -> Result<RunConfig, Failure> {
    let mut cfg = match (&config, &scenario) {
        (Some(path), _) => read_config(path).map_err(|e| Failure::Usage(e.to_string()))?,
        (None, Some(s)) => RunConfig::new(s),
        (None, None) => return Err(Failure::Usage("a scenario or --config is required".into())),
    };
    if let Some(s) = scenario {
        cfg.scenario = s;
    }
    for kv in set {
        cfg.set(kv).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    cfg.seed = seed.or(cfg.seed);
    cfg.workers = match workers.or(cfg.workers) {
        Some(w) => Some(w),
        None => env_workers()?,
    };
    cfg.emit_plots |= emit_plots;
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if !preset_names().any(|p| p == cfg.scenario) {
        let known = preset_names().collect::<Vec<_>>().join(", ");
        return Err(Failure::Usage(format!("unknown scenario `{}` (known: {known})", cfg.scenario)));
    }
    Ok(cfg)
}

fn run(cfg: &RunConfig) -> Result<bool, Failure> {
    let result = with_workers(cfg.workers, || run_experiment(&cfg.scenario, &cfg.overrides()));
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            if let Error::Cfl { dt, bound } = e.root() {
                let _ = write_events(&cfg.out_dir, &[Event::CflRejection { dt: *dt, bound: *bound }]);
            }
            return Err(e.into());
        }
    };
    let written = write_run(&cfg.out_dir, cfg, &report)?;
    for v in &report.verdicts {
        println!(
            "{} {}: {} = {:e} ({} {:e})",
            if v.passed { "pass" } else { "FAIL" },
            v.name,
            v.metric,
            v.observed,
            v.comparison.symbol(),
            v.tolerance
        );
    }
    println!("wrote {} files to {}", written.len(), cfg.out_dir.display());
    Ok(report.passed())
}

fn verify(workers: Option<usize>) -> Result<bool, Failure> {
    let workers = match workers {
        Some(w) => Some(w),
        None => env_workers()?,
    };
    let outcomes = with_workers(workers, || run_acceptance(|o| println!("{}", o.line())));
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    Ok(passed == outcomes.len())
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            set,
            out,
            seed,
            workers,
            emit_plots,
        } => run(&effective_config(scenario, config, &set, out, seed, workers, emit_plots)?),
        Command::Verify { workers } => verify(workers),
        Command::Inspect { checkpoint } => {
            let c = read_checkpoint(&checkpoint)?;
            println!("{}: {}", checkpoint.display(), c.describe());
            Ok(true)
        }
        Command::List => {
            for p in preset_names() {
                println!("{p}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
