use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use cdforge_harness::{experiments, ExperimentConfig, ExperimentKind, HarnessError};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "cdforge", version, about = "Counterdiabatic driving experiments on transverse-field Ising chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Final defect density against quench rate, bare and with each ansatz.
    KzSweep(Args),
    /// Infidelity and amplitude flow along a cubic ramp.
    StatePrep(Args),
    /// Variational fit at a single field and rate.
    SolveAux(Args),
    /// Experimental resource counts.
    Resources(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Dotted-path override, e.g. numerics.dt=1e-4. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("CDFORGE_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (kind, args) = match cli.command {
        Command::KzSweep(a) => (ExperimentKind::KzSweep, a),
        Command::StatePrep(a) => (ExperimentKind::StatePrep, a),
        Command::SolveAux(a) => (ExperimentKind::SolveAux, a),
        Command::Resources(a) => (ExperimentKind::Resources, a),
    };
    match execute(kind, args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cdforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: ExperimentKind, args: Args) -> Result<u8, HarnessError> {
    let config = ExperimentConfig::load(&args.config, &args.overrides)?.resolve(kind)?;
    let dir = args.out.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start the thread pool: {e}")))?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let report = pool.install(|| experiments::run(kind, &config))?;
    for path in report.write(&dir, started, clock.elapsed())? {
        println!("{}", path.display());
    }
    for f in &report.failures {
        eprintln!("cdforge: cell {} failed: {}", f.cell, f.message);
    }
    Ok(report.exit_code() as u8)
}
