use clap::{Parser, Subcommand};
use photon_povm::cli_io::{
    run_coincidence, run_kernel_compare, run_povm_check, run_simulate, run_wavefunction, CliError,
    ExperimentConfig, RunReport,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Photon counting on a discrete mode lattice: measurement-operator
/// diagnostics, kernel comparisons, and seeded detection sampling.
#[derive(Parser)]
#[command(name = "photon-povm", version, about)]
struct Cli {
    /// Path to the key=value experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override run.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override run.trials from the config.
    #[arg(long, global = true)]
    trials: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Completeness residuals and per-element Hermiticity/positivity.
    PovmCheck,
    /// Exact vs first-order kernel over a bandwidth sweep; fits the delay.
    KernelCompare,
    /// Sample one-photon detections and compare to exact probabilities.
    Simulate,
    /// Two-photon pixel-pair probabilities and sampled coincidences.
    Coincidence,
    /// Dump the wave function on a detector-plane lattice.
    Wavefunction,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(CliError::config("run.trials must be positive"));
        }
        config.trials = trials;
    }
    Ok(config)
}

fn dispatch(cli: &Cli, config: &ExperimentConfig) -> Result<RunReport, CliError> {
    match cli.command {
        Command::PovmCheck => run_povm_check(config, &cli.out),
        Command::KernelCompare => run_kernel_compare(config, &cli.out),
        Command::Simulate => run_simulate(config, &cli.out),
        Command::Coincidence => run_coincidence(config, &cli.out),
        Command::Wavefunction => run_wavefunction(config, &cli.out),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PHOTON_POVM_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // ignore "already initialized" from repeated setup
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: PHOTON_POVM_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }

    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match dispatch(&cli, &config) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            for file in &report.files {
                println!("wrote {}", file.display());
            }
            if report.passed {
                println!("result: pass");
                ExitCode::SUCCESS
            } else {
                println!("result: fail");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
