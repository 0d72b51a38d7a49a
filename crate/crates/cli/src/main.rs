use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tfsample_cli::config::ExperimentConfig;
use tfsample_cli::experiments::{run_certify, run_montecarlo, run_reconstruct, run_spectrum, run_witness, RunError};
use tfsample_cli::report::OutputDir;

/// Relevant sampling of the discrete STFT: canned experiments.
#[derive(Debug, Parser)]
#[command(name = "tfsample", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// TOML experiment config; the L = 480 disk experiment if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `master_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Size of the worker pool (all cores if omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the `V_N` eigenvectors (and reconstructed test functions) as
    /// TFRS signal files.
    #[arg(long, global = true)]
    emit_eigenvectors: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Verb {
    /// Localization operator spectrum, N at gamma, eigenvalue-count interval.
    Spectrum,
    /// Least-squares reconstruction of concentrated test functions.
    Reconstruct,
    /// Monte Carlo validation of the tail bounds over a (nu, r) grid.
    Montecarlo,
    /// Sampling-inequality constants for one draw, checked on a batch.
    Certify,
    /// Non-linearity and equal-samples witnesses.
    Witness,
}

fn run(cli: &Cli) -> Result<bool, RunError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(tfsample_cli::config::ConfigError::new("--threads", "must be at least 1").into());
        }
        // fails only if the pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = OutputDir::create(&cli.out)?;
    let outcome = match cli.verb {
        Verb::Spectrum => run_spectrum(&cfg, &out, cli.emit_eigenvectors)?,
        Verb::Reconstruct => run_reconstruct(&cfg, &out, cli.emit_eigenvectors)?,
        Verb::Montecarlo => run_montecarlo(&cfg, &out)?,
        Verb::Certify => run_certify(&cfg, &out)?,
        Verb::Witness => run_witness(&cfg, &out)?,
    };
    let mut report = outcome.report;
    report.write(&out)?;
    print!("{}", report.summary_text());
    Ok(!outcome.numerical_failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: a numerical step did not converge (see report.json)");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
