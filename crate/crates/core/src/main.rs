//! `scatter`: command-line driver for the forward solver, estimates and checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scatter_core::harness::{exit_code, run_subcommand, ExperimentConfig, Status};
use scatter_core::Result;

#[derive(Parser, Debug)]
#[command(name = "scatter", version, about = "Fixed-energy scattering experiments")]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Wavenumbers, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    k: Option<Vec<f64>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Potential amplitude.
    #[arg(long, global = true)]
    amplitude: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve for the field at each wavenumber and report residuals.
    Forward,
    /// Scattering amplitude over the direction set for one incident direction.
    Amplitude,
    /// Fixed incident direction dataset over directions and wavenumbers.
    Dataset,
    /// Radon profiles and the projection identities.
    Radon,
    /// Integral identities on the configured potential.
    VerifyIdentities,
    /// Decay, nu, J and T^2 estimates over the sweep.
    Estimates,
    /// Matching height eta(kappa).
    EtaCurve,
    /// nu functional over the sweep.
    NuSweep,
    /// Lower bound on the norm of T^2 over the sweep.
    T2Norm,
    /// J integral and its bound over the sweep.
    JIntegral,
    /// Reconstruct the potential from solver data.
    Invert,
    /// Run the numbered certification checks.
    AllChecks,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Amplitude => "amplitude",
            Command::Dataset => "dataset",
            Command::Radon => "radon",
            Command::VerifyIdentities => "verify-identities",
            Command::Estimates => "estimates",
            Command::EtaCurve => "eta-curve",
            Command::NuSweep => "nu-sweep",
            Command::T2Norm => "t2-norm",
            Command::JIntegral => "j-integral",
            Command::Invert => "invert",
            Command::AllChecks => "all-checks",
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.n {
        cfg.grid.n = n;
    }
    if let Some(k) = &cli.k {
        cfg.sweep.k = k.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(a) = cli.amplitude {
        cfg.potential.amplitude = a;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = build_config(&cli).and_then(|cfg| run_subcommand(cli.command.name(), &cfg));
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
