//! `needaudit`: audit treatment rates among the needy from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data validation failure,
//! 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use needaudit::{AuditError, CiMode};

use config::{pick, require, AuditRun, BenchmarkRun, FileConfig, FitSettings, GenerateRun, SimulateRun};

/// Invalid flags or configuration values.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "needaudit", version, about = "Bounds on the treatment rate among the needy")]
struct Cli {
    /// TOML file with default values for any flag (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-group bounds over a gamma grid and compare groups.
    Audit(AuditArgs),
    /// Coverage experiment on synthetic data with a known rate.
    Simulate(SimulateArgs),
    /// Compute gamma' for an observed binary covariate.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic frame plus its latent outcomes.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    folds: Option<usize>,
    /// Nuisance predictions are clipped into [clip, 1 - clip].
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated group ids (default: every group in the input).
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<u32>>,
    /// Comma-separated covariate columns (default: every `x<N>` column).
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    #[arg(long)]
    gamma_min: Option<f64>,
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long)]
    gamma_step: Option<f64>,
    /// joint-minmax or per-term-union.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<CiMode>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n_pre: Option<usize>,
    #[arg(long)]
    n_post: Option<usize>,
    #[arg(long)]
    gamma_true: Option<f64>,
    /// Gamma at which intervals are evaluated (default: gamma-true).
    #[arg(long)]
    gamma: Option<f64>,
    /// Treatment-score offset of the simulated group.
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<f64>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Name of the binary covariate column.
    #[arg(long)]
    z_column: Option<String>,
    /// Report this quantile of the per-row ratios instead of the maximum.
    #[arg(long)]
    quantile: Option<f64>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n_pre: Option<usize>,
    #[arg(long)]
    n_post: Option<usize>,
    #[arg(long)]
    gamma_true: Option<f64>,
    /// Comma-separated treatment-score offsets, one per group.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offsets: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<CiMode, String> {
    match s {
        "joint-minmax" | "joint" => Ok(CiMode::JointMinmax),
        "per-term-union" | "union" => Ok(CiMode::PerTermUnion),
        other => Err(format!("unknown mode '{other}' (joint-minmax | per-term-union)")),
    }
}

fn fit_settings(a: FitArgs, f: &FileConfig) -> FitSettings {
    FitSettings {
        folds: pick(a.folds, f.folds, 5),
        clip: pick(a.clip, f.clip, 1e-3),
        l2: pick(a.l2, f.l2, 1e-4),
        seed: pick(a.seed, f.seed, 0),
        level: pick(a.level, f.level, 0.95),
    }
}

fn out_dir(a: &mut FitArgs, f: &FileConfig) -> PathBuf {
    pick(a.out_dir.take(), f.out_dir.clone(), PathBuf::from("."))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Audit(mut a) => {
            let out_dir = out_dir(&mut a.fit, &file);
            let run = AuditRun {
                input: require(a.input, file.input.clone(), "input")?,
                groups: a.groups.or(file.groups.clone()),
                covariates: a.covariates.or(file.covariates.clone()),
                gamma_min: pick(a.gamma_min, file.gamma_min, 1.0),
                gamma_max: pick(a.gamma_max, file.gamma_max, 1.5),
                gamma_step: pick(a.gamma_step, file.gamma_step, 0.01),
                mode: pick(a.mode, file.mode, CiMode::JointMinmax),
                fit: fit_settings(a.fit, &file),
                out_dir,
            };
            commands::audit(&run)
        }
        Command::Simulate(mut a) => {
            let out_dir = out_dir(&mut a.fit, &file);
            let gamma_true = pick(a.gamma_true, file.gamma_true, 1.5);
            let run = SimulateRun {
                trials: pick(a.trials, file.trials, 100),
                n_pre: pick(a.n_pre, file.n_pre, 2000),
                n_post: pick(a.n_post, file.n_post, 2000),
                gamma_true,
                gamma: pick(a.gamma, file.gamma, gamma_true),
                offset: pick(a.offset, file.offsets.as_ref().and_then(|o| o.first().copied()), -1.0),
                fit: fit_settings(a.fit, &file),
                out_dir,
            };
            commands::simulate(&run)
        }
        Command::Benchmark(mut a) => {
            let out_dir = out_dir(&mut a.fit, &file);
            let run = BenchmarkRun {
                input: require(a.input, file.input.clone(), "input")?,
                covariates: a.covariates.or(file.covariates.clone()),
                z_column: require(a.z_column, file.z_column.clone(), "z-column")?,
                quantile: a.quantile.or(file.quantile),
                fit: fit_settings(a.fit, &file),
                out_dir,
            };
            commands::benchmark(&run)
        }
        Command::Generate(a) => {
            let run = GenerateRun {
                n_pre: pick(a.n_pre, file.n_pre, 20_000),
                n_post: pick(a.n_post, file.n_post, 20_000),
                gamma_true: pick(a.gamma_true, file.gamma_true, 1.5),
                offsets: pick(a.offsets, file.offsets.clone(), vec![-1.0]),
                seed: pick(a.seed, file.seed, 0),
                out_dir: pick(a.out_dir, file.out_dir.clone(), PathBuf::from(".")),
            };
            commands::generate_frame(&run)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<AuditError>() {
        Some(AuditError::Config(_)) => 1,
        Some(AuditError::Io(_)) => 2,
        Some(e) if e.is_data_error() => 2,
        Some(_) => 3,
        // Output-side I/O and serialization problems.
        None => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
