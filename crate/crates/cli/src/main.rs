use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pleiolv::commands;
use pleiolv::{CliError, Config, Result};

#[derive(Debug, Parser)]
#[command(name = "pleiolv", version, about = "Latent variable models for family-clustered longitudinal phenotypes")]
struct Cli {
    /// INI configuration file.
    #[arg(long, global = true, env = "PLEIOLV_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed; overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for `replicate`; overrides `[run] workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one dataset and its true parameters.
    Simulate {
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Run a sampler on a dataset and write the draws.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Select phenotypes from the indicator columns of a draws file.
    Select {
        #[arg(long)]
        draws: PathBuf,
    },
    /// Log Bayes factor of a loading or covariate block by path sampling.
    Bf {
        #[arg(long)]
        data: PathBuf,
        /// `lambda:J` or `x:K[,K...]`, one-based.
        #[arg(long)]
        target: Option<String>,
    },
    /// Simulate and fit many datasets, then aggregate bias, RMSE and coverage.
    Replicate {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Autocorrelation and effective sample size of a draws file.
    Diag {
        #[arg(long)]
        draws: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.set("run", "seed", &s.to_string())?;
    }
    if let Some(w) = cli.workers {
        cfg.set("run", "workers", &w.to_string())?;
    }
    let out = cli.out;
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    match cli.command {
        Command::Simulate { scenario } => {
            if let Some(s) = scenario {
                cfg.set("simulate", "scenario", &s)?;
            }
            commands::cmd_simulate(&cfg, &out)
        }
        Command::Fit { data } => commands::cmd_fit(&cfg, &data, &out),
        Command::Select { draws } => commands::cmd_select(&cfg, &draws, &out),
        Command::Bf { data, target } => {
            if let Some(t) = target {
                cfg.set("bf", "target", &t)?;
            }
            commands::cmd_bf(&cfg, &data, &out)
        }
        Command::Replicate { scenario, count } => {
            if let Some(s) = scenario {
                cfg.set("simulate", "scenario", &s)?;
            }
            if let Some(c) = count {
                cfg.set("replicate", "count", &c.to_string())?;
            }
            commands::cmd_replicate(&cfg, &out)
        }
        Command::Diag { draws } => commands::cmd_diag(&cfg, &draws, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
