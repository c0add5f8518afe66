use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use augsgd_core::harness::gradcheck::{grad_check, EXIT_THRESHOLD};
use augsgd_core::harness::{self, report, ExperimentConfig};

#[derive(Parser)]
#[command(name = "augsgd", version, about = "Bounded stochastic gradient descent for acyclic neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train with the augmented update, or plain back-propagation with --classical.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        classical: bool,
        /// Output directory; falls back to `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare back-propagation with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarise diagnostics files.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value = "summary.json")]
        out: PathBuf,
    },
    /// Print the certified constants for a config.
    Certify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(cfg.with_env_seed()?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config, classical, out } => {
            let cfg = load(&config)?;
            let Some(out) = out.or_else(|| cfg.out.clone()) else {
                bail!("no output directory: pass --out or set `out` in the config");
            };
            let outcome = if classical { harness::train_classical(&cfg)? } else { harness::train_augmented(&cfg)? };
            outcome.write_artifacts(&out)?;
            let s = &outcome.diagnostics.summary;
            println!("mode        {:?}", outcome.mode);
            println!("steps       {}", s.steps);
            println!("max |λ_k|   {}", s.max_x_norm);
            if let Some(m) = s.min_margin {
                println!("R1          {}", outcome.bounds.r1);
                println!("min margin  {m}");
            }
            if let Some(k) = s.diverged_at {
                println!("diverged at step {k}");
            }
            if let Some(last) = outcome.diagnostics.rows.last() {
                println!("final F     {}", last.f_est);
                println!("final |∇F|  {}", last.grad_f_norm_est);
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck { instances, seed } => {
            let r = grad_check(instances, seed)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(if r.max_rel_error > EXIT_THRESHOLD { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Report { csv, out } => {
            let summary = report::report(&csv, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { config } => {
            let cfg = load(&config)?;
            let c = harness::certify(&cfg)?;
            println!("H(G)        {}", c.graph_height);
            println!("M           {}", c.m_bound);
            println!("Omega       {}", c.omega);
            println!("Theta_rho   {}", c.theta_rho);
            println!("R0          {}", c.r0);
            println!("R1          {}", c.r1);
            println!("Phi         {}", c.phi_estimate);
            println!("phi         {}", c.phi);
            Ok(ExitCode::SUCCESS)
        }
    }
}
