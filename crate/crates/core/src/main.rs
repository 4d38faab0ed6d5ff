use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stoch_ch::experiments::commands::{self, Outcome};
use stoch_ch::experiments::config::ConvergeAxis;
use stoch_ch::experiments::{exit_code_for_error, workers_from_env, RunConfig, EXIT_OK, EXIT_THRESHOLD};
use stoch_ch::Result;

/// Stochastic Camassa–Holm simulator and audit runner.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    config: PathBuf,
    /// Override a config key, e.g. `--set stepper.dt=1e-3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (same as `--set outputs.directory=...`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Single trajectory with ledger and snapshots.
    Simulate(Common),
    /// Monte Carlo statistics over many paths.
    Ensemble(Common),
    /// Convergence study in n, dt or the mollifier width.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Axis; overrides `converge.axis`.
        #[arg(long, value_enum)]
        axis: Option<ConvergeAxis>,
    },
    /// Twin, refinement and perturbed-data runs on a shared path.
    Uniqueness(Common),
    /// Commutator decay sweeps.
    Commutators(Common),
    /// Stochastic Gronwall check on synthetic processes.
    Gronwall(Common),
    /// Re-hash the files listed in a run manifest.
    VerifyManifest { dir: PathBuf },
}

fn load(c: &Common, extra: &[String]) -> Result<RunConfig> {
    let mut overrides = c.overrides.clone();
    if let Some(out) = &c.out {
        overrides.push(format!("outputs.directory={}", serde_json::Value::String(out.display().to_string())));
    }
    overrides.extend_from_slice(extra);
    RunConfig::from_path(&c.config, &overrides)
}

fn run(cli: Cli) -> Result<i32> {
    let outcome: Outcome = match &cli.cmd {
        Cmd::Simulate(c) => commands::simulate(&load(c, &[])?)?,
        Cmd::Ensemble(c) => commands::ensemble(&load(c, &[])?, workers_from_env()?)?,
        Cmd::Converge { common, axis } => {
            let extra: Vec<String> = axis
                .iter()
                .map(|a| format!("converge.axis={}", serde_json::to_string(a).expect("enum serializes")))
                .collect();
            commands::converge(&load(common, &extra)?, workers_from_env()?)?
        }
        Cmd::Uniqueness(c) => commands::uniqueness(&load(c, &[])?)?,
        Cmd::Commutators(c) => commands::commutators(&load(c, &[])?)?,
        Cmd::Gronwall(c) => commands::gronwall(&load(c, &[])?)?,
        Cmd::VerifyManifest { dir } => {
            let report = commands::verify(dir)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(if report.ok() { EXIT_OK } else { EXIT_THRESHOLD });
        }
    };
    if let Some(w) = outcome.summary.get("warnings").and_then(|w| w.as_array()) {
        for msg in w {
            eprintln!("warning: {}", msg.as_str().unwrap_or_default());
        }
    }
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    eprintln!("{:?}: {}", outcome.status, outcome.dir.display());
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for_error(&e) as u8)
        }
    }
}
