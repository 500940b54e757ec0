//! `formation` command-line tool: design, simulate, analyze and sweep
//! formation-control scenarios described by TOML files or bundled presets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::AnalyzeOptions;
use config::{Overrides, ScenarioConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "formation", version, about = "Disturbance-rejecting formation control: design, simulation, analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the design procedure and print the report.
    Design {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also write design.toml into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Design, simulate and write trace, center and summary files.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write a matplotlib script (plot.py).
        #[arg(long)]
        plot: bool,
    },
    /// Recompute the center decomposition and observer residuals of a trace.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        /// Sidecar metadata; defaults to <trace stem>.meta.toml.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Tolerance on the center residual.
        #[arg(long, default_value_t = 1e-2)]
        eps: f64,
        /// Only samples at or after this time count towards the check.
        #[arg(long, default_value_t = 0.0)]
        t_check: f64,
        /// Output directory; defaults to the trace's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate once per observer bandwidth.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated bandwidths.
        #[arg(long, value_delimiter = ',', required = true)]
        sigma: Vec<f64>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Print a bundled scenario as a config file.
    Preset { name: String },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Scenario TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled scenario name.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub lambda2_override: Option<f64>,
    #[arg(long)]
    pub eps_f: Option<f64>,
}

impl ScenarioArgs {
    pub fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.source.config, &self.source.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => return Err(CliError::Config("one of --config or --preset is required".into())),
        };
        cfg.apply(&Overrides {
            dt: self.dt,
            horizon: self.horizon,
            lambda2_override: self.lambda2_override,
            eps_f: self.eps_f,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Executes a parsed command and returns what should go to stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Design { scenario, out } => commands::design_command(&scenario.load()?, out.as_deref()),
        Command::Simulate { scenario, out, plot } => commands::simulate_command(&scenario.load()?, &out, plot),
        Command::Analyze { trace, meta, eps, t_check, out } => {
            commands::analyze_command(&AnalyzeOptions { trace, meta, eps, t_check, out })
        }
        Command::Sweep { scenario, sigma, out } => commands::sweep_command(&scenario.load()?, &sigma, &out),
        Command::Preset { name } => ScenarioConfig::preset(&name)?.to_toml(),
    }
}
