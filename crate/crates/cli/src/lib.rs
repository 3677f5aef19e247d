//! Command-line front end for the bandit LAN laboratory.
//!
//! `run` parses arguments, builds the configuration, dispatches a
//! subcommand and maps errors to exit codes (0 ok, 1 config, 2 internal).

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod selftest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigMap;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bandit-lan", version, about = "Monte Carlo checks of local asymptotic normality in bandit experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a study and write records.csv and summary.csv.
    Simulate(CommonArgs),
    /// Expansion residuals across a ladder of horizons.
    LanCheck(CommonArgs),
    /// The four-m1 histogram grid for one policy.
    ReproduceFig(CommonArgs),
    /// Pull-count checkpoint table.
    Convergence(CommonArgs),
    /// Oracle checks of scores, Fisher information and the log-LR identities.
    Selftest,
    /// List the accepted config keys.
    Keys,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Replications per cell (study.replications).
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads; 0 uses every core. Does not affect results.
    #[arg(long, env = "BANDIT_LAN_THREADS")]
    pub threads: Option<usize>,
    /// Policy kind (policy.kind).
    #[arg(long)]
    pub policy: Option<String>,
    /// Base seed (study.base_seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon (study.T).
    #[arg(long = "T", short = 'T')]
    pub horizon: Option<usize>,
}

impl CommonArgs {
    /// Config file contents overlaid with command-line flags.
    pub fn load(&self) -> Result<ConfigMap, CliError> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                ConfigMap::parse(&text)?
            }
            None => ConfigMap::default(),
        };
        if let Some(p) = &self.policy {
            map.set("policy.kind", p.clone());
        }
        if let Some(r) = self.reps {
            map.set("study.replications", r.to_string());
        }
        if let Some(s) = self.seed {
            map.set("study.base_seed", s.to_string());
        }
        if let Some(t) = self.horizon {
            map.set("study.T", t.to_string());
        }
        Ok(map)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Messages go to stdout/stderr; the return value is the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("bandit-lan: {e}");
            e.exit_code()
        }
    }
}
