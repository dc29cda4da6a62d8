//! `cellfree`: load sweeps and scheduler comparisons from the command line.

mod commands;
mod output;

use cellfree_core::{Policy, SimConfig};
use clap::{Args, Parser, Subcommand};
use output::RunManifest;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cellfree",
    version,
    about = "Cell-free massive MIMO uplink scheduling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// All-active sum throughput for every (K, tau_p) pair.
    LoadSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutArgs,
        /// Comma-separated K_tot values.
        #[arg(long, value_delimiter = ',')]
        k_values: Option<Vec<usize>>,
        /// Comma-separated pilot lengths (default: the configured tau_p).
        #[arg(long, value_delimiter = ',')]
        tau_p_values: Option<Vec<usize>>,
    },
    /// Runs each policy, and each V for HFS and PFS, over the same topologies.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutArgs,
        /// Comma-separated policies (default: all five).
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<Policy>>,
        /// Comma-separated V values for HFS and PFS (default: the configured v).
        #[arg(long, value_delimiter = ',')]
        v_values: Option<Vec<f64>>,
    },
    /// Prints the effective configuration as TOML plus derived quantities.
    DescribeConfig {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file of config overrides.
    #[arg(long, value_name = "PATH", conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Reuse the config and value lists recorded in a previous run.
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of topologies (sweep_layouts for load-sweep).
    #[arg(long)]
    layouts: Option<usize>,
    /// Main-loop slot cap (sweep_slots for load-sweep).
    #[arg(long)]
    slots: Option<usize>,
    /// Write per-slot queue trajectories of HFS and PFS runs.
    #[arg(long)]
    trace_queues: bool,
}

#[derive(Debug, Args)]
struct OutArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    toml::from_str(&read_to_string(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_manifest(path: &Path) -> Result<RunManifest, CliError> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl Common {
    /// Defaults, then the config file or manifest, then flags.
    fn resolve(&self, sweep: bool) -> Result<(SimConfig, Option<RunManifest>), CliError> {
        let manifest = self.manifest.as_deref().map(load_manifest).transpose()?;
        let mut config = match (&manifest, &self.config) {
            (Some(m), _) => m.config.clone(),
            (None, Some(path)) => load_config(path)?,
            (None, None) => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        match (sweep, self.layouts) {
            (true, Some(n)) => config.sweep_layouts = n,
            (false, Some(n)) => config.layouts = n,
            _ => {}
        }
        match (sweep, self.slots) {
            (true, Some(n)) => config.sweep_slots = n,
            (false, Some(n)) => config.slots = n,
            _ => {}
        }
        if self.trace_queues {
            config.trace_queues = true;
        }
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok((config, manifest))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::LoadSweep {
            common,
            out,
            k_values,
            tau_p_values,
        } => {
            let (config, manifest) = common.resolve(true)?;
            let recorded = manifest.as_ref().and_then(RunManifest::sweep_plan);
            if manifest.is_some() && recorded.is_none() {
                return Err(CliError::Config("manifest was not written by load-sweep".into()));
            }
            let k_values = k_values
                .or_else(|| recorded.map(|p| p.0.clone()))
                .unwrap_or_else(|| vec![16, 32, 48, 64, 80, 96, 112, 128]);
            let tau_p_values = tau_p_values
                .or_else(|| recorded.map(|p| p.1.clone()))
                .unwrap_or_else(|| vec![config.tau_p]);
            commands::load_sweep(&config, &k_values, &tau_p_values, &out.out, out.force)
        }
        Command::Compare {
            common,
            out,
            policies,
            v_values,
        } => {
            let (config, manifest) = common.resolve(false)?;
            let recorded = manifest.as_ref().and_then(RunManifest::compare_plan);
            if manifest.is_some() && recorded.is_none() {
                return Err(CliError::Config("manifest was not written by compare".into()));
            }
            let policies = policies
                .or_else(|| recorded.map(|p| p.0.clone()))
                .unwrap_or_else(|| Policy::ALL.to_vec());
            let v_values = v_values
                .or_else(|| recorded.map(|p| p.1.clone()))
                .unwrap_or_else(|| vec![config.v]);
            commands::compare(&config, &policies, &v_values, &out.out, out.force)
        }
        Command::DescribeConfig { common } => {
            let (config, _) = common.resolve(false)?;
            print!("{}", commands::describe(&config));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
