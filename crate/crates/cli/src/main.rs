//! `spikepath` — experiment runner for the spike-timing shortest-path
//! simulator.
//!
//! Exit codes: 0 success/converged, 2 not converged, 3 target unreachable,
//! 4 configuration error, 1 other failures.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, SweepSpec};

#[derive(Debug)]
pub enum CliError {
    /// Broken configuration, unknown presets, schema or hash mismatches.
    Config(String),
    /// No target reachable from the source.
    Unreachable(String),
    /// IO and internal failures.
    Failure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Unreachable(msg) | CliError::Failure(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Unreachable(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "spikepath",
    version,
    about = "Spike-timing message-passing shortest-path simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Experiment config JSON; defaults cover the reference setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the generation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Environment preset name or environment file path.
    #[arg(long)]
    env: Option<String>,
    /// Inhibition mode: global, local or none.
    #[arg(long)]
    inhibition: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl CommonOpts {
    fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut exp = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            exp.gen.seed = seed;
        }
        if let Some(env) = &self.env {
            exp.environment = env.clone();
        }
        if let Some(mode) = &self.inhibition {
            exp.inhibition = mode.parse().map_err(CliError::Config)?;
        }
        Ok(exp)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network and write network.json.
    Generate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a simulation to convergence; writes run.json, metrics.csv and
    /// optional trace/SVG artifacts.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Also write trace.jsonl with every executed event.
        #[arg(long)]
        trace: bool,
    },
    /// Check a run against the exact shortest-path oracle and the tagging
    /// induction invariant.
    Verify {
        /// Path to run.json (default <out>/run.json).
        #[arg(long)]
        run: Option<PathBuf>,
        /// Path to network.json (default <out>/network.json).
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the base experiment over a list of seeds.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated seed list; overrides the config file.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Render per-iteration SVG panels from run.json + network.json.
    Plot {
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Raster resolution (cells per axis).
        #[arg(long)]
        resolution: Option<usize>,
        /// Number of contour levels.
        #[arg(long)]
        levels: Option<usize>,
    },
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Generate { common } => {
            let exp = common.experiment()?;
            commands::cmd_generate(&exp, &common.out)
        }
        Command::Run { common, trace } => {
            let exp = common.experiment()?;
            commands::cmd_run(&exp, &common.out, trace)
        }
        Command::Verify { run, network, out } => {
            let run_path = run.unwrap_or_else(|| out.join("run.json"));
            let network_path = network.unwrap_or_else(|| out.join("network.json"));
            commands::cmd_verify(&run_path, &network_path, &out)
        }
        Command::Sweep {
            common,
            seeds,
            parallelism,
        } => {
            // A sweep file carries {base, seeds, parallelism}; a plain
            // experiment config needs seeds from the flag.
            let mut spec = match &common.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::Config(format!("cannot read config {}: {e}", path.display()))
                    })?;
                    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
                        CliError::Config(format!("invalid config {}: {e}", path.display()))
                    })?;
                    if value.get("seeds").is_some() {
                        serde_json::from_value::<SweepSpec>(value).map_err(|e| {
                            CliError::Config(format!("invalid sweep config: {e}"))
                        })?
                    } else {
                        SweepSpec {
                            base: serde_json::from_value(value).map_err(|e| {
                                CliError::Config(format!("invalid config: {e}"))
                            })?,
                            seeds: Vec::new(),
                            parallelism: 1,
                        }
                    }
                }
                None => SweepSpec {
                    base: ExperimentConfig::default(),
                    seeds: Vec::new(),
                    parallelism: 1,
                },
            };
            if let Some(seed) = common.seed {
                spec.base.gen.seed = seed;
            }
            if let Some(env) = &common.env {
                spec.base.environment = env.clone();
            }
            if let Some(mode) = &common.inhibition {
                spec.base.inhibition = mode.parse().map_err(CliError::Config)?;
            }
            if !seeds.is_empty() {
                spec.seeds = seeds;
            }
            if let Some(p) = parallelism {
                spec.parallelism = p;
            }
            commands::cmd_sweep(&spec, &common.out)
        }
        Command::Plot {
            run,
            network,
            out,
            resolution,
            levels,
        } => {
            let run_path = run.unwrap_or_else(|| out.join("run.json"));
            let network_path = network.unwrap_or_else(|| out.join("network.json"));
            commands::cmd_plot(&run_path, &network_path, &out, resolution, levels)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    };
    std::process::exit(code);
}
