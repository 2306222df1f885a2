//! `cbi`: analytic laws and seeded Monte Carlo experiments for the stationary
//! branching population with immigration of mutant families.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numerical
//! failure (quadrature or root finding), 4 budget exceeded, 5 self-check
//! mismatch.

mod commands;
mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{load_measure, parse_point, CommandArgs, ConfigError, RunConfig, SCHEMA_VERSION};
use std::path::PathBuf;
use std::process::ExitCode;

const DEFAULT_REPLICAS: u64 = 10_000;
const DEFAULT_S_MIN: f64 = 1e-3;

#[derive(Parser)]
#[command(name = "cbi", version, about = "Genealogy of a stationary branching population with mutant immigration")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Mutation measure JSON file, e.g. {"atomic":[{"theta":1,"mass":1}]} or {"stable":{"c":1,"alpha":0.5}}.
    #[arg(long, global = true)]
    measure: Option<PathBuf>,
    /// Branching rate β [default: 1].
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Master seed; replica i uses stream i [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replicas [default: 10000].
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Age truncation of population draws [default: 0.001].
    #[arg(long, global = true)]
    s_min: Option<f64>,
    /// Jump cutoff of gamma-measure draws for continuous measures [default: 0.0001].
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Directory for config.json, summary.json and the CSV table.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Compare every estimate with its oracle; exit 5 on a mismatch.
    #[arg(long, global = true)]
    self_check: bool,
    /// Replay a RunConfig (e.g. an emitted config.json) instead of model flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Admissibility report and zero-hitting verdict of a measure.
    ValidateMeasure,
    /// Laplace transform E[exp(−λZ₀)] of the stationary size.
    Laplace {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
    },
    /// Distribution function and density of the TMRCA A.
    Tmrca {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Option<Vec<f64>>,
    },
    /// Law of the MRCA type Θ given A = t.
    MrcaType {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        t: Option<Vec<f64>>,
        /// Type thresholds for the conditional CDF (continuous measures).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Option<Vec<f64>>,
    },
    /// Paired draws of the bottleneck size Z^A and the stationary size Z₀.
    Bottleneck,
    /// Population draws as family lists (birth age, type, mass).
    SamplePopulation {
        /// Add families younger than s_min as typed young pieces.
        #[arg(long)]
        include_young: bool,
    },
    /// Counts N_s of families older than s.
    Families {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        s: Option<Vec<f64>>,
    },
    /// Joint draws of (Z_{−s}, M_s, Z₀) against the joint transform.
    Ancestors {
        #[arg(long)]
        s: Option<f64>,
        /// Argument point "rho,lambda,eta"; repeatable.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Option<Vec<[f64; 3]>>,
    },
    /// Fluctuation functionals along a decreasing s-grid.
    Fluctuations {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        s: Option<Vec<f64>>,
        /// Argument point "rho,lambda,eta"; repeatable.
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        point: Option<Vec<[f64; 3]>>,
    },
    /// Constants and type laws of a stable measure.
    StableReport,
}

impl Cmd {
    /// The command with defaults filled in, and whether any parameter was given.
    fn resolve_args(self) -> (CommandArgs, bool) {
        let given;
        let args = match self {
            Cmd::ValidateMeasure => {
                given = false;
                CommandArgs::ValidateMeasure {}
            }
            Cmd::Laplace { lambda } => {
                given = lambda.is_some();
                CommandArgs::Laplace { lambda: lambda.unwrap_or_else(|| vec![0.5, 1.0, 2.0]) }
            }
            Cmd::Tmrca { t } => {
                given = t.is_some();
                CommandArgs::Tmrca { t: t.unwrap_or_else(|| vec![0.5]) }
            }
            Cmd::MrcaType { t, q } => {
                given = t.is_some() || q.is_some();
                CommandArgs::MrcaType {
                    t: t.unwrap_or_else(|| vec![0.5]),
                    q: q.unwrap_or_else(|| vec![0.05, 0.2, 0.5, 1.0, 2.0]),
                }
            }
            Cmd::Bottleneck => {
                given = false;
                CommandArgs::Bottleneck {}
            }
            Cmd::SamplePopulation { include_young } => {
                given = include_young;
                CommandArgs::SamplePopulation { include_young }
            }
            Cmd::Families { s } => {
                given = s.is_some();
                CommandArgs::Families { s: s.unwrap_or_else(|| vec![0.5]) }
            }
            Cmd::Ancestors { s, point } => {
                given = s.is_some() || point.is_some();
                CommandArgs::Ancestors {
                    s: s.unwrap_or(0.5),
                    points: point.unwrap_or_else(|| vec![[1.0, 1.0, 1.0], [0.5, 0.2, 1.5], [0.2, 1.0, 0.3]]),
                }
            }
            Cmd::Fluctuations { s, point } => {
                given = s.is_some() || point.is_some();
                CommandArgs::Fluctuations {
                    s: s.unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.02]),
                    points: point.unwrap_or_else(|| vec![[1.0, 0.5, 0.5], [1.0, 0.5, 0.0], [1.0, 0.0, 0.5]]),
                }
            }
            Cmd::StableReport => {
                given = false;
                CommandArgs::StableReport {}
            }
        };
        (args, given)
    }
}

/// Builds the run config from the flags, or loads it with `--config`.
fn resolve(common: &Common, cmd: Cmd) -> Result<RunConfig, ConfigError> {
    let (args, params_given) = cmd.resolve_args();
    if let Some(path) = &common.config {
        let model_flags = common.measure.is_some()
            || common.beta.is_some()
            || common.seed.is_some()
            || common.replicas.is_some()
            || common.s_min.is_some()
            || common.epsilon.is_some()
            || common.self_check;
        if model_flags || params_given {
            return Err(ConfigError(
                "--config replays a complete run; only --out and --workers may accompany it".into(),
            ));
        }
        let config = RunConfig::load(path)?;
        if config.command.name() != args.name() {
            return Err(ConfigError(format!(
                "config {} is for `{}`, not `{}`",
                path.display(),
                config.command.name(),
                args.name()
            )));
        }
        return Ok(config);
    }
    let path = common.measure.as_ref().ok_or_else(|| ConfigError("--measure <file> is required".into()))?;
    Ok(RunConfig {
        schema_version: SCHEMA_VERSION,
        command: args,
        measure: load_measure(path)?,
        beta: common.beta.unwrap_or(1.0),
        seed: common.seed.unwrap_or(1),
        replicas: common.replicas.unwrap_or(DEFAULT_REPLICAS),
        s_min: common.s_min.unwrap_or(DEFAULT_S_MIN),
        epsilon: common.epsilon.unwrap_or(cbi_core::sim::gamma_measure::DEFAULT_EPSILON),
        self_check: common.self_check,
    })
}

/// Raised after the artifacts are written when a self-check fails.
#[derive(Debug)]
struct SelfCheckFailed(Vec<String>);

impl std::fmt::Display for SelfCheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "self-check failed:\n  {}", self.0.join("\n  "))
    }
}

impl std::error::Error for SelfCheckFailed {}

fn run(cli: Cli) -> Result<()> {
    let config = resolve(&cli.common, cli.command)?;
    config.validate()?;
    let outcome = commands::run(&config, cli.common.workers)?;
    if let Some(dir) = &cli.common.out {
        output::write_artifacts(dir, &config, &outcome).context("writing artifacts")?;
    }
    println!("{}", outcome.summary_line(&config));
    if config.self_check {
        let passed = outcome.checks.iter().filter(|c| c.passed).count();
        eprintln!("self-check: {passed}/{} comparisons passed", outcome.checks.len());
        let failed: Vec<String> = outcome.checks.iter().filter(|c| !c.passed).map(|c| c.label.clone()).collect();
        if !failed.is_empty() {
            return Err(SelfCheckFailed(failed).into());
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<SelfCheckFailed>() {
            return 5;
        }
        if cause.is::<ConfigError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<cbi_core::Error>() {
            return match core {
                cbi_core::Error::Config(_) | cbi_core::Error::InvalidInput(_) => 2,
                cbi_core::Error::Quadrature { .. } | cbi_core::Error::RootFinding(_) => 3,
                cbi_core::Error::Budget(_) => 4,
                cbi_core::Error::Indeterminate(_) => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e:#}");
            if code == 2 {
                eprintln!("hint: see `cbi --help`; a RunConfig has the layout of the config.json written by --out");
            }
            ExitCode::from(code)
        }
    }
}
