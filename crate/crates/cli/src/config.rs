//! The resolved run configuration.
//!
//! A [`RunConfig`] is everything that determines the output of a run: the
//! command with its grids, the model, the seed and the Monte Carlo settings.
//! The worker count is deliberately absent because results do not depend on
//! it. Every artifact embeds the config, and `--config` replays it.

use cbi_core::MutationMeasure;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Version of the config and summary layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Invalid or unreadable configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// One subcommand with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandArgs {
    ValidateMeasure {},
    Laplace { lambda: Vec<f64> },
    Tmrca { t: Vec<f64> },
    MrcaType { t: Vec<f64>, q: Vec<f64> },
    Bottleneck {},
    SamplePopulation { include_young: bool },
    Families { s: Vec<f64> },
    Ancestors { s: f64, points: Vec<[f64; 3]> },
    Fluctuations { s: Vec<f64>, points: Vec<[f64; 3]> },
    StableReport {},
}

impl CommandArgs {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ValidateMeasure {} => "validate-measure",
            Self::Laplace { .. } => "laplace",
            Self::Tmrca { .. } => "tmrca",
            Self::MrcaType { .. } => "mrca-type",
            Self::Bottleneck {} => "bottleneck",
            Self::SamplePopulation { .. } => "sample-population",
            Self::Families { .. } => "families",
            Self::Ancestors { .. } => "ancestors",
            Self::Fluctuations { .. } => "fluctuations",
            Self::StableReport {} => "stable-report",
        }
    }

    /// Whether the command itself draws Monte Carlo replicas.
    pub fn simulates(&self) -> bool {
        matches!(
            self,
            Self::Bottleneck {}
                | Self::SamplePopulation { .. }
                | Self::Families { .. }
                | Self::Ancestors { .. }
                | Self::Fluctuations { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: CommandArgs,
    pub measure: MutationMeasure,
    pub beta: f64,
    pub seed: u64,
    pub replicas: u64,
    /// Age truncation of population draws.
    pub s_min: f64,
    /// Jump cutoff of gamma-measure draws for continuous measures.
    pub epsilon: f64,
    /// Compare every estimate with its oracle and fail on a mismatch.
    pub self_check: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
    }

    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be positive and finite, got {}", self.beta));
        }
        if !(self.s_min > 0.0 && self.s_min.is_finite()) {
            return fail(format!("s_min must be positive and finite, got {}", self.s_min));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive and finite, got {}", self.epsilon));
        }
        if (self.command.simulates() || self.self_check) && self.replicas < 2 {
            return fail("at least 2 replicas are needed");
        }
        let positive = |name: &str, xs: &[f64]| -> Result<(), ConfigError> {
            if xs.is_empty() {
                return fail(format!("{name} needs at least one value"));
            }
            match xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                Some(x) => fail(format!("{name} values must be positive and finite, got {x}")),
                None => Ok(()),
            }
        };
        match &self.command {
            CommandArgs::Laplace { lambda } => {
                if lambda.is_empty() || lambda.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                    return fail("lambda values must be nonnegative, finite and at least one");
                }
            }
            CommandArgs::Tmrca { t } => positive("t", t)?,
            CommandArgs::MrcaType { t, q } => {
                positive("t", t)?;
                if !self.measure.is_atomic() {
                    positive("q", q)?;
                }
            }
            CommandArgs::Families { s } => positive("s", s)?,
            CommandArgs::Ancestors { s, points } => {
                positive("s", &[*s])?;
                if self.s_min >= *s {
                    return fail(format!("s_min = {} must be below s = {s}", self.s_min));
                }
                check_points(points)?;
            }
            CommandArgs::Fluctuations { s, points } => {
                positive("s", s)?;
                if s.windows(2).any(|w| w[1] >= w[0]) {
                    return fail("the s-grid of fluctuations must be strictly decreasing");
                }
                if s.iter().any(|&x| self.s_min >= x) {
                    return fail(format!("s_min = {} must be below every s", self.s_min));
                }
                check_points(points)?;
            }
            CommandArgs::StableReport {} => {
                if !matches!(self.measure, MutationMeasure::Stable { .. }) {
                    return fail("stable-report needs a stable measure");
                }
            }
            CommandArgs::ValidateMeasure {} | CommandArgs::Bottleneck {} | CommandArgs::SamplePopulation { .. } => {}
        }
        Ok(())
    }
}

fn check_points(points: &[[f64; 3]]) -> Result<(), ConfigError> {
    if points.is_empty() {
        return fail("at least one (rho, lambda, eta) point is needed");
    }
    for p in points {
        if p.iter().any(|x| !x.is_finite()) || p[1] < 0.0 || p[2] < 0.0 {
            return fail(format!("point {p:?}: lambda and eta must be nonnegative and all entries finite"));
        }
    }
    Ok(())
}

/// Parses "rho,lambda,eta".
pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected three comma-separated numbers, got {}", v.len()))
}

pub fn load_measure(path: &Path) -> Result<MutationMeasure, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read measure {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("measure {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(command: CommandArgs) -> RunConfig {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            command,
            measure: MutationMeasure::dirac(1.0, 1.0).unwrap(),
            beta: 1.0,
            seed: 1,
            replicas: 100,
            s_min: 1e-3,
            epsilon: 1e-4,
            self_check: false,
        }
    }

    #[test]
    fn roundtrip_and_unknown_keys() {
        let c = base(CommandArgs::Laplace { lambda: vec![0.0, 1.5] });
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        let extra = text.replacen('{', "{\"bogus\":1,", 1);
        assert!(serde_json::from_str::<RunConfig>(&extra).is_err());
        let inner = text.replace("\"lambda\":", "\"bogus\":1,\"lambda\":");
        assert!(serde_json::from_str::<RunConfig>(&inner).is_err());
    }

    #[test]
    fn validation() {
        assert!(base(CommandArgs::Tmrca { t: vec![0.5] }).validate().is_ok());
        assert!(base(CommandArgs::Tmrca { t: vec![] }).validate().is_err());
        assert!(base(CommandArgs::Tmrca { t: vec![-1.0] }).validate().is_err());
        assert!(base(CommandArgs::Ancestors { s: 1e-4, points: vec![[1.0, 1.0, 1.0]] }).validate().is_err());
        assert!(base(CommandArgs::Fluctuations { s: vec![0.1, 0.2], points: vec![[1.0, 1.0, 1.0]] })
            .validate()
            .is_err());
        assert!(base(CommandArgs::StableReport {}).validate().is_err());
        let mut c = base(CommandArgs::Bottleneck {});
        c.replicas = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn points() {
        assert_eq!(parse_point("1, 0.5,2").unwrap(), [1.0, 0.5, 2.0]);
        assert!(parse_point("1,2").is_err());
        assert!(parse_point("a,b,c").is_err());
    }
}
