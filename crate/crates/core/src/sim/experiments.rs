//! Replicated experiments comparing simulated statistics with their laws.
//!
//! Replica i of every experiment uses stream i of the seed, so reports are
//! reproducible for any worker count. Experiments over an s-grid reuse the
//! same seed at every s; with a common `s_min` the population draws are then
//! shared across the grid (common random numbers).

use crate::analytics::{fluctuation_condition, stable_constants, StationaryModel};
use crate::error::{check, Error, Result};
use crate::measure::MutationMeasure;
use crate::stats::{chi_square_poisson, dominance, median_interval, quantile_grid, ChiSquareReport, McSummary};
use serde::{Deserialize, Serialize};

use super::ancestors::{AncestorSample, AncestorSampler};
use super::gamma_measure::{GammaMeasureSampler, DEFAULT_EPSILON};
use super::genealogy::TmrcaSampler;
use super::population::{PopulationOptions, PopulationSampler};
use super::rng::run_replicas;

/// Replication settings shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub seed: u64,
    pub replicas: u64,
    /// Worker threads; `None` uses all available cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Age truncation of population draws.
    pub s_min: f64,
    /// Jump cutoff of gamma-measure draws for continuous μ.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl RunSettings {
    pub fn new(seed: u64, replicas: u64, s_min: f64) -> Self {
        Self { seed, replicas, workers: None, s_min, epsilon: DEFAULT_EPSILON }
    }

    fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::Config("at least 2 replicas are needed".into()));
        }
        check("s_min", self.s_min, self.s_min > 0.0 && self.s_min.is_finite())?;
        check("epsilon", self.epsilon, self.epsilon > 0.0 && self.epsilon.is_finite())?;
        Ok(())
    }

    fn population(&self, include_young: bool) -> PopulationOptions {
        PopulationOptions { include_young, epsilon: self.epsilon, ..Default::default() }
    }
}

/// One paired bottleneck draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottleneckRow {
    pub a: f64,
    pub za: f64,
    pub z0: f64,
}

/// Report of the bottleneck experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckReport {
    pub dominance_grid: Vec<f64>,
    pub cdf_za: Vec<f64>,
    pub cdf_z0: Vec<f64>,
    /// Most negative standardized gap P(Z^A ≤ z) − P(Z₀ ≤ z) over the grid.
    pub worst_z: f64,
    /// Dominance holds within 3σ bands.
    pub dominance_holds: bool,
    pub mean_za: McSummary,
    #[serde(with = "crate::serde_ext")]
    pub mean_za_oracle: f64,
    pub mean_z0: McSummary,
    #[serde(with = "crate::serde_ext")]
    pub mean_z0_oracle: f64,
    /// Running sample means of (Z^A, Z₀) after 10, 100, ... replicas; Z₀'s
    /// keeps growing when its mean is infinite.
    pub running_means: Vec<(u64, f64, f64)>,
    pub rows: Vec<BottleneckRow>,
}

/// Paired draws of Z^A (A, then Z^A given A) and of an exact Z₀.
pub fn run_bottleneck_experiment(model: &StationaryModel, run: &RunSettings) -> Result<BottleneckReport> {
    run.validate()?;
    let tmrca = TmrcaSampler::new(model)?;
    let pop = PopulationSampler::new(model, run.s_min, run.population(true))?;
    let rows = run_replicas(run.seed, run.replicas, run.workers, |_, rng| {
        let a = tmrca.sample(rng)?;
        let za = GammaMeasureSampler::new(model, a, run.epsilon)?.sample_total(rng);
        Ok(BottleneckRow { a, za, z0: pop.sample_z0(rng) })
    })?;
    let za: Vec<f64> = rows.iter().map(|r| r.za).collect();
    let z0: Vec<f64> = rows.iter().map(|r| r.z0).collect();
    let probs: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let grid = quantile_grid(&za, &z0, &probs);
    let d = dominance(&za, &z0, &grid, 3.0);
    let mut running_means = Vec::new();
    let (mut sa, mut s0, mut next) = (0.0, 0.0, 10u64);
    for (i, r) in rows.iter().enumerate() {
        sa += r.za;
        s0 += r.z0;
        if i as u64 + 1 == next {
            running_means.push((next, sa / next as f64, s0 / next as f64));
            next *= 10;
        }
    }
    Ok(BottleneckReport {
        dominance_grid: d.grid,
        cdf_za: d.cdf_x,
        cdf_z0: d.cdf_y,
        worst_z: d.worst_z,
        dominance_holds: d.holds,
        mean_za: McSummary::from_values(za.iter().copied()),
        mean_za_oracle: model.mean_za()?.value,
        mean_z0: McSummary::from_values(z0.iter().copied()),
        mean_z0_oracle: crate::measure::mean_z(model.mu(), model.quad())?,
        running_means,
        rows,
    })
}

/// Empirical value of one fluctuation functional at one argument point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalRow {
    /// (ρ, λ, η).
    pub point: [f64; 3],
    pub empirical: McSummary,
    /// The exact transform at this lag, when finite.
    pub finite_s: Option<f64>,
    /// The limit transform E[e^{−σZ₀}], when finite.
    pub limit: Option<f64>,
}

/// Summary of (βs)^{α−1}(βsM_s − Z_{−s}) for stable μ with α ≥ 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableStatistic {
    pub mean: McSummary,
    pub variance: f64,
    pub median: f64,
    /// Order-statistic 3σ interval for the median.
    pub median_interval: (f64, f64),
    /// The limit location −h(α).
    pub oracle: f64,
    /// Mean of (T + h)²/Z₀, which tends to 1 at α = 1/2.
    pub residual_ratio: McSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRow {
    pub s: f64,
    pub functionals: Vec<FunctionalRow>,
    pub stable: Option<StableStatistic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationReport {
    /// Whether the generic fluctuation conditions hold for μ.
    pub condition_holds: bool,
    pub s_min: f64,
    pub rows: Vec<FluctuationRow>,
}

/// The functional E[exp(−ρZ_{−s} − λX − ηY)] with X = (Z₀ − Z_{−s})/√(βs)
/// and Y = (βsM_s − Z_{−s})/√(βs).
pub fn fluctuation_functional(x: &AncestorSample, beta: f64, point: [f64; 3]) -> f64 {
    let r = (beta * x.s).sqrt();
    let [rho, lambda, eta] = point;
    let arg = rho * x.z_minus_s
        + lambda * (x.z0 - x.z_minus_s) / r
        + eta * (beta * x.s * x.ms as f64 - x.z_minus_s) / r;
    (-arg).exp()
}

/// Draws (Z_{−s}, Z₀, M_s) on an s-grid and compares the fluctuation
/// functionals with their exact finite-lag and limiting values.
pub fn run_fluctuation_experiment(
    model: &StationaryModel,
    s_grid: &[f64],
    points: &[[f64; 3]],
    run: &RunSettings,
) -> Result<FluctuationReport> {
    run.validate()?;
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("the s-grid must be nonempty and decreasing".into()));
    }
    if run.s_min >= s_grid[s_grid.len() - 1] {
        return Err(Error::Config("s_min must be below every s of the grid".into()));
    }
    let beta = model.beta();
    let stable = match model.mu() {
        MutationMeasure::Stable { c, alpha } if *alpha >= 0.5 => {
            Some((*alpha, stable_constants(*c, *alpha, model.params(), model.quad())?.h()?))
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for &s in s_grid {
        let sampler = AncestorSampler::new(model, s, run.s_min, run.population(true))?;
        let draws = run_replicas(run.seed, run.replicas, run.workers, |_, rng| Ok(sampler.sample(rng)))?;
        let functionals = points
            .iter()
            .map(|&p| {
                let [rho, lambda, eta] = p;
                FunctionalRow {
                    point: p,
                    empirical: McSummary::from_values(draws.iter().map(|x| fluctuation_functional(x, beta, p))),
                    finite_s: model.fluctuation_laplace(s, rho, lambda, eta).ok().map(|e| e.value),
                    limit: model.fluctuation_limit_laplace(rho, lambda, eta).ok().map(|e| e.value),
                }
            })
            .collect();
        let stable = match stable {
            Some((alpha, h)) => {
                let bs = beta * s;
                let t: Vec<f64> =
                    draws.iter().map(|x| bs.powf(alpha - 1.0) * (bs * x.ms as f64 - x.z_minus_s)).collect();
                let mean = McSummary::from_values(t.iter().copied());
                let (median, lo, hi) = median_interval(&t, 3.0)?;
                let residual_ratio = McSummary::from_values(
                    t.iter().zip(&draws).filter(|(_, x)| x.z0 > 0.0).map(|(t, x)| (t + h).powi(2) / x.z0),
                );
                Some(StableStatistic {
                    variance: mean.std_error.powi(2) * mean.n as f64,
                    mean,
                    median,
                    median_interval: (lo, hi),
                    oracle: -h,
                    residual_ratio,
                })
            }
            None => None,
        };
        rows.push(FluctuationRow { s, functionals, stable });
    }
    Ok(FluctuationReport { condition_holds: fluctuation_condition(model.mu())?, s_min: run.s_min, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCountRow {
    pub s: f64,
    /// Λ(s).
    pub lambda: f64,
    pub count: McSummary,
    pub variance: f64,
    pub goodness_of_fit: ChiSquareReport,
    /// Mean and relative spread of N_s/Λ(s).
    pub ratio: McSummary,
    pub ratio_spread: f64,
    /// s^α N_s and C₃ for stable μ.
    pub stable_scaled: Option<(McSummary, f64)>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCountReport {
    pub rows: Vec<FamilyCountRow>,
}

/// N_s, the number of families older than s at time 0, on an s-grid.
pub fn run_family_count_experiment(
    model: &StationaryModel,
    s_grid: &[f64],
    run: &RunSettings,
) -> Result<FamilyCountReport> {
    run.validate()?;
    let stable = match model.mu() {
        MutationMeasure::Stable { c, alpha } => {
            Some((*alpha, stable_constants(*c, *alpha, model.params(), model.quad())?.c3))
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for &s in s_grid {
        let pop = PopulationSampler::new(model, s, run.population(false))?;
        let lambda = pop.mean_families();
        let counts =
            run_replicas(run.seed, run.replicas, run.workers, |_, rng| Ok(pop.sample(rng).families.len() as u64))?;
        let count = McSummary::from_values(counts.iter().map(|&c| c as f64));
        let ratio = McSummary::from_values(counts.iter().map(|&c| c as f64 / lambda));
        rows.push(FamilyCountRow {
            s,
            lambda,
            variance: count.std_error.powi(2) * count.n as f64,
            goodness_of_fit: chi_square_poisson(&counts, lambda)?,
            ratio_spread: ratio.std_error * (ratio.n as f64).sqrt(),
            ratio,
            stable_scaled: stable.map(|(alpha, c3)| {
                (McSummary::from_values(counts.iter().map(|&c| s.powf(alpha) * c as f64)), c3)
            }),
            count,
            counts,
        });
    }
    Ok(FamilyCountReport { rows })
}
