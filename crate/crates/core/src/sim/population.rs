//! The stationary population at time 0 as a list of families.
//!
//! Families alive at time 0 with age greater than s_min form a Poisson point
//! process with Λ(s_min) points in mean. Each point has type θ drawn from
//! ∝ −log(1 − e^{−2βθs_min})μ(dθ), age drawn by inverting the survival tail
//! T(s) = −log(1 − e^{−2βθs}) exactly, and mass Exp with mean Δ^θ_age.
//! Families younger than s_min can optionally be added as an aggregated
//! "young" gamma measure, which makes the sample exact in law.

use crate::analytics::StationaryModel;
use crate::error::{positive, Error, Result};
use crate::kernel::{delta_raw, poisson};
use crate::special::log1mexp;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::gamma_measure::{GammaMeasureSampler, DEFAULT_EPSILON};
use super::theta_sampler::ThetaSampler;

/// One family alive at time 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    /// Age of the family (time since its founding immigrant arrived).
    pub birth_age: f64,
    pub theta: f64,
    /// Mass at time 0.
    pub mass: f64,
}

/// A draw of the time-0 population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSample {
    /// Families older than `s_min`.
    pub families: Vec<FamilyRecord>,
    /// Mass of families younger than `s_min`, as (type, mass) pieces. Empty
    /// unless requested.
    pub young: Vec<(f64, f64)>,
    pub s_min: f64,
    /// Expected mass of families younger than `s_min`:
    /// 2β∫₀^{s_min}∫e^{−2βθr}μ(dθ)dr = 2∫Δ^θ_{s_min}μ(dθ).
    pub neglected_mass_mean: f64,
}

impl PopulationSample {
    /// Σ mass over the tracked families.
    pub fn family_mass(&self) -> f64 {
        self.families.iter().map(|f| f.mass).sum()
    }

    pub fn young_mass(&self) -> f64 {
        self.young.iter().map(|p| p.1).sum()
    }

    /// Z₀: family mass plus young mass (when included).
    pub fn total_mass(&self) -> f64 {
        self.family_mass() + self.young_mass()
    }

    /// The oldest family, whose age realises A on {A > s_min}.
    pub fn oldest(&self) -> Option<&FamilyRecord> {
        self.families.iter().max_by(|a, b| a.birth_age.total_cmp(&b.birth_age))
    }
}

/// Options of the population sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationOptions {
    /// Add families younger than `s_min` as an aggregated young mass.
    pub include_young: bool,
    /// Jump cutoff of the young-mass sampler for continuous μ.
    pub epsilon: f64,
    /// Largest accepted Λ(s_min).
    pub max_families: f64,
}

impl Default for PopulationOptions {
    fn default() -> Self {
        Self { include_young: false, epsilon: DEFAULT_EPSILON, max_families: 1e7 }
    }
}

/// Reusable sampler of [`PopulationSample`]s at a fixed truncation.
#[derive(Debug, Clone)]
pub struct PopulationSampler {
    beta: f64,
    s_min: f64,
    lambda: f64,
    theta: ThetaSampler,
    young: Option<GammaMeasureSampler>,
    neglected_mass_mean: f64,
}

impl PopulationSampler {
    pub fn new(model: &StationaryModel, s_min: f64, opts: PopulationOptions) -> Result<Self> {
        positive("s_min", s_min)?;
        let beta = model.beta();
        let lambda = model.lambda_of_s(s_min)?.value;
        if lambda > opts.max_families {
            return Err(Error::Budget(format!(
                "Λ(s_min = {s_min}) = {lambda:.3e} families exceeds the budget {:.1e}",
                opts.max_families
            )));
        }
        let young = if opts.include_young {
            Some(GammaMeasureSampler::new(model, s_min, opts.epsilon)?.with_pieces(model)?)
        } else {
            None
        };
        Ok(Self {
            beta,
            s_min,
            lambda,
            theta: ThetaSampler::alive(model.mu(), beta, s_min)?,
            young,
            neglected_mass_mean: model.young_mass_mean(s_min)?.value,
        })
    }

    /// Λ(s_min), the mean number of tracked families.
    pub fn mean_families(&self) -> f64 {
        self.lambda
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn neglected_mass_mean(&self) -> f64 {
        self.neglected_mass_mean
    }

    /// One family older than s_min, alive at time 0.
    pub fn sample_family<R: Rng + ?Sized>(&self, rng: &mut R) -> FamilyRecord {
        let theta = self.theta.sample(rng);
        let k = 2.0 * self.beta * theta;
        // Age has tail ∝ T(s) on (s_min, ∞); invert v = T(age).
        let v = -log1mexp(k * self.s_min) * (1.0 - rng.random::<f64>());
        let age = (-log1mexp(v) / k).max(self.s_min);
        let mass = delta_raw(theta, self.beta, age) * rng.sample::<f64, _>(Exp1);
        FamilyRecord { birth_age: age, theta, mass }
    }

    /// Z₀ of one draw (family mass plus young mass when included), without
    /// materialising the families.
    pub fn sample_z0<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = poisson(rng, self.lambda);
        let mut z: f64 = (0..n).map(|_| self.sample_family(rng).mass).sum();
        if let Some(y) = &self.young {
            z += y.sample_total(rng);
        }
        z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PopulationSample {
        let n = poisson(rng, self.lambda);
        let families = (0..n).map(|_| self.sample_family(rng)).collect();
        let mut young = Vec::new();
        if let Some(y) = &self.young {
            y.sample_pieces(rng, &mut young);
        }
        PopulationSample { families, young, s_min: self.s_min, neglected_mass_mean: self.neglected_mass_mean }
    }
}

/// One population draw with default options (families older than s_min only).
pub fn sample_population<R: Rng + ?Sized>(model: &StationaryModel, s_min: f64, rng: &mut R) -> Result<PopulationSample> {
    Ok(PopulationSampler::new(model, s_min, PopulationOptions::default())?.sample(rng))
}

/// Size-biased type: θ_i with probability mass_i / Σ mass, over the tracked
/// families and, when present, the typed young pieces.
pub fn sample_theta_star<R: Rng + ?Sized>(sample: &PopulationSample, rng: &mut R) -> Result<f64> {
    let total = sample.total_mass();
    if sample.families.is_empty() && sample.young.is_empty() || !(total > 0.0) {
        return Err(Error::InvalidInput("empty population".into()));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = f64::NAN;
    let pieces = sample.families.iter().map(|f| (f.theta, f.mass)).chain(sample.young.iter().copied());
    for (theta, mass) in pieces {
        acc += mass;
        last = theta;
        if acc > target {
            return Ok(theta);
        }
    }
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BranchingParams;
    use crate::measure::MutationMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dirac1() -> StationaryModel {
        StationaryModel::new(BranchingParams::new(1.0).unwrap(), MutationMeasure::dirac(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn family_count_and_mass() {
        let m = dirac1();
        let s = PopulationSampler::new(&m, 1e-3, PopulationOptions::default()).unwrap();
        assert!((s.mean_families() + 2.0 * log1mexp(2e-3)).abs() < 1e-9);
        // 2β∫₀^{s}e^{−2βθr}dr = −expm1(−2s)/1 for θ = β = 1.
        assert!((s.neglected_mass_mean() + (-2e-3f64).exp_m1()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let (mut count, mut mass) = (0.0, 0.0);
        for _ in 0..n {
            let p = s.sample(&mut rng);
            assert!(p.families.iter().all(|f| f.birth_age >= 1e-3 && f.mass > 0.0));
            count += p.families.len() as f64;
            mass += p.family_mass();
        }
        let (count, mass) = (count / n as f64, mass / n as f64);
        let sd = (s.mean_families() / n as f64).sqrt();
        assert!((count - s.mean_families()).abs() < 4.0 * sd);
        assert!((mass - (1.0 - s.neglected_mass_mean())).abs() < 0.03);
    }

    #[test]
    fn young_mass_completes_the_law() {
        let m = dirac1();
        let opts = PopulationOptions { include_young: true, ..Default::default() };
        let s = PopulationSampler::new(&m, 0.05, opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let lt = (0..n).map(|_| (-s.sample(&mut rng).total_mass()).exp()).sum::<f64>() / n as f64;
        assert!((lt - 1.0 / 2.25).abs() < 0.005, "{lt}");
    }

    #[test]
    fn theta_star_is_size_biased() {
        let p = PopulationSample {
            families: vec![
                FamilyRecord { birth_age: 1.0, theta: 1.0, mass: 1.0 },
                FamilyRecord { birth_age: 1.0, theta: 2.0, mass: 3.0 },
            ],
            young: vec![],
            s_min: 0.1,
            neglected_mass_mean: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let hits = (0..n).filter(|_| sample_theta_star(&p, &mut rng).unwrap() == 2.0).count() as f64 / n as f64;
        assert!((hits - 0.75).abs() < 4.0 * (0.75 * 0.25 / n as f64).sqrt());
        let empty = PopulationSample { families: vec![], ..p };
        assert!(sample_theta_star(&empty, &mut rng).is_err());
    }

    #[test]
    fn budget_guard() {
        let m = StationaryModel::new(BranchingParams::new(1.0).unwrap(), MutationMeasure::stable(1.0, 0.9).unwrap())
            .unwrap();
        let opts = PopulationOptions { max_families: 1e3, ..Default::default() };
        assert!(matches!(PopulationSampler::new(&m, 1e-6, opts), Err(Error::Budget(_))));
    }
}
