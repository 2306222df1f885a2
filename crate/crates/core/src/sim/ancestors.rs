//! Joint draws of (Z_{−s}, N_s, M_s, Z₀, W_s).
//!
//! The population at time −s is drawn with its young mass included, so it is
//! exact in law. A piece (θ, y) at −s has K ~ Poisson(y·c^θ(s)) ancestors of
//! the time-0 population (its surviving excursions), each contributing an
//! exponential mass of mean Δ^θ_s at time 0. Families founded in (−s, 0) add
//! a gamma-measure mass at horizon s. M_s = ΣK is then Poisson(W_s) given the
//! population, with W_s = Σ y·c^θ(s).
//!
//! N_s counts tracked families (older than s_min at −s) with K > 0, so its
//! mean is Λ(s + s_min) rather than Λ(s); the gap is reported.

use crate::analytics::StationaryModel;
use crate::error::{check, positive, Result};
use crate::kernel::{c_raw, delta_raw, gamma_sum, poisson};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gamma_measure::GammaMeasureSampler;
use super::population::{PopulationOptions, PopulationSampler};

/// One joint draw at lag s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncestorSample {
    pub s: f64,
    pub z_minus_s: f64,
    /// Tracked families at −s with descendants at 0.
    pub ns: u64,
    /// Number of time-(−s) ancestors of the time-0 population.
    pub ms: u64,
    pub z0: f64,
    /// Conditional mean of M_s given the population at −s.
    pub ws: f64,
}

/// Reusable sampler at a fixed (s, s_min).
#[derive(Debug, Clone)]
pub struct AncestorSampler {
    beta: f64,
    s: f64,
    population: PopulationSampler,
    newcomers: GammaMeasureSampler,
    ns_bias: f64,
}

impl AncestorSampler {
    pub fn new(model: &StationaryModel, s: f64, s_min: f64, opts: PopulationOptions) -> Result<Self> {
        positive("s", s)?;
        check("s_min", s_min, s_min > 0.0 && s_min < s)?;
        let opts = PopulationOptions { include_young: true, ..opts };
        Ok(Self {
            beta: model.beta(),
            s,
            population: PopulationSampler::new(model, s_min, opts)?,
            newcomers: GammaMeasureSampler::new(model, s, opts.epsilon)?,
            ns_bias: model.lambda_of_s(s)?.value - model.lambda_of_s(s + s_min)?.value,
        })
    }

    /// Λ(s) − E[N_s] = Λ(s) − Λ(s + s_min).
    pub fn ns_bias(&self) -> f64 {
        self.ns_bias
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AncestorSample {
        let pop = self.population.sample(rng);
        let (beta, s) = (self.beta, self.s);
        let mut out = AncestorSample { s, z_minus_s: 0.0, ns: 0, ms: 0, z0: 0.0, ws: 0.0 };
        let mut piece = |theta: f64, y: f64, out: &mut AncestorSample| {
            let mean = y * c_raw(theta, beta, s);
            let k = poisson(rng, mean);
            out.z_minus_s += y;
            out.ws += mean;
            out.ms += k;
            out.z0 += gamma_sum(rng, k, delta_raw(theta, beta, s));
            k
        };
        for f in &pop.families {
            if piece(f.theta, f.mass, &mut out) > 0 {
                out.ns += 1;
            }
        }
        for &(theta, y) in &pop.young {
            piece(theta, y, &mut out);
        }
        out.z0 += self.newcomers.sample_total(rng);
        out
    }
}

/// One joint draw at lag s with population truncation s_min.
pub fn evolve_and_count<R: Rng + ?Sized>(
    model: &StationaryModel,
    s: f64,
    s_min: f64,
    rng: &mut R,
) -> Result<AncestorSample> {
    Ok(AncestorSampler::new(model, s, s_min, PopulationOptions::default())?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BranchingParams;
    use crate::measure::MutationMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn joint_transform_and_counts() {
        let m = StationaryModel::new(BranchingParams::new(1.0).unwrap(), MutationMeasure::dirac(1.0, 1.0).unwrap())
            .unwrap();
        let a = AncestorSampler::new(&m, 0.5, 1e-4, PopulationOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 50_000;
        let xs: Vec<AncestorSample> = (0..n).map(|_| a.sample(&mut rng)).collect();
        let lt = xs.iter().map(|x| (-x.z_minus_s - x.z0 - x.ms as f64).exp()).sum::<f64>() / n as f64;
        let exact = m.joint_laplace_zzm(0.5, 1.0, 1.0, 1.0).unwrap().value;
        assert!((lt - exact).abs() < 0.005, "{lt} vs {exact}");
        let ns = xs.iter().map(|x| x.ns as f64).sum::<f64>() / n as f64;
        let lam = m.lambda_of_s(0.5).unwrap().value - a.ns_bias();
        assert!((ns - lam).abs() < 4.0 * (lam / n as f64).sqrt(), "{ns} vs {lam}");
        // Both Z_{−s} and Z₀ are stationary with mean 1.
        for z in [xs.iter().map(|x| x.z_minus_s).sum::<f64>(), xs.iter().map(|x| x.z0).sum::<f64>()] {
            assert!((z / n as f64 - 1.0).abs() < 0.015);
        }
    }
}
