//! Exact draws of (A, Θ, Z^A, Z^O, Z^I).
//!
//! A is drawn by inverting P(A < t) = e^{−Λ(t)}: an exponential E is mapped
//! to the t with Λ(t) = E, by Newton iteration in log t started from a log-log
//! table of Λ. Given A = t the triple (Z^O, Θ), Z^I, Z^A is independent:
//! Θ ∝ c^θ(t)μ(dθ), Z^O given Θ is exponential with mean Δ^Θ_t, and Z^I and
//! Z^A both have the gamma-measure law at horizon t.

use crate::analytics::StationaryModel;
use crate::error::{positive, Error, Result};
use crate::kernel::delta_raw;
use crate::measure::MutationMeasure;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use super::gamma_measure::{GammaMeasureSampler, DEFAULT_EPSILON};
use super::theta_sampler::{ThetaSampler, ThetaWeight};

/// One draw of the genealogy statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenealogySample {
    /// TMRCA.
    pub a: f64,
    /// Type of the MRCA (of the oldest family).
    pub theta: f64,
    /// Population size at time −A.
    pub za: f64,
    /// Time-0 mass of the oldest family.
    pub zo: f64,
    /// Time-0 mass of all other families.
    pub zi: f64,
}

/// Sampler of the TMRCA A.
#[derive(Debug, Clone)]
pub struct TmrcaSampler {
    model: StationaryModel,
    ln_t: Vec<f64>,
    ln_lambda: Vec<f64>,
}

impl TmrcaSampler {
    pub fn new(model: &StationaryModel) -> Result<Self> {
        let (mut ln_t, mut ln_lambda) = (Vec::new(), Vec::new());
        // From Λ ≈ 60 (P(A < t) ≈ e^{−60}) to Λ ≈ 1e−14.
        let lo = model.quantile_a((-60.0f64).exp())?;
        let hi = model.quantile_a(1.0 - 1e-14)?;
        let n = 200;
        for i in 0..=n {
            let x = lo.ln() + (hi / lo).ln() * i as f64 / n as f64;
            ln_t.push(x);
            ln_lambda.push(model.lambda_of_s(x.exp())?.value.ln());
        }
        Ok(Self { model: model.clone(), ln_t, ln_lambda })
    }

    /// The t with Λ(t) = target.
    pub fn invert(&self, target: f64) -> Result<f64> {
        positive("target", target)?;
        let y = target.ln();
        // Table is decreasing in ln t.
        let n = self.ln_t.len();
        let i = self.ln_lambda.partition_point(|&v| v > y).clamp(1, n - 1);
        let (x0, x1, y0, y1) = (self.ln_t[i - 1], self.ln_t[i], self.ln_lambda[i - 1], self.ln_lambda[i]);
        let mut x = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
        for _ in 0..60 {
            let t = x.exp();
            let lam = self.model.lambda_of_s(t)?.value;
            let rate = self.model.lambda_rate(t)?.value;
            // d ln Λ / d ln t = −t·rate/Λ.
            let step = (lam.ln() - y) / (-t * rate / lam);
            let step = step.clamp(-2.0, 2.0);
            x -= step;
            if step.abs() < 1e-12 {
                return Ok(x.exp());
            }
        }
        Err(Error::RootFinding(format!("Λ(t) = {target} did not converge (last t = {})", x.exp())))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.invert(rng.sample::<f64, _>(Exp1))
    }

    /// Θ given A = t, drawn from ∝ c^θ(t)μ(dθ).
    pub fn sample_theta_given_a<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<f64> {
        let beta = self.model.beta();
        match self.model.mu() {
            MutationMeasure::Atomic(_) => {
                let w = self.model.mrca_law().atom_weights(t)?;
                let mut u: f64 = rng.random();
                for (theta, p) in &w {
                    if u < *p {
                        return Ok(*theta);
                    }
                    u -= p;
                }
                Ok(w[w.len() - 1].0)
            }
            // Propose from θ^{α−1}e^{−βθt}; the ratio to θ^α/(e^{2βθt} − 1)
            // is (x/2)/sinh(x/2) with x = 2βθt, at most 1.
            MutationMeasure::Stable { alpha, .. } => {
                let g = Gamma::new(*alpha, 1.0 / (beta * t)).map_err(|e| Error::InvalidInput(e.to_string()))?;
                loop {
                    let theta = g.sample(rng);
                    let h = beta * theta * t;
                    let accept = if h < 1e-8 { 1.0 } else { h / h.sinh() };
                    if theta > 0.0 && rng.random::<f64>() < accept {
                        return Ok(theta);
                    }
                }
            }
            mu @ MutationMeasure::Tabulated(_) => {
                Ok(ThetaSampler::weighted(mu, ThetaWeight::Survival { beta, t })?.sample(rng))
            }
        }
    }

    pub fn model(&self) -> &StationaryModel {
        &self.model
    }
}

/// Sampler of full [`GenealogySample`]s.
#[derive(Debug, Clone)]
pub struct GenealogySampler {
    tmrca: TmrcaSampler,
    eps: f64,
}

impl GenealogySampler {
    pub fn new(model: &StationaryModel, eps: f64) -> Result<Self> {
        positive("eps", eps)?;
        Ok(Self { tmrca: TmrcaSampler::new(model)?, eps })
    }

    pub fn tmrca(&self) -> &TmrcaSampler {
        &self.tmrca
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GenealogySample> {
        let model = &self.tmrca.model;
        let a = self.tmrca.sample(rng)?;
        let theta = self.tmrca.sample_theta_given_a(a, rng)?;
        let zo = delta_raw(theta, model.beta(), a) * rng.sample::<f64, _>(Exp1);
        let g = GammaMeasureSampler::new(model, a, self.eps)?;
        let za = g.sample_total(rng);
        let zi = g.sample_total(rng);
        Ok(GenealogySample { a, theta, za, zo, zi })
    }
}

/// One exact draw of (A, Θ).
pub fn sample_a_theta<R: Rng + ?Sized>(model: &StationaryModel, rng: &mut R) -> Result<(f64, f64)> {
    let s = TmrcaSampler::new(model)?;
    let a = s.sample(rng)?;
    Ok((a, s.sample_theta_given_a(a, rng)?))
}

/// One draw of Z^A given A = t with the default jump cutoff.
pub fn sample_za_given_a<R: Rng + ?Sized>(model: &StationaryModel, t: f64, rng: &mut R) -> Result<f64> {
    positive("t", t)?;
    Ok(GammaMeasureSampler::new(model, t, DEFAULT_EPSILON)?.sample_total(rng))
}
