//! Limit laws for the fluctuations of Z_{−s}, Z₀ and the ancestor count M_s.
//!
//! In the generic regime, (Z₀, (Z₀ − Z_{−s})/√(βs), (βsM_s − Z_{−s})/√(βs))
//! converges to (Z₀, √Z₀(G + G′), √Z₀ G), whose transform at (ρ, λ, η) is
//! E[e^{−σZ₀}] with σ = ρ − (λ² + λη + η²/2). This needs
//! √A∫_A^∞ μ(dθ)/θ → 0 and A^{−1/2}∫_0^A μ(dθ) → 0.
//!
//! For the stable measure that condition holds iff α < 1/2. Otherwise
//! (βs)^{α−1}(βsM_s − Z_{−s}) converges to √Z₀G − h(1/2) at α = 1/2 and to the
//! constant −h(α) for α ∈ (1/2, 1).

use super::{stable_constants, StationaryModel};
use crate::error::{positive, Error, Result};
use crate::measure::MutationMeasure;
use crate::quadrature::Estimate;
use serde::{Deserialize, Serialize};

/// Which limit theorem the oracle should describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluctuationRegime {
    Generic,
    Stable,
}

/// Limit of (βs)^{α−1}(βsM_s − Z_{−s}) for stable μ with α ≥ 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StableFluctuationLimit {
    /// α = 1/2: √Z₀·G − h(1/2).
    MixedGaussian { shift: f64 },
    /// α ∈ (1/2, 1): the constant −h(α).
    Deterministic { value: f64 },
    /// α < 1/2: the generic theorem applies instead.
    Generic,
}

/// Descriptor of the fluctuation limit for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationOracle {
    pub condition_holds: bool,
    pub stable_limit: Option<StableFluctuationLimit>,
    /// μ′ with ⟨μ′, φ⟩ = ∫μ(dθ)φ(√θ), when it is a valid measure.
    pub mu_prime: Option<MutationMeasure>,
}

/// Whether the generic fluctuation conditions hold for μ.
pub fn fluctuation_condition(mu: &MutationMeasure) -> Result<bool> {
    match mu {
        MutationMeasure::Atomic(_) => Ok(true),
        // Both limits behave like A^{e_∞ + 1/2}.
        _ => Ok(mu.endpoint_exponents()?.1 < -0.5),
    }
}

/// σ = ρ − (λ² + λη + η²/2).
pub fn limit_sigma(rho: f64, lambda: f64, eta: f64) -> f64 {
    rho - (lambda * lambda + lambda * eta + eta * eta / 2.0)
}

pub fn fluctuation_oracle(model: &StationaryModel, regime: FluctuationRegime) -> Result<FluctuationOracle> {
    let condition_holds = fluctuation_condition(model.mu())?;
    let stable_limit = match (regime, model.mu()) {
        (FluctuationRegime::Stable, MutationMeasure::Stable { c, alpha }) => Some(if *alpha < 0.5 {
            StableFluctuationLimit::Generic
        } else {
            let h = stable_constants(*c, *alpha, model.params(), model.quad())?.h()?;
            if *alpha == 0.5 {
                StableFluctuationLimit::MixedGaussian { shift: -h }
            } else {
                StableFluctuationLimit::Deterministic { value: -h }
            }
        }),
        (FluctuationRegime::Stable, _) => {
            return Err(Error::InvalidInput("the stable regime needs a stable mutation measure".into()))
        }
        (FluctuationRegime::Generic, _) => None,
    };
    Ok(FluctuationOracle { condition_holds, stable_limit, mu_prime: model.mu().sqrt_pushforward().ok() })
}

impl StationaryModel {
    /// Limit of E[exp(−ρZ_{−s} − λ(Z₀ − Z_{−s})/√(βs) − η(βsM_s − Z_{−s})/√(βs))].
    pub fn fluctuation_limit_laplace(&self, rho: f64, lambda: f64, eta: f64) -> Result<Estimate> {
        self.laplace_z0_real(limit_sigma(rho, lambda, eta))
    }

    /// The same functional at finite lag s, from the exact joint transform.
    pub fn fluctuation_laplace(&self, s: f64, rho: f64, lambda: f64, eta: f64) -> Result<Estimate> {
        positive("s", s)?;
        let r = (self.beta() * s).sqrt();
        self.joint_laplace_zzm(s, rho - (lambda + eta) / r, lambda / r, eta * r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BranchingParams;

    fn model(mu: MutationMeasure) -> StationaryModel {
        StationaryModel::new(BranchingParams::new(1.0).unwrap(), mu).unwrap()
    }

    #[test]
    fn stable_condition_threshold() {
        assert!(fluctuation_condition(&MutationMeasure::stable(1.0, 0.3).unwrap()).unwrap());
        assert!(!fluctuation_condition(&MutationMeasure::stable(1.0, 0.75).unwrap()).unwrap());
        assert!(!fluctuation_condition(&MutationMeasure::stable(1.0, 0.5).unwrap()).unwrap());
    }

    #[test]
    fn stable_limits() {
        let o = fluctuation_oracle(&model(MutationMeasure::stable(1.0, 0.75).unwrap()), FluctuationRegime::Stable).unwrap();
        assert!(matches!(o.stable_limit, Some(StableFluctuationLimit::Deterministic { value }) if value < 0.0));
        let o = fluctuation_oracle(&model(MutationMeasure::stable(1.0, 0.5).unwrap()), FluctuationRegime::Stable).unwrap();
        assert!(matches!(o.stable_limit, Some(StableFluctuationLimit::MixedGaussian { .. })));
        let d = model(MutationMeasure::dirac(1.0, 1.0).unwrap());
        assert!(fluctuation_oracle(&d, FluctuationRegime::Stable).is_err());
    }

    #[test]
    fn generic_limit_at_sigma_rho() {
        let m = model(MutationMeasure::dirac(1.0, 1.0).unwrap());
        let a = m.fluctuation_limit_laplace(1.0, 0.0, 0.0).unwrap().value;
        assert_eq!(a, m.laplace_z0(1.0).unwrap().value);
    }

    #[test]
    fn finite_lag_functional_approaches_limit() {
        let m = model(MutationMeasure::dirac(1.0, 1.0).unwrap());
        let lim = m.fluctuation_limit_laplace(1.0, 0.5, 0.5).unwrap().value;
        let mut last = f64::INFINITY;
        for s in [0.2, 0.1, 0.05, 0.02, 1e-3, 1e-5] {
            let d = (m.fluctuation_laplace(s, 1.0, 0.5, 0.5).unwrap().value - lim).abs();
            assert!(d < last, "s={s}: {d} !< {last}");
            last = d;
        }
        assert!(last < 1e-2);
    }
}
