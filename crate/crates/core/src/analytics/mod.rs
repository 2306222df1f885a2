//! Closed-form laws of the stationary population and its genealogy.
//!
//! Conventions: every "density" of a type-valued quantity is stated against
//! the measure it is taken with respect to. The joint law of (A, Θ) has a
//! density with respect to dt·μ(dθ); the conditional MRCA type law μ_t^MRCA is
//! returned either as atom weights (atomic μ) or as a Lebesgue density.

pub mod fluctuation;
pub mod stable;

use crate::error::{nonneg, positive, Error, Result};
use crate::kernel::{c_raw, delta_raw, gamma_excursion_raw, BranchingParams};
use crate::measure::{check_admissible, lambda_of_s, log_integral, MutationMeasure};
use crate::quadrature::{Estimate, Quadrature};

pub use fluctuation::{
    fluctuation_condition, fluctuation_oracle, FluctuationOracle, FluctuationRegime, StableFluctuationLimit,
};
pub use stable::{stable_constants, StableConstants, StableThetaLaws};

/// The stationary model: branching parameters and an admissible μ.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryModel {
    params: BranchingParams,
    mu: MutationMeasure,
    quad: Quadrature,
}

fn exp_neg(e: Estimate, factor: f64) -> Estimate {
    let v = (-factor * e.value).exp();
    Estimate { value: v, abs_error: v * factor * e.abs_error }
}

impl StationaryModel {
    pub fn new(params: BranchingParams, mu: MutationMeasure) -> Result<Self> {
        Self::with_quadrature(params, mu, Quadrature::default())
    }

    pub fn with_quadrature(params: BranchingParams, mu: MutationMeasure, quad: Quadrature) -> Result<Self> {
        let report = check_admissible(&mu, &quad)?;
        if !report.admissible {
            return Err(Error::Config(format!(
                "mutation measure is not admissible (near-zero integral {}, tail integral {})",
                report.near_zero_integral, report.tail_integral
            )));
        }
        Ok(Self { params, mu, quad })
    }

    pub fn params(&self) -> &BranchingParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.params.beta()
    }

    pub fn mu(&self) -> &MutationMeasure {
        &self.mu
    }

    pub fn quad(&self) -> &Quadrature {
        &self.quad
    }

    /// E[e^{−λ Z₀}] = exp(−2∫log(1 + λ/2θ) μ(dθ)).
    pub fn laplace_z0(&self, lambda: f64) -> Result<Estimate> {
        Ok(exp_neg(log_integral(&self.mu, lambda, &self.quad)?, 2.0))
    }

    /// The same transform continued to negative arguments, where finite.
    pub fn laplace_z0_real(&self, sigma: f64) -> Result<Estimate> {
        if sigma >= 0.0 {
            return self.laplace_z0(sigma);
        }
        if !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma = {sigma}")));
        }
        let inner = self.mu.integrate(
            |t| {
                let z = sigma / (2.0 * t);
                if z <= -1.0 {
                    f64::NAN
                } else {
                    z.ln_1p()
                }
            },
            -sigma / 2.0,
            &self.quad,
        );
        match inner {
            Ok(e) => Ok(exp_neg(e, 2.0)),
            Err(_) => Err(Error::InvalidInput(format!("E[exp({}·Z0)] is infinite", -sigma))),
        }
    }

    /// Λ(s), the mean number of families older than s alive at time 0.
    pub fn lambda_of_s(&self, s: f64) -> Result<Estimate> {
        lambda_of_s(&self.mu, &self.params, s, &self.quad)
    }

    /// −Λ′(s) = 2β∫c^θ(s) μ(dθ).
    pub fn lambda_rate(&self, s: f64) -> Result<Estimate> {
        positive("s", s)?;
        let beta = self.beta();
        let e = self.mu.integrate(|t| c_raw(t, beta, s), 1.0 / (2.0 * beta * s), &self.quad)?;
        Ok(Estimate { value: 2.0 * beta * e.value, abs_error: 2.0 * beta * e.abs_error })
    }

    /// P(A < t) = exp(−Λ(t)).
    pub fn cdf_a(&self, t: f64) -> Result<Estimate> {
        Ok(exp_neg(self.lambda_of_s(t)?, 1.0))
    }

    /// Lebesgue density of A: 2β∫c^θ(t)μ(dθ) · e^{−Λ(t)}.
    pub fn density_a(&self, t: f64) -> Result<Estimate> {
        let rate = self.lambda_rate(t)?;
        let cdf = self.cdf_a(t)?;
        Ok(Estimate {
            value: rate.value * cdf.value,
            abs_error: rate.abs_error * cdf.value + rate.value * cdf.abs_error,
        })
    }

    /// Density of (A, Θ) with respect to dt·μ(dθ): 2βc^θ(t)e^{−Λ(t)}.
    pub fn joint_a_theta_density(&self, t: f64, theta: f64) -> Result<Estimate> {
        positive("theta", theta)?;
        let cdf = self.cdf_a(t)?;
        let f = 2.0 * self.beta() * c_raw(theta, self.beta(), t);
        Ok(Estimate { value: f * cdf.value, abs_error: f * cdf.abs_error })
    }

    /// Quantile of A: the t with P(A < t) = p.
    pub fn quantile_a(&self, p: f64) -> Result<f64> {
        crate::error::check("p", p, p > 0.0 && p < 1.0)?;
        let target = -p.ln();
        let g = |t: f64| -> Result<f64> { Ok(self.lambda_of_s(t)?.value - target) };
        // Λ decreases from ∞ to 0; bracket in log t.
        let (mut lo, mut hi) = (1.0, 1.0);
        while g(lo)? < 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::RootFinding("cannot bracket small TMRCA quantile".into()));
            }
        }
        while g(hi)? > 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::RootFinding("cannot bracket large TMRCA quantile".into()));
            }
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - 1.0 < 1e-14 {
                break;
            }
        }
        Ok((lo * hi).sqrt())
    }

    /// The conditional law of the MRCA type given A = t.
    pub fn mrca_law(&self) -> MrcaLaw<'_> {
        MrcaLaw { model: self }
    }

    /// E[e^{−η Z^A} | A = t] = exp(−2∫log(1 + ηΔ^θ_t) μ(dθ)).
    pub fn laplace_za_given_a(&self, t: f64, eta: f64) -> Result<Estimate> {
        positive("t", t)?;
        nonneg("eta", eta)?;
        if eta == 0.0 {
            return Ok(Estimate::exact(1.0));
        }
        let beta = self.beta();
        let e = self.mu.integrate(|th| (eta * delta_raw(th, beta, t)).ln_1p(), 1.0 / (2.0 * beta * t), &self.quad)?;
        Ok(exp_neg(e, 2.0))
    }

    /// E[Z^A | A = t] = 2∫Δ^θ_t μ(dθ).
    pub fn mean_za_given_a(&self, t: f64) -> Result<Estimate> {
        positive("t", t)?;
        let beta = self.beta();
        let e = self.mu.integrate(|th| delta_raw(th, beta, t), 1.0 / (2.0 * beta * t), &self.quad)?;
        Ok(Estimate { value: 2.0 * e.value, abs_error: 2.0 * e.abs_error })
    }

    /// E[Z^A], possibly infinite.
    ///
    /// Stable measures use the reduced Gamma-function form; other measures
    /// integrate E[Z^A | A = t] against the density of A.
    pub fn mean_za(&self) -> Result<Estimate> {
        if let MutationMeasure::Stable { c, alpha } = self.mu {
            let k = stable_constants(c, alpha, &self.params, &self.quad)?;
            return Ok(Estimate::exact(k.mean_za()));
        }
        let outer = Quadrature::with_rel_tol((self.quad.rel_tol * 100.0).max(1e-8));
        let median = self.quantile_a(0.5)?;
        let f = |t: f64| match (self.mean_za_given_a(t), self.density_a(t)) {
            (Ok(m), Ok(d)) => m.value * d.value,
            _ => f64::NAN,
        };
        outer.positive_axis(f, median)
    }

    /// Joint transform E[exp(−ρZ_{−s} − λZ₀ − ηM_s)] for constant arguments.
    ///
    /// ρ may be negative as long as the transform stays finite; this is the
    /// analytic continuation needed by the fluctuation functionals.
    pub fn joint_laplace_zzm(&self, s: f64, rho: f64, lambda: f64, eta: f64) -> Result<Estimate> {
        positive("s", s)?;
        crate::error::check("rho", rho, rho.is_finite())?;
        nonneg("lambda", lambda)?;
        nonneg("eta", eta)?;
        let beta = self.beta();
        let e = self.mu.integrate(
            |th| {
                let w = (rho + gamma_excursion_raw(th, beta, s, lambda, eta)) / (2.0 * th);
                if w <= -1.0 {
                    return f64::NAN;
                }
                (lambda * delta_raw(th, beta, s)).ln_1p() + w.ln_1p()
            },
            1.0 / (2.0 * beta * s),
            &self.quad,
        );
        match e {
            Ok(e) => Ok(exp_neg(e, 2.0)),
            Err(Error::Quadrature { achieved, .. }) if achieved.is_infinite() => {
                Err(Error::InvalidInput(format!("joint transform is infinite at rho = {rho}")))
            }
            Err(e) => Err(e),
        }
    }

    /// E[exp(−λZ₀ − ηM_s) | population at −s] for a population given as
    /// (type, mass) pieces.
    pub fn conditional_laplace_zm(&self, s: f64, lambda: f64, eta: f64, pieces: &[(f64, f64)]) -> Result<Estimate> {
        positive("s", s)?;
        nonneg("lambda", lambda)?;
        nonneg("eta", eta)?;
        let beta = self.beta();
        let newcomers = if lambda == 0.0 {
            Estimate::exact(0.0)
        } else {
            self.mu.integrate(|th| (lambda * delta_raw(th, beta, s)).ln_1p(), 1.0 / (2.0 * beta * s), &self.quad)?
        };
        let old: f64 = pieces.iter().map(|(th, y)| y * gamma_excursion_raw(*th, beta, s, lambda, eta)).sum();
        let v = (-2.0 * newcomers.value - old).exp();
        Ok(Estimate { value: v, abs_error: 2.0 * v * newcomers.abs_error })
    }

    /// 2∫Δ^θ_s μ(dθ): the mean mass of families younger than s.
    pub fn young_mass_mean(&self, s: f64) -> Result<Estimate> {
        self.mean_za_given_a(s)
    }
}

/// μ_t^MRCA(dθ) ∝ θ(e^{2βθt} − 1)^{−1} μ(dθ), the MRCA type given A = t.
#[derive(Debug, Clone, Copy)]
pub struct MrcaLaw<'a> {
    model: &'a StationaryModel,
}

impl MrcaLaw<'_> {
    fn weight(&self, t: f64, theta: f64) -> f64 {
        0.5 * c_raw(theta, self.model.beta(), t)
    }

    /// Normalising constant ∫θ/(e^{2βθt} − 1) μ(dθ).
    pub fn normalizer(&self, t: f64) -> Result<Estimate> {
        positive("t", t)?;
        self.model.mu.integrate(|th| self.weight(t, th), 1.0 / (2.0 * self.model.beta() * t), &self.model.quad)
    }

    /// (θ_j, P(Θ = θ_j | A = t)) for an atomic μ.
    pub fn atom_weights(&self, t: f64) -> Result<Vec<(f64, f64)>> {
        positive("t", t)?;
        let atoms = self
            .model
            .mu
            .atoms()
            .ok_or_else(|| Error::InvalidInput("atom weights need an atomic measure".into()))?;
        let w: Vec<f64> = atoms.iter().map(|a| a.mass * self.weight(t, a.theta)).collect();
        let total: f64 = w.iter().sum();
        Ok(atoms.iter().zip(w).map(|(a, w)| (a.theta, w / total)).collect())
    }

    /// Lebesgue density of Θ given A = t for a continuous μ.
    pub fn density(&self, t: f64, theta: f64) -> Result<f64> {
        positive("theta", theta)?;
        let d = self
            .model
            .mu
            .density(theta)
            .ok_or_else(|| Error::InvalidInput("density needs a continuous measure".into()))?;
        Ok(self.weight(t, theta) * d / self.normalizer(t)?.value)
    }

    /// P(Θ ≤ q | A = t).
    pub fn cdf(&self, t: f64, q: f64) -> Result<f64> {
        nonneg("q", q)?;
        let scale = 1.0 / (2.0 * self.model.beta() * t);
        let part =
            self.model.mu.integrate_range(|th| self.weight(t, th), 0.0, q, scale.min(q.max(1e-300)), &self.model.quad)?;
        Ok((part.value / self.normalizer(t)?.value).min(1.0))
    }
}

/// Λ*(s) = −(a/(a−1)) log(1 − e^{−(a−1)bs}) for the neutral stable CBI with
/// branching mechanism λ^a + bλ.
pub fn neutral_stable_family_asymptote(a: f64, b: f64, s: f64) -> Result<f64> {
    crate::error::check("a", a, a > 1.0 && a <= 2.0)?;
    positive("b", b)?;
    positive("s", s)?;
    Ok(-(a / (a - 1.0)) * crate::special::log1mexp((a - 1.0) * b * s))
}
