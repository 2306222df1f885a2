//! Closed forms and exact samplers for a single quadratic CB family.
//!
//! A family of type θ evolves as a Feller diffusion with branching mechanism
//! ψ_θ(λ) = 2βθλ + βλ². With k = 2βθ and Δ_t = (1 − e^{−kt})/(2θ) the
//! Laplace exponent is
//!
//! ```text
//! u(λ, t) = λ e^{−kt} / (1 + λ Δ_t),      E_x[e^{−λ Y_t}] = e^{−x u(λ, t)}.
//! ```
//!
//! Writing u = c_t (1 − 1/(1 + λΔ_t)) with c_t = e^{−kt}/Δ_t shows that Y_t is
//! a compound Poisson sum of Poisson(x c_t) exponential variables of mean Δ_t,
//! which gives an exact transition sampler. Under the excursion measure
//! conditioned on survival to time t, 1 − u/c_t = 1/(1 + λΔ_t), so the
//! surviving mass is exponential with mean Δ_t.
//!
//! Every exponential is evaluated through `exp_m1` so that tiny θt keeps full
//! precision, and large θt saturates without overflow.

use crate::error::{nonneg, positive, Result};
use crate::special::log1mexp;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};

/// The quadratic branching intensity β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchingParams {
    beta: f64,
}

impl BranchingParams {
    pub fn new(beta: f64) -> Result<Self> {
        Ok(Self { beta: positive("beta", beta)? })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// A family of type θ > 0 under branching parameters β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyLaw {
    theta: f64,
    params: BranchingParams,
}

impl FamilyLaw {
    pub fn new(theta: f64, params: BranchingParams) -> Result<Self> {
        Ok(Self { theta: positive("theta", theta)?, params })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn params(&self) -> BranchingParams {
        self.params
    }

    /// Exponential rate k = 2βθ of the mean decay.
    pub fn rate(&self) -> f64 {
        2.0 * self.params.beta * self.theta
    }

    /// ψ_θ(λ) = 2βθλ + βλ².
    pub fn psi(&self, lambda: f64) -> f64 {
        self.params.beta * lambda * (2.0 * self.theta + lambda)
    }
}

/// Δ_t = (1 − e^{−2βθt})/(2θ); t = ∞ gives 1/(2θ).
#[inline]
pub fn delta_raw(theta: f64, beta: f64, t: f64) -> f64 {
    -(-2.0 * beta * theta * t).exp_m1() / (2.0 * theta)
}

/// c_t = 2θ/(e^{2βθt} − 1), evaluated as 2θ e^{−x}/(1 − e^{−x}).
#[inline]
pub fn c_raw(theta: f64, beta: f64, t: f64) -> f64 {
    let x = 2.0 * beta * theta * t;
    2.0 * theta * (-x).exp() / -(-x).exp_m1()
}

/// u(λ, t) = λ e^{−2βθt}/(1 + λΔ_t).
#[inline]
pub fn u_raw(theta: f64, beta: f64, lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * (-2.0 * beta * theta * t).exp() / (1.0 + lambda * delta_raw(theta, beta, t))
}

/// Laplace exponent u^θ(λ, t) of the family started from unit mass.
pub fn u_theta(law: &FamilyLaw, lambda: f64, t: f64) -> Result<f64> {
    nonneg("lambda", lambda)?;
    nonneg("t", t)?;
    Ok(u_raw(law.theta, law.params.beta, lambda, t))
}

/// Survival intensity c^θ(t) = N[ζ > t] of the excursion measure.
pub fn c_theta(law: &FamilyLaw, t: f64) -> Result<f64> {
    positive("t", t)?;
    Ok(c_raw(law.theta, law.params.beta, t))
}

/// Δ^θ_t; accepts t = ∞.
pub fn delta_theta(law: &FamilyLaw, t: f64) -> Result<f64> {
    crate::error::check("t", t, t >= 0.0)?;
    Ok(delta_raw(law.theta, law.params.beta, t))
}

/// Which time integral of the Laplace exponents to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelIntegral {
    /// β∫₀^t u^θ(λ, r) dr = log(1 + λΔ_t); t = ∞ gives log(1 + λ/2θ).
    U { lambda: f64 },
    /// β∫_t^∞ c^θ(r) dr = −log(1 − e^{−2βθt}).
    CTail,
}

/// β-scaled time integrals of u^θ and c^θ in closed form.
pub fn log_integrals(law: &FamilyLaw, which: KernelIntegral, t: f64) -> Result<f64> {
    crate::error::check("t", t, t > 0.0)?;
    let (theta, beta) = (law.theta, law.params.beta);
    match which {
        KernelIntegral::U { lambda } => {
            nonneg("lambda", lambda)?;
            Ok((lambda * delta_raw(theta, beta, t)).ln_1p())
        }
        KernelIntegral::CTail => Ok(-log1mexp(2.0 * beta * theta * t)),
    }
}

/// γ^θ_r(λ, η) = (1 − e^{−η}) c^θ(r) + e^{−η} u^θ(λ, r).
pub fn gamma_excursion(law: &FamilyLaw, r: f64, lambda: f64, eta: f64) -> Result<f64> {
    positive("r", r)?;
    nonneg("lambda", lambda)?;
    nonneg("eta", eta)?;
    Ok(gamma_excursion_raw(law.theta, law.params.beta, r, lambda, eta))
}

#[inline]
pub fn gamma_excursion_raw(theta: f64, beta: f64, r: f64, lambda: f64, eta: f64) -> f64 {
    -(-eta).exp_m1() * c_raw(theta, beta, r) + (-eta).exp() * u_raw(theta, beta, lambda, r)
}

/// Draws a Poisson count, treating a zero mean as the point mass at zero.
#[inline]
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(u64::MAX)
}

/// Sum of `k` independent exponentials of the given mean.
#[inline]
pub fn gamma_sum<R: Rng + ?Sized>(rng: &mut R, k: u64, mean: f64) -> f64 {
    match k {
        0 => 0.0,
        1 => mean * rng.sample::<f64, _>(Exp1),
        _ => Gamma::new(k as f64, mean).expect("positive shape and scale").sample(rng),
    }
}

/// Exact draw of Y_t given Y_0 = x, with the Poisson ancestor count.
///
/// Returns (Y_t, K) where K ~ Poisson(x c_t) is the number of surviving
/// excursions, i.e. time-0 ancestors of the time-t population.
pub fn sample_transition_counted<R: Rng + ?Sized>(theta: f64, beta: f64, x: f64, t: f64, rng: &mut R) -> (f64, u64) {
    let k = poisson(rng, x * c_raw(theta, beta, t));
    (gamma_sum(rng, k, delta_raw(theta, beta, t)), k)
}

/// Exact draw of Y_t given Y_0 = x.
pub fn sample_transition<R: Rng + ?Sized>(law: &FamilyLaw, x: f64, t: f64, rng: &mut R) -> Result<f64> {
    nonneg("x", x)?;
    positive("t", t)?;
    Ok(sample_transition_counted(law.theta, law.params.beta, x, t, rng).0)
}

/// Exact draw of Y_s under the excursion measure conditioned on ζ > s.
pub fn sample_mass_given_alive<R: Rng + ?Sized>(law: &FamilyLaw, s: f64, rng: &mut R) -> Result<f64> {
    crate::error::check("s", s, s > 0.0)?;
    let m = delta_raw(law.theta, law.params.beta, s);
    Ok(m * rng.sample::<f64, _>(Exp1))
}
