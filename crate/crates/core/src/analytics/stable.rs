//! Constants and type laws for the stable mutation measure μ(dθ) = cθ^{α−1}dθ.
//!
//! With this measure Λ(s) = C₃ s^{−α}, and the MRCA type Θ and the type Θ* of
//! an individual sampled at random at time 0 admit the representations
//!
//! ```text
//! 2cΘ^α  =ᵈ E·S^α/a₁,   f(s)  = s^α / (α a₁ (e^s − 1)),
//! 2cΘ*^α =ᵈ E·S*^α/a₁,  f*(s) = s^{α−1} / (α a₁ (1 + b s)),
//! ```
//!
//! with E a unit exponential, a^α = a₁/a₂ and b = 2/a. Both S laws are sampled
//! exactly: expanding 1/(e^s − 1) = Σ_k e^{−ks} shows that S is a Gamma(α+1)
//! variable divided by an independent Zeta(1+α) index, and b·S* is a
//! beta-prime(α, 1−α) variable.

use crate::error::{positive, Error, Result};
use crate::kernel::BranchingParams;
use crate::measure::MutationMeasure;
use crate::quadrature::Quadrature;
use crate::special::{gamma, log1mexp};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, Zeta};
use serde::{Deserialize, Serialize};

/// Constants of the stable case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableConstants {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    /// 4βc² ∫ x^α/(e^{2βx} − 1) dx.
    pub c1: f64,
    /// 2βc² ∫ (1 − e^{−2βx}) x^{α−2} dx.
    pub c2: f64,
    /// −2c ∫ log(1 − e^{−2βx}) x^{α−1} dx, so that Λ(s) = C₃ s^{−α}.
    pub c3: f64,
    /// −∫ log(1 − e^{−r}) r^{α−1} dr = Γ(α)ζ(1+α).
    pub a1: f64,
    /// ∫ log(1 + 1/2q) q^{α−1} dq.
    pub a2: f64,
    /// c 2^{1−α} ∫ q^{α−2}(e^q − 1 − q)/(e^q − 1) dq, defined for α ≥ 1/2.
    pub h_alpha: Option<f64>,
}

/// (e^q − 1 − q)/(e^q − 1), with the series q/2 − q²/12 + q⁴/720 near 0.
fn h_integrand(q: f64) -> f64 {
    if q < 1e-3 {
        q / 2.0 - q * q / 12.0 + q.powi(4) / 720.0
    } else {
        let e = (-q).exp();
        1.0 - q * e / -(-q).exp_m1()
    }
}

/// Evaluates every stable constant by quadrature.
pub fn stable_constants(c: f64, alpha: f64, params: &BranchingParams, quad: &Quadrature) -> Result<StableConstants> {
    let mu = MutationMeasure::stable(c, alpha)?;
    let unit = MutationMeasure::stable(1.0, alpha)?;
    let beta = params.beta();
    let k = 2.0 * beta;
    // Integrals against x^{α−1}dx are integrals against the stable measure.
    let c1 = 4.0 * beta * c * mu.integrate(|x| x * (-k * x).exp() / -(-k * x).exp_m1(), 1.0 / k, quad)?.value;
    let c2 = 2.0 * beta * c * mu.integrate(|x| -(-k * x).exp_m1() / x, 1.0 / k, quad)?.value;
    let c3 = 2.0 * mu.integrate(|x| -log1mexp(k * x), 1.0 / k, quad)?.value;
    let a1 = unit.integrate(|r| -log1mexp(r), 1.0, quad)?.value;
    let a2 = unit.integrate(|q| (0.5 / q).ln_1p(), 0.5, quad)?.value;
    let h_alpha = if alpha >= 0.5 {
        Some(2f64.powf(1.0 - alpha) * mu.integrate(|q| h_integrand(q) / q, 1.0, quad)?.value)
    } else {
        None
    };
    Ok(StableConstants { c, alpha, beta, c1, c2, c3, a1, a2, h_alpha })
}

impl StableConstants {
    /// h(α); an error for α < 1/2 where the constant is not defined.
    pub fn h(&self) -> Result<f64> {
        self.h_alpha
            .ok_or_else(|| Error::InvalidInput(format!("h(alpha) is only defined for alpha >= 1/2, got {}", self.alpha)))
    }

    /// E[Z^A]: finite exactly when α > 1/2.
    ///
    /// Substituting the three homogeneous θ-integrals into the time integral
    /// gives 2βc²·I₁I₂ ∫ t^{−2α} e^{−C₃t^{−α}} dt with C₁ = 4βc²I₁, C₂ = 2βc²I₂,
    /// hence E[Z^A] = C₁C₂/(2βc²α) · Γ(2 − 1/α) · C₃^{1/α − 2}.
    pub fn mean_za(&self) -> f64 {
        if self.alpha <= 0.5 {
            return f64::INFINITY;
        }
        let a = self.alpha;
        self.c1 * self.c2 / (2.0 * self.beta * self.c * self.c * a) * gamma(2.0 - 1.0 / a) * self.c3.powf(1.0 / a - 2.0)
    }

    /// The type laws of Θ and Θ*.
    pub fn theta_laws(&self) -> Result<StableThetaLaws> {
        StableThetaLaws::new(self)
    }
}

/// Densities, distribution functions and exact samplers of S, S*, Θ and Θ*.
#[derive(Debug, Clone)]
pub struct StableThetaLaws {
    c: f64,
    alpha: f64,
    a1: f64,
    b: f64,
    zeta: Zeta<f64>,
    gamma_s: Gamma<f64>,
    beta_prime: Beta<f64>,
    quad: Quadrature,
}

impl StableThetaLaws {
    pub fn new(k: &StableConstants) -> Result<Self> {
        let alpha = k.alpha;
        let a = (k.a1 / k.a2).powf(1.0 / alpha);
        let err = |e: String| Error::InvalidInput(e);
        Ok(Self {
            c: k.c,
            alpha,
            a1: k.a1,
            b: 2.0 / a,
            zeta: Zeta::new(1.0 + alpha).map_err(|e| err(e.to_string()))?,
            gamma_s: Gamma::new(alpha + 1.0, 1.0).map_err(|e| err(e.to_string()))?,
            beta_prime: Beta::new(alpha, 1.0 - alpha).map_err(|e| err(e.to_string()))?,
            quad: Quadrature::default(),
        })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// f(s) = s^α/(α a₁(e^s − 1)).
    pub fn density_s(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        s.powf(self.alpha) * (-s).exp() / (-(-s).exp_m1() * self.alpha * self.a1)
    }

    /// f*(s) = s^{α−1}/(α a₁(1 + bs)).
    pub fn density_s_star(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        s.powf(self.alpha - 1.0) / (self.alpha * self.a1 * (1.0 + self.b * s))
    }

    /// Likelihood ratio h(s) = f*(s)/f(s) = (e^s − 1)/(s(1 + bs)).
    pub fn likelihood_ratio(&self, s: f64) -> f64 {
        s.exp_m1() / (s * (1.0 + self.b * s))
    }

    pub fn sample_s<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = self.zeta.sample(rng);
        self.gamma_s.sample(rng) / k
    }

    pub fn sample_s_star<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x: f64 = self.beta_prime.sample(rng);
        x / ((1.0 - x) * self.b)
    }

    fn theta_from(&self, s: f64, e: f64) -> f64 {
        // 2cΘ^α = E S^α / a₁.
        (e / (2.0 * self.c * self.a1)).powf(1.0 / self.alpha) * s
    }

    /// Exact draw of the unconditional MRCA type Θ.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.sample_s(rng);
        self.theta_from(s, rng.sample(Exp1))
    }

    /// Exact draw of the type Θ* of a uniformly sampled individual.
    pub fn sample_theta_star<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.sample_s_star(rng);
        self.theta_from(s, rng.sample(Exp1))
    }

    /// P(Θ ≤ q) = 1 − ∫ f(s) exp(−2c a₁ q^α s^{−α}) ds.
    pub fn cdf_theta(&self, q: f64) -> Result<f64> {
        self.cdf_with(q, |s| self.density_s(s))
    }

    /// P(Θ* ≤ q), likewise with f*.
    pub fn cdf_theta_star(&self, q: f64) -> Result<f64> {
        self.cdf_with(q, |s| self.density_s_star(s))
    }

    fn cdf_with<F: Fn(f64) -> f64>(&self, q: f64, f: F) -> Result<f64> {
        positive("q", q)?;
        let x = 2.0 * self.c * self.a1 * q.powf(self.alpha);
        let split = x.powf(1.0 / self.alpha).max(1e-300);
        let tail = self.quad.positive_axis(|s| f(s) * (-x * s.powf(-self.alpha)).exp(), split)?;
        Ok((1.0 - tail.value).clamp(0.0, 1.0))
    }

    /// ∫f, ∫f* and E[h(S)] = ∫ f·h, each 1 in exact arithmetic.
    pub fn normalisation_checks(&self) -> Result<(f64, f64, f64)> {
        let q = &self.quad;
        let f = q.positive_axis(|s| self.density_s(s), 1.0)?.value;
        let fs = q.positive_axis(|s| self.density_s_star(s), 1.0 / self.b)?.value;
        // f·h is formed from f(s)e^s and h(s)e^{−s}: f underflows and h
        // overflows in the far tail.
        let eh = q
            .positive_axis(
                |s| {
                    let ln_f = self.alpha * s.ln() - (-(-s).exp_m1()).ln() - (self.alpha * self.a1).ln();
                    let ln_h = log1mexp(s) - s.ln() - (self.b * s).ln_1p();
                    (ln_f + ln_h).exp()
                },
                1.0,
            )?
            .value;
        Ok((f, fs, eh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn consts(alpha: f64) -> StableConstants {
        stable_constants(1.0, alpha, &BranchingParams::new(1.0).unwrap(), &Quadrature::default()).unwrap()
    }

    #[test]
    fn a2_closed_form() {
        for alpha in [0.2, 0.5, 0.75, 0.9] {
            let k = consts(alpha);
            let want = 2f64.powf(-alpha) * PI / (alpha * (PI * alpha).sin());
            assert!((k.a2 - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn c1_c2_closed_forms() {
        // C₂ = 2β(2β)^{1−α}Γ(α)/(1−α) for c = 1.
        let alpha: f64 = 0.75;
        let k = consts(alpha);
        let c2 = 2.0 * 2f64.powf(1.0 - alpha) * gamma(alpha) / (1.0 - alpha);
        assert!((k.c2 - c2).abs() < 1e-9 * c2);
        // C₁ = 4βΓ(α+1)ζ(α+1)/(2β)^{α+1} = 4β α a₁/(2β)^{α+1}.
        let c1 = 4.0 * alpha * k.a1 / 2f64.powf(alpha + 1.0);
        assert!((k.c1 - c1).abs() < 1e-9 * c1);
        // C₃ = 2c a₁ (2β)^{−α}.
        assert!((k.c3 - 2.0 * k.a1 * 2f64.powf(-alpha)).abs() < 1e-9 * k.c3);
    }

    #[test]
    fn h_only_above_one_half() {
        assert!(consts(0.4).h().is_err());
        assert!(consts(0.5).h().unwrap() > 0.0);
        assert!(consts(0.4).mean_za().is_infinite());
        assert!(consts(0.5).mean_za().is_infinite());
        assert!(consts(0.75).mean_za().is_finite());
    }

    #[test]
    fn densities_normalised() {
        for alpha in [0.3, 0.5, 0.75] {
            let (f, fs, eh) = consts(alpha).theta_laws().unwrap().normalisation_checks().unwrap();
            assert!((f - 1.0).abs() < 1e-8 && (fs - 1.0).abs() < 1e-8 && (eh - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn samplers_match_cdfs() {
        let laws = consts(0.5).theta_laws().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000;
        for q in [0.05, 0.3, 1.0, 3.0] {
            let p = laws.cdf_theta(q).unwrap();
            let ps = laws.cdf_theta_star(q).unwrap();
            assert!(ps <= p);
            let hit = (0..n).filter(|_| laws.sample_theta(&mut rng) <= q).count() as f64 / n as f64;
            let hit_s = (0..n).filter(|_| laws.sample_theta_star(&mut rng) <= q).count() as f64 / n as f64;
            let sd = |p: f64| (p * (1.0 - p) / n as f64).sqrt().max(1e-4);
            assert!((hit - p).abs() < 4.0 * sd(p), "q={q}: {hit} vs {p}");
            assert!((hit_s - ps).abs() < 4.0 * sd(ps), "q={q}: {hit_s} vs {ps}");
        }
    }
}
