//! Infinitely divisible sums with Lévy measure 2μ(dθ)x^{−1}e^{−x/Δ^θ_t}dx.
//!
//! This is the law of Z^A given A = t, of the mass of all families younger
//! than t, and (t = ∞) of Z₀. Atomic μ gives independent Gamma(2m, Δ) terms.
//! Otherwise jumps larger than ε are drawn exactly (Poisson count, weighted
//! type, truncated y^{−1}e^{−y} size) and the smaller ones are replaced by
//! their mean 2∫μ(dθ)Δ(1 − e^{−ε/Δ}).

use crate::analytics::StationaryModel;
use crate::error::{positive, Error, Result};
use crate::kernel::{delta_raw, poisson};
use crate::quadrature::Quadrature;
use crate::special::exp_integral_e1;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::theta_sampler::{ThetaSampler, ThetaWeight};

/// Default absolute jump cutoff.
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Expected number of large jumps above which sampling is refused.
const MAX_JUMPS: f64 = 1e8;

/// Expected jump counts below this are treated as zero: a dropped event of
/// that probability is far below any Monte Carlo resolution.
const NEGLIGIBLE_JUMPS: f64 = 1e-12;

/// P(Gamma(2, 1) ≤ a) = 1 − e^{−a}(1 + a), by its series e^{−a}Σ_{j≥2} a^j/j!
/// for small a where the closed form cancels.
fn gamma2_cdf(a: f64) -> f64 {
    if a > 0.5 {
        return 1.0 - (-a).exp() * (1.0 + a);
    }
    let (mut term, mut sum) = (a * a / 2.0, 0.0);
    for j in 3..30 {
        sum += term;
        term *= a / j as f64;
    }
    (-a).exp() * sum
}

/// Geometric ratio of the θ-grid carrying the compensating mass.
const GRID_RATIO: f64 = 1.05;

#[derive(Debug, Clone)]
enum Kind {
    Atomic(Vec<(f64, Gamma<f64>)>),
    /// `jumps` is `None` when jumps above ε are negligibly rare (mean below
    /// [`NEGLIGIBLE_JUMPS`]), which happens for tiny t where Δ_t ≪ ε.
    Series { jump_mean: f64, jumps: Option<ThetaSampler>, compensation: f64 },
}

/// Sampler of the gamma-type random measure at horizon t.
#[derive(Debug, Clone)]
pub struct GammaMeasureSampler {
    beta: f64,
    t: f64,
    eps: f64,
    kind: Kind,
    /// Small-jump mass split over a θ-grid, built on demand.
    grid: Vec<(f64, f64)>,
    small_jump_variance: f64,
}

/// y from the density ∝ y^{−1}e^{−y} on (a, ∞).
fn truncated_e1<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a >= 1.0 {
        loop {
            let y = a + rng.sample::<f64, _>(Exp1);
            if rng.random::<f64>() * y < a {
                return y;
            }
        }
    }
    // Envelope 1/y on (a, 1] and e^{−y} on (1, ∞).
    let (m1, m2) = (-a.ln(), (-1.0f64).exp());
    loop {
        if rng.random::<f64>() * (m1 + m2) < m1 {
            let y = a * (1.0 / a).powf(rng.random::<f64>());
            if rng.random::<f64>() < (-y).exp() {
                return y;
            }
        } else {
            let y = 1.0 + rng.sample::<f64, _>(Exp1);
            if rng.random::<f64>() * y < 1.0 {
                return y;
            }
        }
    }
}

impl GammaMeasureSampler {
    /// Sampler at horizon t ∈ (0, ∞] with absolute jump cutoff ε.
    pub fn new(model: &StationaryModel, t: f64, eps: f64) -> Result<Self> {
        crate::error::check("t", t, t > 0.0)?;
        positive("eps", eps)?;
        let beta = model.beta();
        if let Some(atoms) = model.mu().atoms() {
            let err = |e: rand_distr::GammaError| Error::InvalidInput(e.to_string());
            let terms = atoms
                .iter()
                .map(|a| Ok((a.theta, Gamma::new(2.0 * a.mass, delta_raw(a.theta, beta, t)).map_err(err)?)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self { beta, t, eps, kind: Kind::Atomic(terms), grid: Vec::new(), small_jump_variance: 0.0 });
        }
        let quad = Quadrature::with_rel_tol(1e-8);
        let mu = model.mu();
        // Δ^θ_t saturates at θ ≈ 1/2βt and the jump cutoff bites at θ ≈ 1/2ε;
        // both scales get their own break point.
        let (s1, s2) = if t.is_finite() {
            let (a, b) = (1.0 / (2.0 * beta * t), 1.0 / (2.0 * eps));
            (a.min(b), a.max(b))
        } else {
            (1.0 / (2.0 * eps), 1.0 / (2.0 * eps))
        };
        let integrate = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
            if s1 == s2 {
                return Ok(mu.integrate(f, s1, &quad)?.value);
            }
            Ok(mu.integrate_range(f, 0.0, s1, s1, &quad)?.value
                + mu.integrate_range(f, s1, s2, s1, &quad)?.value
                + mu.integrate_range(f, s2, f64::INFINITY, s2, &quad)?.value)
        };
        let jump_mean = 2.0 * integrate(&|th| exp_integral_e1(eps / delta_raw(th, beta, t)))?;
        if jump_mean > MAX_JUMPS {
            return Err(Error::Budget(format!("{jump_mean:.3e} expected jumps above eps = {eps}")));
        }
        let small = |th: f64| {
            let d = delta_raw(th, beta, t);
            d * -(-eps / d).exp_m1()
        };
        let compensation = 2.0 * integrate(&small)?;
        let small_jump_variance = 2.0
            * integrate(&|th| {
                let d = delta_raw(th, beta, t);
                d * d * gamma2_cdf(eps / d)
            })?;
        let jumps = if jump_mean > NEGLIGIBLE_JUMPS {
            Some(ThetaSampler::weighted(mu, ThetaWeight::Jump { eps, beta, t })?)
        } else {
            None
        };
        Ok(Self { beta, t, eps, kind: Kind::Series { jump_mean, jumps, compensation }, grid: Vec::new(), small_jump_variance })
    }

    /// Splits the compensating mass over a geometric θ-grid so that
    /// [`sample_pieces`](Self::sample_pieces) can return typed pieces.
    pub fn with_pieces(mut self, model: &StationaryModel) -> Result<Self> {
        if let Kind::Series { .. } = self.kind {
            let (beta, t, eps) = (self.beta, self.t, self.eps);
            let quad = Quadrature::with_rel_tol(1e-8);
            let small = |th: f64| {
                let d = delta_raw(th, beta, t);
                2.0 * d * -(-eps / d).exp_m1()
            };
            let inner = if t.is_finite() { (1.0 / (2.0 * beta * t)).min(1.0 / (2.0 * eps)) } else { 1.0 / (2.0 * eps) };
            let outer = if t.is_finite() { (1.0 / (2.0 * beta * t)).max(1.0 / (2.0 * eps)) } else { 1.0 / (2.0 * eps) };
            let (lo, hi) = (1e-6 * inner.min(1.0 / beta), 1e6 * outer);
            let mut grid = Vec::new();
            let mu = model.mu();
            grid.push((lo, mu.integrate_range(small, 0.0, lo, lo, &quad)?.value));
            let mut a = lo;
            while a < hi {
                let b = a * GRID_RATIO;
                grid.push(((a * b).sqrt(), mu.integrate_range(small, a, b, a, &quad)?.value));
                a = b;
            }
            grid.push((a, mu.integrate_range(small, a, f64::INFINITY, a, &quad)?.value));
            grid.retain(|p| p.1 > 0.0);
            self.grid = grid;
        }
        Ok(self)
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }

    /// Mean of the deterministic small-jump replacement (0 for atomic μ).
    pub fn compensation(&self) -> f64 {
        match &self.kind {
            Kind::Atomic(_) => 0.0,
            Kind::Series { compensation, .. } => *compensation,
        }
    }

    /// Variance of the small-jump part that the compensation removes.
    pub fn small_jump_variance(&self) -> f64 {
        self.small_jump_variance
    }

    /// Expected number of exact jumps per draw (0 for atomic μ).
    pub fn jump_mean(&self) -> f64 {
        match &self.kind {
            Kind::Atomic(_) => 0.0,
            Kind::Series { jump_mean, .. } => *jump_mean,
        }
    }

    fn for_each_jump<R: Rng + ?Sized>(&self, rng: &mut R, mut f: impl FnMut(f64, f64)) {
        match &self.kind {
            Kind::Atomic(terms) => {
                for (theta, g) in terms {
                    f(*theta, g.sample(rng));
                }
            }
            Kind::Series { jump_mean, jumps: Some(jumps), .. } => {
                for _ in 0..poisson(rng, *jump_mean) {
                    let theta = jumps.sample(rng);
                    let d = delta_raw(theta, self.beta, self.t);
                    f(theta, d * truncated_e1(self.eps / d, rng));
                }
            }
            Kind::Series { jumps: None, .. } => {}
        }
    }

    /// Total mass of one draw.
    pub fn sample_total<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut total = self.compensation();
        self.for_each_jump(rng, |_, x| total += x);
        total
    }

    /// One draw as (type, mass) pieces, appended to `out`. For continuous μ
    /// this needs [`with_pieces`](Self::with_pieces).
    pub fn sample_pieces<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<(f64, f64)>) {
        self.for_each_jump(rng, |th, x| out.push((th, x)));
        debug_assert!(self.compensation() == 0.0 || !self.grid.is_empty(), "with_pieces was not called");
        out.extend_from_slice(&self.grid);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BranchingParams;
    use crate::measure::MutationMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(mu: MutationMeasure) -> StationaryModel {
        StationaryModel::new(BranchingParams::new(1.0).unwrap(), mu).unwrap()
    }

    #[test]
    fn truncated_e1_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for a in [0.01, 0.5, 2.0] {
            let n = 200_000;
            let m: f64 = (0..n).map(|_| truncated_e1(a, &mut rng)).sum::<f64>() / n as f64;
            // E[Y] = e^{−a}/E₁(a).
            let exact = (-a).exp() / exp_integral_e1(a);
            assert!((m - exact).abs() < 0.01 * exact, "a={a}: {m} vs {exact}");
        }
    }

    #[test]
    fn series_matches_laplace_transform() {
        let m = model(MutationMeasure::stable(1.0, 0.75).unwrap());
        let s = GammaMeasureSampler::new(&m, 0.5, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample_total(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let exact = m.mean_za_given_a(0.5).unwrap().value;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt() / (n as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * sd, "{mean} vs {exact} ± {sd}");
        let lt = xs.iter().map(|x| (-x).exp()).sum::<f64>() / n as f64;
        let exact = m.laplace_za_given_a(0.5, 1.0).unwrap().value;
        assert!((lt - exact).abs() < 0.005, "{lt} vs {exact}");
    }

    #[test]
    fn pieces_total_matches_compensation() {
        let m = model(MutationMeasure::stable(1.0, 0.5).unwrap());
        let s = GammaMeasureSampler::new(&m, 1e-3, 1e-4).unwrap().with_pieces(&m).unwrap();
        let grid: f64 = s.grid.iter().map(|p| p.1).sum();
        assert!((grid - s.compensation()).abs() < 1e-6 * s.compensation());
    }

    #[test]
    fn atomic_is_gamma() {
        let m = model(MutationMeasure::dirac(1.0, 1.0).unwrap());
        let s = GammaMeasureSampler::new(&m, f64::INFINITY, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let lt = (0..n).map(|_| (-s.sample_total(&mut rng)).exp()).sum::<f64>() / n as f64;
        assert!((lt - 1.0 / 2.25).abs() < 0.004);
    }

    #[test]
    fn gamma2_cdf_is_continuous_and_accurate() {
        for a in [1e-8, 1e-3, 0.3, 0.5, 0.5000001, 2.0] {
            // ∫₀^a x e^{−x} dx by Simpson's rule on a fine grid.
            let n = 2000;
            let h = a / n as f64;
            let f = |x: f64| x * (-x).exp();
            let simpson = (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * f(i as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0;
            assert!((gamma2_cdf(a) / simpson - 1.0).abs() < 1e-10, "{a}");
        }
    }

    #[test]
    fn extreme_horizons_build() {
        let m = model(MutationMeasure::stable(1.0, 0.75).unwrap());
        for t in [1e-6, 1e3, 1e6, f64::INFINITY] {
            let g = GammaMeasureSampler::new(&m, t, 1e-3).unwrap();
            assert!(g.compensation() > 0.0);
        }
        // Δ_t ≪ ε: no jumps, all mass in the compensating drift.
        let g = GammaMeasureSampler::new(&m, 1e-6, 1e-3).unwrap();
        assert!(g.jump_mean() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(g.sample_total(&mut rng), g.compensation());
    }
}
