//! Exact draws of a type θ from w(θ)μ(dθ)/∫w dμ for nonincreasing weights w.
//!
//! Continuous measures are handled by rejection from a piecewise envelope:
//! a head cell near 0 bounded by a constant or by Kθ^{−δ}, body cells on
//! which w drops by at most a factor 2 (envelope w(left)·density, sampled by
//! the closed-form power-law quantile), and an exponential tail cell.

use crate::error::{Error, Result};
use crate::kernel::{c_raw, delta_raw};
use crate::measure::{MutationMeasure, PowerPiece};
use crate::special::{exp_integral_e1, log1mexp};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Zeta};

/// A nonincreasing type weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaWeight {
    /// −log(1 − e^{−kθ}): type marginal of families older than k/2β.
    Alive { k: f64 },
    /// c^θ(t) = 2θ/(e^{2βθt} − 1): MRCA type tilt given A = t.
    Survival { beta: f64, t: f64 },
    /// E₁(ε/Δ^θ_t): rate of gamma-measure jumps larger than ε (t may be ∞).
    Jump { eps: f64, beta: f64, t: f64 },
}

/// Bound on the weight over the head cell (0, θ_lo].
#[derive(Debug, Clone, Copy)]
enum Head {
    Bounded(f64),
    /// w(θ) ≤ kθ^{−δ}.
    Power { k: f64, delta: f64 },
}

impl ThetaWeight {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            Self::Alive { k } => -log1mexp(k * theta),
            Self::Survival { beta, t } => c_raw(theta, beta, t),
            Self::Jump { eps, beta, t } => exp_integral_e1(eps / delta_raw(theta, beta, t)),
        }
    }

    /// θ below which the head bound is used and θ beyond which the
    /// exponential tail bound is tight.
    fn range(&self) -> (f64, f64) {
        match *self {
            Self::Alive { k } => (1e-3 / k, 40.0 / k),
            Self::Survival { beta, t } => {
                let k = 2.0 * beta * t;
                (1e-3 / k, 40.0 / k)
            }
            Self::Jump { eps, beta, t } => {
                let s = 1.0 / (2.0 * eps);
                let r = if t.is_finite() { 1.0 / (2.0 * beta * t) } else { f64::INFINITY };
                (1e-3 * s.min(r), 40.0 * if r.is_finite() { s.max(r) } else { s })
            }
        }
    }

    fn head(&self, exponent: f64) -> Head {
        // δ < e₀ + 1 keeps θ^{e₀ − δ} integrable at 0.
        let delta = 0.5_f64.min((exponent + 1.0) / 2.0);
        match *self {
            // −log(1 − e^{−x}) ≤ x^{−δ}/δ for x ≤ 1.
            Self::Alive { k } => Head::Power { k: k.powf(-delta) / delta, delta },
            // c^θ(t) ≤ 1/(βt).
            Self::Survival { beta, t } => Head::Bounded(1.0 / (beta * t)),
            // Δ ≤ βt, and E₁(y) ≤ log(1 + 1/y) ≤ y^{−δ}/δ with y ≥ 2εθ.
            Self::Jump { eps, beta, t } => {
                if t.is_finite() {
                    Head::Bounded(exp_integral_e1(eps / (beta * t)))
                } else {
                    Head::Power { k: (2.0 * eps).powf(-delta) / delta, delta }
                }
            }
        }
    }

    /// (w_m, r) with w(θ) ≤ w_m e^{−r(θ − θ_m)} for θ ≥ θ_m.
    fn tail(&self, theta_m: f64) -> (f64, f64) {
        match *self {
            Self::Alive { k } => {
                let x = k * theta_m;
                ((-x).exp() / -(-x).exp_m1(), k)
            }
            // log θe^{−kθ} has slope at most 1/θ_m − k beyond θ_m.
            Self::Survival { beta, t } => {
                let k = 2.0 * beta * t;
                (c_raw(theta_m, beta, t), k - 1.0 / theta_m)
            }
            // E₁(y) ≤ e^{−y}/y and ε/Δ ≥ 2εθ.
            Self::Jump { eps, .. } => {
                let y = 2.0 * eps * theta_m;
                ((-y).exp() / y, 2.0 * eps)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum CellKind {
    Head(Head),
    Body { w_max: f64 },
    Tail { w_m: f64, r: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: f64,
    hi: f64,
    piece: PowerPiece,
    kind: CellKind,
}

#[derive(Debug, Clone)]
enum Inner {
    Categorical { thetas: Vec<f64>, cum: Vec<f64> },
    /// θ = Gamma(α, 1)/(k·Zeta(1 + α)): the exact alive marginal for stable μ.
    StableAlive { gamma: Gamma<f64>, zeta: Zeta<f64>, k: f64 },
    Envelope { weight: ThetaWeight, cells: Vec<Cell>, cum: Vec<f64> },
}

/// Sampler of θ from the weighted measure w dμ.
#[derive(Debug, Clone)]
pub struct ThetaSampler {
    inner: Inner,
}

fn pick(cum: &[f64], u: f64) -> usize {
    let target = u * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= target).min(cum.len() - 1)
}

impl ThetaSampler {
    /// Sampler of the alive-family type marginal ∝ −log(1 − e^{−2βθs})μ(dθ).
    pub fn alive(mu: &MutationMeasure, beta: f64, s: f64) -> Result<Self> {
        let k = 2.0 * beta * s;
        if let MutationMeasure::Stable { alpha, .. } = mu {
            let err = |e: String| Error::InvalidInput(e);
            return Ok(Self {
                inner: Inner::StableAlive {
                    gamma: Gamma::new(*alpha, 1.0).map_err(|e| err(e.to_string()))?,
                    zeta: Zeta::new(1.0 + alpha).map_err(|e| err(e.to_string()))?,
                    k,
                },
            });
        }
        Self::weighted(mu, ThetaWeight::Alive { k })
    }

    pub fn weighted(mu: &MutationMeasure, weight: ThetaWeight) -> Result<Self> {
        if let Some(atoms) = mu.atoms() {
            let mut cum = Vec::with_capacity(atoms.len());
            let mut acc = 0.0;
            for a in atoms {
                acc += a.mass * weight.eval(a.theta);
                cum.push(acc);
            }
            if !(acc > 0.0 && acc.is_finite()) {
                return Err(Error::InvalidInput(format!("type weights sum to {acc}")));
            }
            return Ok(Self { inner: Inner::Categorical { thetas: atoms.iter().map(|a| a.theta).collect(), cum } });
        }
        let pieces = mu.pieces()?;
        let (first, last) = (pieces[0], pieces[pieces.len() - 1]);
        if last.exponent > 0.0 {
            return Err(Error::Config("the density must not grow at infinity".into()));
        }
        let (lo_s, hi_s) = weight.range();
        let theta_lo = lo_s.min(first.hi);
        let theta_hi = hi_s.max(last.lo).max(theta_lo);
        let mut cells = Vec::new();
        cells.push(Cell { lo: 0.0, hi: theta_lo, piece: first, kind: CellKind::Head(weight.head(first.exponent)) });
        for p in &pieces {
            let (a, b) = (p.lo.max(theta_lo), p.hi.min(theta_hi));
            let mut x = a;
            while x < b {
                let wx = weight.eval(x);
                if wx <= 0.0 {
                    break;
                }
                let mut y = (2.0 * x).min(b);
                while weight.eval(y) < 0.5 * wx && y - x > 1e-9 * x {
                    y = x + 0.5 * (y - x);
                }
                cells.push(Cell { lo: x, hi: y, piece: *p, kind: CellKind::Body { w_max: wx } });
                x = y;
            }
        }
        let (w_m, r) = weight.tail(theta_hi);
        if w_m > 0.0 {
            cells.push(Cell { lo: theta_hi, hi: f64::INFINITY, piece: last, kind: CellKind::Tail { w_m, r } });
        }
        let mut cum = Vec::with_capacity(cells.len());
        let mut acc = 0.0;
        for c in &cells {
            let m = match c.kind {
                CellKind::Head(Head::Bounded(w0)) => w0 * c.piece.mass(0.0, c.hi),
                CellKind::Head(Head::Power { k, delta }) => {
                    let p = c.piece.exponent - delta + 1.0;
                    k * c.piece.d_anchor * c.piece.anchor.powf(-c.piece.exponent) * c.hi.powf(p) / p
                }
                CellKind::Body { w_max } => w_max * c.piece.mass(c.lo, c.hi),
                CellKind::Tail { w_m, r } => w_m * c.piece.density(c.lo) / r,
            };
            acc += m;
            cum.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::InvalidInput(format!("envelope mass is {acc}")));
        }
        Ok(Self { inner: Inner::Envelope { weight, cells, cum } })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.inner {
            Inner::Categorical { thetas, cum } => thetas[pick(cum, rng.random())],
            Inner::StableAlive { gamma, zeta, k } => gamma.sample(rng) / (k * zeta.sample(rng)),
            Inner::Envelope { weight, cells, cum } => loop {
                let c = &cells[pick(cum, rng.random())];
                let u: f64 = rng.random();
                let (theta, accept) = match c.kind {
                    CellKind::Head(Head::Bounded(w0)) => {
                        let th = c.piece.quantile(0.0, c.hi, rng.random());
                        (th, weight.eval(th) / w0)
                    }
                    CellKind::Head(Head::Power { k, delta }) => {
                        let p = c.piece.exponent - delta + 1.0;
                        let th = c.hi * rng.random::<f64>().powf(1.0 / p);
                        (th, weight.eval(th) * th.powf(delta) / k)
                    }
                    CellKind::Body { w_max } => {
                        let th = c.piece.quantile(c.lo, c.hi, rng.random());
                        (th, weight.eval(th) / w_max)
                    }
                    CellKind::Tail { w_m, r } => {
                        let e: f64 = rng.sample(Exp1);
                        let th = c.lo + e / r;
                        (th, weight.eval(th) * (th / c.lo).powf(c.piece.exponent) / (w_m * (-e).exp()))
                    }
                };
                debug_assert!(accept <= 1.0 + 1e-9, "envelope violated at θ = {theta}: {accept}");
                if theta > 0.0 && u < accept {
                    return theta;
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::TabulatedDensity;
    use crate::quadrature::Quadrature;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Compares the empirical CDF at a few quantiles with quadrature.
    fn check(mu: &MutationMeasure, weight: ThetaWeight, sampler: &ThetaSampler, scale: f64) {
        let quad = Quadrature::with_rel_tol(1e-9);
        let w = |t: f64| weight.eval(t);
        let total = mu.integrate(w, scale, &quad).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 40_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let x = xs[(q * n as f64) as usize];
            let p = mu.integrate_range(w, 0.0, x, scale.min(x), &quad).unwrap().value / total;
            let sd = (q * (1.0 - q) / n as f64).sqrt();
            assert!((p - q).abs() < 4.5 * sd, "{weight:?}: F({x}) = {p}, expected {q}");
        }
    }

    #[test]
    fn envelope_sampler_matches_weighted_cdf() {
        let stable = MutationMeasure::stable(1.0, 0.75).unwrap();
        for w in [
            ThetaWeight::Alive { k: 2e-3 },
            ThetaWeight::Survival { beta: 1.0, t: 0.3 },
            ThetaWeight::Jump { eps: 1e-3, beta: 1.0, t: 0.5 },
            ThetaWeight::Jump { eps: 1e-3, beta: 1.0, t: f64::INFINITY },
        ] {
            let s = ThetaSampler::weighted(&stable, w).unwrap();
            check(&stable, w, &s, 1.0);
        }
    }

    #[test]
    fn tabulated_and_exact_stable_marginal() {
        let tab = MutationMeasure::tabulated(TabulatedDensity {
            theta: vec![0.1, 1.0, 5.0],
            density: vec![2.0, 1.0, 0.1],
            exponent_zero: Some(-0.5),
            exponent_inf: Some(-1.5),
        })
        .unwrap();
        let w = ThetaWeight::Alive { k: 0.02 };
        check(&tab, w, &ThetaSampler::weighted(&tab, w).unwrap(), 1.0);
        let stable = MutationMeasure::stable(1.0, 0.5).unwrap();
        check(&stable, w, &ThetaSampler::alive(&stable, 1.0, 0.01).unwrap(), 50.0);
    }

    #[test]
    fn categorical_for_atoms() {
        let mu = MutationMeasure::dirac(2.0, 1.0).unwrap();
        let s = ThetaSampler::alive(&mu, 1.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| s.sample(&mut rng) == 2.0));
    }
}
