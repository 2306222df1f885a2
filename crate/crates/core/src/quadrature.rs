//! Double-exponential quadrature.
//!
//! Finite intervals use the tanh-sinh map, half-lines the exp-sinh map. Both
//! cluster nodes double-exponentially at the ends, which handles integrable
//! endpoint singularities (logarithms, inverse powers) and slowly decaying
//! tails without a priori knowledge of their strength. Nodes near a finite end
//! are generated from the distance to that end so that no precision is lost
//! when the end is at the origin.
//!
//! Refinement halves the step until two successive estimates agree within the
//! requested tolerance. Because the rule converges quadratically the reported
//! error is a conservative bound on the true error.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// An integral estimate together with the last refinement difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0 }
    }

    /// Relative error, with exact zeros reported as zero error.
    pub fn rel_error(&self) -> f64 {
        if self.abs_error == 0.0 {
            0.0
        } else {
            self.abs_error / self.value.abs()
        }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate { value: self.value + rhs.value, abs_error: self.abs_error + rhs.abs_error }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::exact(0.0), |a, b| a + b)
    }
}

/// Tolerances and refinement limit for the double-exponential rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-300, max_level: 11 }
    }
}

const MIN_LEVEL: u32 = 3;
const T_MAX: f64 = 6.5;

impl Quadrature {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    /// ∫_a^b f(x) dx for finite a < b (tanh-sinh). Returns zero when a == b.
    pub fn finite<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput(format!("finite interval required, got [{a}, {b}]")));
        }
        if a == b {
            return Ok(Estimate::exact(0.0));
        }
        if a > b {
            return self.finite(f, b, a).map(|e| Estimate { value: -e.value, ..e });
        }
        let hw = 0.5 * (b - a);
        let node = |t: f64| {
            let u = FRAC_PI_2 * t.sinh();
            let e = (-2.0 * u.abs()).exp();
            let delta = 2.0 * e / (1.0 + e);
            let w = hw * FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
            let x = if t < 0.0 { a + hw * delta } else { b - hw * delta };
            if t != 0.0 && (x <= a || x >= b) {
                None
            } else {
                Some((x, w))
            }
        };
        self.de_sum(&f, node)
    }

    /// ∫_a^∞ f(x) dx (exp-sinh) with `scale` the length over which f varies.
    pub fn upper<F: Fn(f64) -> f64>(&self, f: F, a: f64, scale: f64) -> Result<Estimate> {
        if !a.is_finite() || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("bad half-line [{a}, inf) with scale {scale}")));
        }
        let node = |t: f64| {
            let u = FRAC_PI_2 * t.sinh();
            let d = scale * u.exp();
            let x = a + d;
            if !x.is_finite() || (t != 0.0 && x <= a) {
                None
            } else {
                Some((x, d * FRAC_PI_2 * t.cosh()))
            }
        };
        self.de_sum(&f, node)
    }

    /// ∫_{-∞}^b f(x) dx (exp-sinh reflected).
    pub fn lower<F: Fn(f64) -> f64>(&self, f: F, b: f64, scale: f64) -> Result<Estimate> {
        self.upper(|y| f(-y), -b, scale)
    }

    /// ∫_0^∞ f over the whole half-line, split at `split` to resolve two scales.
    pub fn positive_axis<F: Fn(f64) -> f64>(&self, f: F, split: f64) -> Result<Estimate> {
        Ok(self.finite(&f, 0.0, split)? + self.upper(&f, split, split)?)
    }

    fn de_sum<F, N>(&self, f: &F, node: N) -> Result<Estimate>
    where
        F: Fn(f64) -> f64,
        N: Fn(f64) -> Option<(f64, f64)>,
    {
        let term = |t: f64| -> Result<Option<f64>> {
            match node(t) {
                None => Ok(None),
                Some((x, w)) => {
                    let v = w * f(x);
                    if v.is_finite() {
                        Ok(Some(v))
                    } else {
                        Err(Error::Quadrature { achieved: f64::INFINITY, requested: self.rel_tol })
                    }
                }
            }
        };
        // Walks outward from `start` in increments of `stride`, stopping once the
        // terms become negligible against the running sum.
        let sweep = |sum: &mut f64, h: f64, start: i64, stride: i64| -> Result<()> {
            for sign in [1.0, -1.0] {
                let mut j = start;
                loop {
                    let t = sign * j as f64 * h;
                    if t.abs() > T_MAX {
                        break;
                    }
                    match term(t)? {
                        None => break,
                        Some(v) => {
                            *sum += v;
                            if t.abs() > 1.0 && v.abs() <= 1e-19 * sum.abs() {
                                break;
                            }
                        }
                    }
                    j += stride;
                }
            }
            Ok(())
        };

        let mut h = 1.0;
        let mut sum = term(0.0)?.unwrap_or(0.0);
        sweep(&mut sum, h, 1, 1)?;
        let mut prev = h * sum;
        let mut diff = f64::INFINITY;
        for level in 1..=self.max_level {
            h *= 0.5;
            sweep(&mut sum, h, 1, 2)?;
            let est = h * sum;
            diff = (est - prev).abs();
            prev = est;
            if level >= MIN_LEVEL && diff <= self.abs_tol.max(self.rel_tol * est.abs()) {
                return Ok(Estimate { value: est, abs_error: diff });
            }
        }
        Err(Error::Quadrature { achieved: diff / prev.abs(), requested: self.rel_tol })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn polynomial_on_interval() {
        let e = q().finite(|x| x * x, 0.0, 3.0).unwrap();
        assert!((e.value - 9.0).abs() < 1e-12);
    }

    #[test]
    fn log_singularity_at_origin() {
        let e = q().finite(|x: f64| -x.ln(), 0.0, 1.0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let e = q().finite(|x: f64| 1.0 / x.sqrt(), 0.0, 4.0).unwrap();
        assert!((e.value - 4.0).abs() < 1e-10);
    }

    #[test]
    fn exponential_tail() {
        let e = q().upper(|x: f64| (-x).exp(), 0.0, 1.0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn algebraic_tail() {
        let e = q().upper(|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0).unwrap();
        assert!((e.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn lower_half_line() {
        let e = q().lower(|x: f64| x.exp(), 0.0, 1.0).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let e = q().finite(|x| x, 1.0, 0.0).unwrap();
        assert!((e.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn nonintegrable_reports_error() {
        let r = Quadrature { max_level: 6, ..q() }.finite(|x: f64| 1.0 / x, 0.0, 1.0);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
