//! Monte Carlo summaries and the hypothesis tests used to validate samplers.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
}

impl McSummary {
    pub fn from_values<I: IntoIterator<Item = f64>>(xs: I) -> Self {
        // Welford's update keeps the variance accurate for large n.
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { f64::NAN };
        Self { n, mean, std_error: (var / n as f64).sqrt() }
    }

    /// (mean − oracle)/std_error.
    pub fn z_score(&self, oracle: f64) -> f64 {
        (self.mean - oracle) / self.std_error
    }

    /// |mean − oracle| ≤ k·std_error + slack.
    pub fn agrees(&self, oracle: f64, k: f64, slack: f64) -> bool {
        (self.mean - oracle).abs() <= k * self.std_error + slack
    }
}

/// Empirical Laplace transform E[e^{−λX}].
pub fn laplace_estimate(xs: &[f64], lambda: f64) -> McSummary {
    McSummary::from_values(xs.iter().map(|x| (-lambda * x).exp()))
}

/// Fraction of sorted values ≤ z.
pub fn ecdf(sorted: &[f64], z: f64) -> f64 {
    sorted.partition_point(|&x| x <= z) as f64 / sorted.len() as f64
}

/// Pointwise check of P(X ≤ z) ≥ P(Y ≤ z) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub grid: Vec<f64>,
    pub cdf_x: Vec<f64>,
    pub cdf_y: Vec<f64>,
    /// Most negative (F_X − F_Y)/σ over the grid, σ the binomial standard
    /// error of the difference.
    pub worst_z: f64,
    /// worst_z ≥ −k.
    pub holds: bool,
}

/// Tests that X is stochastically smaller than Y within k-σ binomial bands.
pub fn dominance(x: &[f64], y: &[f64], grid: &[f64], k: f64) -> DominanceReport {
    let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (mut cdf_x, mut cdf_y, mut worst_z) = (Vec::new(), Vec::new(), f64::INFINITY);
    for &z in grid {
        let (fx, fy) = (ecdf(&xs, z), ecdf(&ys, z));
        let var = fx * (1.0 - fx) / xs.len() as f64 + fy * (1.0 - fy) / ys.len() as f64;
        let d = fx - fy;
        let zscore = if var > 0.0 {
            d / var.sqrt()
        } else if d >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        worst_z = worst_z.min(zscore);
        cdf_x.push(fx);
        cdf_y.push(fy);
    }
    DominanceReport { grid: grid.to_vec(), cdf_x, cdf_y, worst_z, holds: worst_z >= -k }
}

/// Empirical quantiles of the pooled sample, a convenient dominance grid.
pub fn quantile_grid(x: &[f64], y: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = x.iter().chain(y).copied().collect();
    all.sort_by(f64::total_cmp);
    probs.iter().map(|p| all[((p * all.len() as f64) as usize).min(all.len() - 1)]).collect()
}

/// Asymptotic Kolmogorov survival function P(K > λ).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("KS test needs two nonempty samples".into()));
    }
    let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    Ok((d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)))
}

/// Chi-square goodness of fit of counts to Poisson(mean).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Bins are merged so that every expected count is at least 5.
pub fn chi_square_poisson(counts: &[u64], mean: f64) -> Result<ChiSquareReport> {
    let law = Poisson::new(mean).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let n = counts.len() as f64;
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0.0; max as usize + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    // (observed, expected) per merged bin; the last bin takes the upper tail.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (k, obs) in observed.iter().enumerate() {
        o += obs;
        e += n * law.pmf(k as u64);
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    let tail = n - bins.iter().map(|b| b.1).sum::<f64>();
    match bins.last_mut() {
        Some(last) if tail < 5.0 => {
            last.0 += o;
            last.1 += tail;
        }
        _ => bins.push((o, tail)),
    }
    if bins.len() < 2 {
        return Err(Error::InvalidInput("too few observations for a chi-square test".into()));
    }
    let statistic = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(e.to_string()))?.cdf(statistic);
    Ok(ChiSquareReport { statistic, dof, p_value })
}

/// Sample median with a distribution-free confidence interval from order
/// statistics at ±k standard deviations of the binomial rank.
pub fn median_interval(xs: &[f64], k: f64) -> Result<(f64, f64, f64)> {
    if xs.len() < 10 {
        return Err(Error::InvalidInput("median interval needs at least 10 values".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let half = k * n.sqrt() / 2.0;
    let lo = ((n / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((n / 2.0 + half).ceil() as usize).min(v.len() - 1);
    Ok((v[v.len() / 2], v[lo], v[hi]))
}

/// Checks of M ~ Poisson(W) given W from paired draws (M_i, W_i).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    /// Σ(M − W)²/ΣW, 1 under the Poisson hypothesis.
    pub index: f64,
    pub index_se: f64,
    /// Least-squares slope of M on W through the origin, 1 under the hypothesis.
    pub slope: f64,
    pub slope_se: f64,
}

impl DispersionReport {
    pub fn passes(&self, k: f64) -> bool {
        (self.index - 1.0).abs() <= k * self.index_se && (self.slope - 1.0).abs() <= k * self.slope_se
    }
}

pub fn dispersion(pairs: &[(f64, f64)]) -> DispersionReport {
    let (mut sw, mut sw2, mut sw3, mut sd2, mut smw, mut sv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(m, w) in pairs {
        sw += w;
        sw2 += w * w;
        sw3 += w * w * w;
        sd2 += (m - w) * (m - w);
        smw += m * w;
        // Var((M − W)² | W) = W + 2W² for Poisson M.
        sv += w + 2.0 * w * w;
    }
    DispersionReport { index: sd2 / sw, index_se: sv.sqrt() / sw, slope: smw / sw2, slope_se: sw3.sqrt() / sw2 }
}
