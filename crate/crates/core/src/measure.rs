//! The mutation rate measure μ and the θ-integrals built on it.
//!
//! Three representations are supported: finitely many atoms, the stable
//! density cθ^{α−1}, and a tabulated density interpolated as a power law
//! between grid nodes with declared power-law behaviour below the first and
//! above the last node. The endpoint exponents are mandatory for any
//! integral because integrability near 0 and ∞ is invisible on a finite grid.
//!
//! Absolutely continuous parts are integrated in v = ln θ, piece by piece,
//! split at a caller supplied θ-scale where the integrand changes regime;
//! atoms are summed exactly.

use crate::error::{positive, Error, Result};
use crate::kernel::BranchingParams;
use crate::quadrature::{Estimate, Quadrature};
use crate::special::log1mexp;
use serde::{Deserialize, Serialize};

/// A point mass `mass` at type `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub theta: f64,
    pub mass: f64,
}

/// Density on (0, ∞) given on a grid, power-law interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedDensity {
    pub theta: Vec<f64>,
    pub density: Vec<f64>,
    /// Exponent e₀ of the density ∝ θ^{e₀} below the first node.
    #[serde(default)]
    pub exponent_zero: Option<f64>,
    /// Exponent e_∞ of the density ∝ θ^{e_∞} above the last node.
    #[serde(default)]
    pub exponent_inf: Option<f64>,
}

/// The measure as it appears in JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum MeasureRepr {
    Atomic(Vec<Atom>),
    Stable(StableRepr),
    Tabulated(TabulatedDensity),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StableRepr {
    c: f64,
    alpha: f64,
}

/// The mutation rate measure μ(dθ) on (0, ∞).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub enum MutationMeasure {
    Atomic(Vec<Atom>),
    /// μ(dθ) = c θ^{α−1} dθ.
    Stable { c: f64, alpha: f64 },
    Tabulated(TabulatedDensity),
}

impl TryFrom<MeasureRepr> for MutationMeasure {
    type Error = Error;
    fn try_from(repr: MeasureRepr) -> Result<Self> {
        match repr {
            MeasureRepr::Atomic(atoms) => Self::atomic(atoms),
            MeasureRepr::Stable(s) => Self::stable(s.c, s.alpha),
            MeasureRepr::Tabulated(t) => Self::tabulated(t),
        }
    }
}

impl From<MutationMeasure> for MeasureRepr {
    fn from(m: MutationMeasure) -> Self {
        match m {
            MutationMeasure::Atomic(a) => MeasureRepr::Atomic(a),
            MutationMeasure::Stable { c, alpha } => MeasureRepr::Stable(StableRepr { c, alpha }),
            MutationMeasure::Tabulated(t) => MeasureRepr::Tabulated(t),
        }
    }
}

/// Density `d_anchor (θ/θ_anchor)^exponent` on the interval (lo, hi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPiece {
    pub lo: f64,
    pub hi: f64,
    pub anchor: f64,
    pub d_anchor: f64,
    pub exponent: f64,
}

impl PowerPiece {
    pub fn density(&self, theta: f64) -> f64 {
        self.d_anchor * (theta / self.anchor).powf(self.exponent)
    }

    /// ∫_a^b of the piece density in closed form (a may be 0, b may be ∞).
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let p = self.exponent + 1.0;
        let scale = self.d_anchor * self.anchor;
        let (ra, rb) = (a / self.anchor, b / self.anchor);
        if p.abs() < 1e-12 {
            scale * (rb / ra).ln()
        } else if p > 0.0 {
            // rb^p − ra^p, written to stay finite for ra = 0.
            scale * (rb.powf(p) - ra.powf(p)) / p
        } else {
            scale * (ra.powf(p) - rb.powf(p)) / -p
        }
    }

    /// Inverse CDF of the piece density restricted to (a, b) at u ∈ (0, 1).
    pub fn quantile(&self, a: f64, b: f64, u: f64) -> f64 {
        let p = self.exponent + 1.0;
        if p.abs() < 1e-12 {
            return a * (b / a).powf(u);
        }
        // Work relative to the end that keeps t^p bounded.
        if p > 0.0 {
            let (ap, bp) = (a.powf(p), b.powf(p));
            (ap + u * (bp - ap)).powf(1.0 / p)
        } else {
            let (ap, bp) = (a.powf(p), b.powf(p));
            (bp + (1.0 - u) * (ap - bp)).powf(1.0 / p)
        }
    }
}

impl MutationMeasure {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Config("atomic measure needs at least one atom".into()));
        }
        for a in &atoms {
            positive("atom theta", a.theta)?;
            positive("atom mass", a.mass)?;
        }
        Ok(Self::Atomic(atoms))
    }

    /// A single atom of mass `mass` at `theta`.
    pub fn dirac(theta: f64, mass: f64) -> Result<Self> {
        Self::atomic(vec![Atom { theta, mass }])
    }

    pub fn stable(c: f64, alpha: f64) -> Result<Self> {
        positive("c", c)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("stable alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self::Stable { c, alpha })
    }

    pub fn tabulated(t: TabulatedDensity) -> Result<Self> {
        if t.theta.len() < 2 || t.theta.len() != t.density.len() {
            return Err(Error::Config("tabulated measure needs matching theta/density grids of length >= 2".into()));
        }
        for w in t.theta.windows(2) {
            if !(w[0] > 0.0 && w[1] > w[0] && w[1].is_finite()) {
                return Err(Error::Config("tabulated theta grid must be positive and strictly increasing".into()));
            }
        }
        if t.density.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Config("tabulated densities must be positive and finite".into()));
        }
        for e in [t.exponent_zero, t.exponent_inf].into_iter().flatten() {
            if !e.is_finite() {
                return Err(Error::Config("endpoint exponents must be finite".into()));
            }
        }
        Ok(Self::Tabulated(t))
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        match self {
            Self::Atomic(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Atomic(_))
    }

    /// Lebesgue density of a continuous measure.
    pub fn density(&self, theta: f64) -> Option<f64> {
        match self {
            Self::Atomic(_) => None,
            Self::Stable { c, alpha } => Some(c * theta.powf(alpha - 1.0)),
            Self::Tabulated(_) => {
                let pieces = self.pieces().ok()?;
                pieces.iter().find(|p| theta >= p.lo && theta <= p.hi).map(|p| p.density(theta))
            }
        }
    }

    /// Exponents (e₀, e_∞) of the density near 0 and ∞.
    pub fn endpoint_exponents(&self) -> Result<(f64, f64)> {
        match self {
            Self::Atomic(_) => Err(Error::InvalidInput("atomic measures have no density".into())),
            Self::Stable { alpha, .. } => Ok((alpha - 1.0, alpha - 1.0)),
            Self::Tabulated(t) => match (t.exponent_zero, t.exponent_inf) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(Error::Indeterminate(
                    "tabulated measure without declared endpoint exponents: integrability near 0 or infinity is undecidable".into(),
                )),
            },
        }
    }

    /// The density as consecutive power-law pieces covering (0, ∞).
    pub fn pieces(&self) -> Result<Vec<PowerPiece>> {
        match self {
            Self::Atomic(_) => Ok(Vec::new()),
            Self::Stable { c, alpha } => Ok(vec![PowerPiece {
                lo: 0.0,
                hi: f64::INFINITY,
                anchor: 1.0,
                d_anchor: *c,
                exponent: alpha - 1.0,
            }]),
            Self::Tabulated(t) => {
                let (e0, einf) = self.endpoint_exponents()?;
                let n = t.theta.len();
                let mut out = Vec::with_capacity(n + 1);
                out.push(PowerPiece { lo: 0.0, hi: t.theta[0], anchor: t.theta[0], d_anchor: t.density[0], exponent: e0 });
                for i in 0..n - 1 {
                    let slope = (t.density[i + 1] / t.density[i]).ln() / (t.theta[i + 1] / t.theta[i]).ln();
                    out.push(PowerPiece {
                        lo: t.theta[i],
                        hi: t.theta[i + 1],
                        anchor: t.theta[i],
                        d_anchor: t.density[i],
                        exponent: slope,
                    });
                }
                out.push(PowerPiece {
                    lo: t.theta[n - 1],
                    hi: f64::INFINITY,
                    anchor: t.theta[n - 1],
                    d_anchor: t.density[n - 1],
                    exponent: einf,
                });
                Ok(out)
            }
        }
    }

    /// ⟨μ, 1⟩, possibly infinite.
    pub fn total_mass(&self) -> Result<f64> {
        match self {
            Self::Atomic(a) => Ok(a.iter().map(|a| a.mass).sum()),
            Self::Stable { .. } => Ok(f64::INFINITY),
            Self::Tabulated(_) => {
                let (e0, einf) = self.endpoint_exponents()?;
                if e0 <= -1.0 || einf >= -1.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(self.pieces()?.iter().map(|p| p.mass(p.lo, p.hi)).sum())
            }
        }
    }

    /// ∫ f dμ over (0, ∞); `scale` is a θ at which f changes behaviour.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, scale: f64, quad: &Quadrature) -> Result<Estimate> {
        self.integrate_range(f, 0.0, f64::INFINITY, scale, quad)
    }

    /// ∫ f dμ over (lo, hi]; atoms exactly at `lo` are excluded.
    pub fn integrate_range<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        scale: f64,
        quad: &Quadrature,
    ) -> Result<Estimate> {
        if let Self::Atomic(atoms) = self {
            let v = atoms.iter().filter(|a| a.theta > lo && a.theta <= hi).map(|a| a.mass * f(a.theta)).sum();
            return Ok(Estimate::exact(v));
        }
        let mut total = Estimate::exact(0.0);
        for p in self.pieces()? {
            let (a, b) = (p.lo.max(lo), p.hi.min(hi));
            if a >= b {
                continue;
            }
            let mut cuts = vec![a];
            if scale > a && scale < b {
                cuts.push(scale);
            }
            cuts.push(b);
            let (va, ea, d) = (p.anchor.ln(), p.exponent + 1.0, p.d_anchor * p.anchor);
            let g = |v: f64| {
                let theta = v.exp();
                if theta == 0.0 || !theta.is_finite() {
                    return 0.0;
                }
                let w = d * (ea * (v - va)).exp();
                if w == 0.0 {
                    0.0
                } else {
                    f(theta) * w
                }
            };
            for w in cuts.windows(2) {
                let (x, y) = (w[0], w[1]);
                let est = if x == 0.0 && y.is_infinite() {
                    quad.lower(&g, 0.0, 1.0)? + quad.upper(&g, 0.0, 1.0)?
                } else if x == 0.0 {
                    quad.lower(&g, y.ln(), 1.0)?
                } else if y.is_infinite() {
                    quad.upper(&g, x.ln(), 1.0)?
                } else {
                    quad.finite(&g, x.ln(), y.ln())?
                };
                total = total + est;
            }
        }
        Ok(total)
    }

    /// The pushforward μ′ of μ under θ ↦ √θ.
    ///
    /// Under μ′ the stationary sizes satisfy Z′ − Z″ =ᵈ √Z₀·G with G standard
    /// Gaussian, because ∫μ′(dθ) log(1 − λ²/4θ²) = ∫μ(dθ) log(1 − λ²/4θ).
    pub fn sqrt_pushforward(&self) -> Result<Self> {
        match self {
            Self::Atomic(a) => Self::atomic(a.iter().map(|a| Atom { theta: a.theta.sqrt(), mass: a.mass }).collect()),
            Self::Stable { c, alpha } => {
                if 2.0 * alpha >= 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "the sqrt pushforward of a stable measure with alpha = {alpha} >= 1/2 is not a stable mutation measure"
                    )));
                }
                Self::stable(2.0 * c, 2.0 * alpha)
            }
            Self::Tabulated(t) => {
                let (e0, einf) = self.endpoint_exponents()?;
                Self::tabulated(TabulatedDensity {
                    theta: t.theta.iter().map(|x| x.sqrt()).collect(),
                    density: t.theta.iter().zip(&t.density).map(|(x, d)| 2.0 * x.sqrt() * d).collect(),
                    exponent_zero: Some(2.0 * e0 + 1.0),
                    exponent_inf: Some(2.0 * einf + 1.0),
                })
            }
        }
    }
}

/// Integrability diagnostics for the stationary construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// ∫_{(0,1]} |log θ| μ(dθ).
    #[serde(with = "crate::serde_ext")]
    pub near_zero_integral: f64,
    /// ∫_{[1,∞)} μ(dθ)/θ.
    #[serde(with = "crate::serde_ext")]
    pub tail_integral: f64,
    pub admissible: bool,
    /// ⟨μ, 1⟩.
    #[serde(with = "crate::serde_ext")]
    pub total_mass: f64,
}

/// Decides whether the stationary size Z is finite for this μ.
pub fn check_admissible(mu: &MutationMeasure, quad: &Quadrature) -> Result<AdmissibilityReport> {
    let (near, tail) = match mu {
        MutationMeasure::Atomic(atoms) => (
            atoms.iter().filter(|a| a.theta <= 1.0).map(|a| -a.mass * a.theta.ln()).sum(),
            atoms.iter().filter(|a| a.theta >= 1.0).map(|a| a.mass / a.theta).sum(),
        ),
        _ => {
            let (e0, einf) = mu.endpoint_exponents()?;
            let near = if e0 > -1.0 { mu.integrate_range(|t| -t.ln(), 0.0, 1.0, 1.0, quad)?.value } else { f64::INFINITY };
            let tail =
                if einf < 0.0 { mu.integrate_range(|t| 1.0 / t, 1.0, f64::INFINITY, 1.0, quad)?.value } else { f64::INFINITY };
            (near, tail)
        }
    };
    Ok(AdmissibilityReport {
        near_zero_integral: near,
        tail_integral: tail,
        admissible: near.is_finite() && tail.is_finite(),
        total_mass: mu.total_mass()?,
    })
}

fn require_admissible(mu: &MutationMeasure, quad: &Quadrature) -> Result<()> {
    if mu.is_atomic() || check_admissible(mu, quad)?.admissible {
        Ok(())
    } else {
        Err(Error::InvalidInput("mutation measure is not admissible".into()))
    }
}

/// ∫ log(1 + λ/2θ) μ(dθ).
pub fn log_integral(mu: &MutationMeasure, lambda: f64, quad: &Quadrature) -> Result<Estimate> {
    crate::error::nonneg("lambda", lambda)?;
    if lambda == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    mu.integrate(|t| (lambda / (2.0 * t)).ln_1p(), lambda / 2.0, quad)
}

/// Λ(s) = −2∫ log(1 − e^{−2βθs}) μ(dθ), the mean number of families older
/// than s that are still alive.
pub fn lambda_of_s(mu: &MutationMeasure, params: &BranchingParams, s: f64, quad: &Quadrature) -> Result<Estimate> {
    positive("s", s)?;
    let k = 2.0 * params.beta() * s;
    let e = mu.integrate(|t| -log1mexp(k * t), 1.0 / k, quad)?;
    Ok(Estimate { value: 2.0 * e.value, abs_error: 2.0 * e.abs_error })
}

/// E[Z] = ∫ μ(dθ)/θ, possibly infinite.
pub fn mean_z(mu: &MutationMeasure, quad: &Quadrature) -> Result<f64> {
    match mu {
        MutationMeasure::Atomic(a) => Ok(a.iter().map(|a| a.mass / a.theta).sum()),
        MutationMeasure::Stable { .. } => Ok(f64::INFINITY),
        MutationMeasure::Tabulated(_) => {
            require_admissible(mu, quad)?;
            let (e0, _) = mu.endpoint_exponents()?;
            if e0 <= 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok(mu.integrate(|t| 1.0 / t, 1.0, quad)?.value)
        }
    }
}

/// Whether the stationary total size ever visits zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroHitting {
    NeverHitsZero,
    HitsZeroWithPositiveProb,
    Indeterminate,
}

/// Classifies zero hitting through ⟨μ,1⟩ versus 1/2; the boundary case probes
/// the divergence of ∫₀¹ e^{Λ(t)} dt decade by decade.
pub fn hits_zero_criterion(mu: &MutationMeasure, params: &BranchingParams, quad: &Quadrature) -> Result<ZeroHitting> {
    let mass = match mu.total_mass() {
        Ok(m) => m,
        Err(Error::Indeterminate(_)) => return Ok(ZeroHitting::Indeterminate),
        Err(e) => return Err(e),
    };
    const BOUNDARY_TOL: f64 = 1e-12;
    if mass > 0.5 + BOUNDARY_TOL {
        return Ok(ZeroHitting::NeverHitsZero);
    }
    if mass < 0.5 - BOUNDARY_TOL {
        return Ok(ZeroHitting::HitsZeroWithPositiveProb);
    }
    // Decade integrals J_j = ∫_{10^{-j-1}}^{10^{-j}} e^{Λ(t)} dt in u = ln t.
    let decade = |j: i32| -> Result<f64> {
        let (a, b) = (-(j as f64 + 1.0) * std::f64::consts::LN_10, -(j as f64) * std::f64::consts::LN_10);
        let probe = Quadrature::with_rel_tol(1e-8);
        let e = quad.finite(
            |u| {
                let t = u.exp();
                lambda_of_s(mu, params, t, &probe).map(|l| (l.value + u).exp()).unwrap_or(f64::NAN)
            },
            a,
            b,
        )?;
        Ok(e.value)
    };
    let js: Vec<f64> = (2..=9).map(decade).collect::<Result<_>>()?;
    let ratios: Vec<f64> = js.windows(2).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len() - 3..];
    if tail.iter().all(|r| *r >= 0.9) {
        Ok(ZeroHitting::NeverHitsZero)
    } else if tail.iter().all(|r| *r <= 0.5) {
        Ok(ZeroHitting::HitsZeroWithPositiveProb)
    } else {
        Ok(ZeroHitting::Indeterminate)
    }
}
