//! Independent oracles for the integration suites.
//!
//! Nothing here calls the library's quadrature or closed forms: integrals use
//! composite Gauss–Legendre rules, ζ uses Euler–Maclaurin, and the atomic
//! transforms are re-derived from the single-family Laplace exponent.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of the 20-point Gauss–Legendre rule on [−1, 1].
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 20;
        let (mut xs, mut ws) = (Vec::new(), Vec::new());
        for i in 1..=n {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            xs.push(x);
            ws.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        (xs, ws)
    })
}

/// ∫_a^b f over `panels` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (xs, ws) = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in xs.iter().zip(ws) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// ∫ f(θ)dθ over θ ∈ [e^{v0}, e^{v1}] in the variable v = ln θ, unit panels.
pub fn integrate_log(f: impl Fn(f64) -> f64, v0: f64, v1: f64) -> f64 {
    let panels = ((v1 - v0).ceil() as usize).max(1);
    integrate(
        |v| {
            let t = v.exp();
            f(t) * t
        },
        v0,
        v1,
        panels,
    )
}

/// Riemann ζ(s) for s > 1 by Euler–Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    let n: f64 = 30.0;
    let mut sum: f64 = (1..30).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // B_{2k}/(2k)! for k = 1..5.
    let b = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0, 1.0 / 47900160.0];
    let mut rising = s;
    let mut power = n.powf(-s - 1.0);
    for (k, bk) in b.iter().enumerate() {
        sum += bk * rising * power;
        let j = 2 * k as i32 + 1;
        rising *= (s + j as f64) * (s + j as f64 + 1.0);
        power /= n * n;
    }
    sum
}

/// Single-family Laplace exponent u^θ(λ, t), written from its ODE solution.
pub fn u_family(theta: f64, beta: f64, lambda: f64, t: f64) -> f64 {
    let k = 2.0 * beta * theta;
    let e = (-k * t).exp();
    lambda * e / (1.0 + lambda * (1.0 - e) / (2.0 * theta))
}

/// c^θ(t) = lim_{λ→∞} u^θ(λ, t).
pub fn c_family(theta: f64, beta: f64, t: f64) -> f64 {
    let k = 2.0 * beta * theta;
    2.0 * theta * (-k * t).exp() / (1.0 - (-k * t).exp())
}

pub fn delta_family(theta: f64, beta: f64, t: f64) -> f64 {
    (1.0 - (-2.0 * beta * theta * t).exp()) / (2.0 * theta)
}

/// E[exp(−ρZ_{−s} − λZ₀ − ηM_s)] for μ = m·δ_θ.
pub fn dirac_joint_laplace(theta: f64, m: f64, beta: f64, s: f64, rho: f64, lambda: f64, eta: f64) -> f64 {
    let g = (1.0 - (-eta).exp()) * c_family(theta, beta, s) + (-eta).exp() * u_family(theta, beta, lambda, s);
    let w = (rho + g) / (2.0 * theta);
    ((1.0 + lambda * delta_family(theta, beta, s)) * (1.0 + w)).powf(-2.0 * m)
}

/// C₃ = s^α Λ(s) for stable μ(dθ) = cθ^{α−1}dθ, from the series
/// −log(1 − e^{−x}) = Σ e^{−nx}/n: C₃ = 2cΓ(α)ζ(1+α)(2β)^{−α}.
pub fn stable_c3_series(c: f64, gamma_alpha: f64, alpha: f64, beta: f64) -> f64 {
    2.0 * c * gamma_alpha * zeta(1.0 + alpha) * (2.0 * beta).powf(-alpha)
}

/// E[Z^A] for stable μ by brute-force nested quadrature of the defining
/// triple integral: for each t, the three θ-integrals are computed
/// numerically, and the t-integral gets an explicit power-law tail.
pub fn stable_mean_za_nested(c: f64, alpha: f64, beta: f64) -> f64 {
    let inner = |t: f64| {
        let k = 2.0 * beta * t;
        let centre = -k.ln();
        let i1 = integrate_log(|th| c * th.powf(alpha - 1.0) * 2.0 * th / (k * th).exp_m1(), centre - 60.0, centre + 7.0);
        let far = centre + 40.0;
        let i2 = integrate_log(|th| c * th.powf(alpha - 1.0) * -(-k * th).exp_m1() / th, centre - 60.0, far)
            + c * far.exp().powf(alpha - 1.0) / (1.0 - alpha);
        let i3 = integrate_log(|th| c * th.powf(alpha - 1.0) * (-(-k * th).exp_m1()).ln(), centre - 60.0, centre + 7.0);
        2.0 * beta * i1 * i2 * (2.0 * i3).exp()
    };
    let (v0, v1) = (-30.0, 100.0);
    let body = integrate(|v| inner(v.exp()) * v.exp(), v0, v1, 130);
    // t·g(t) ∝ t^{1−2α} beyond e^{v1}.
    body + inner(v1.exp()) * v1.exp() / (2.0 * alpha - 1.0)
}

/// √π.
pub fn gamma_half() -> f64 {
    PI.sqrt()
}
