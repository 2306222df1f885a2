//! Special functions not provided by `statrs`.

pub use statrs::function::gamma::{gamma, ln_gamma};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ln(1 − e^{−x}) for x > 0, accurate at both ends.
pub fn log1mexp(x: f64) -> f64 {
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// Exponential integral E1(x) = ∫_x^∞ e^{−y}/y dy for x > 0.
///
/// Power series below 1, modified Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x > 740.0 {
        return 0.0;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1.
        for (x, v) in [
            (0.1, 1.822_923_958_419_390_7),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_27),
            (2.0, 0.048_900_510_708_061_12),
            (10.0, 4.156_968_929_685_324e-6),
        ] {
            assert!((exp_integral_e1(x) - v).abs() < 1e-14 * v.max(1.0), "x={x}");
        }
    }

    #[test]
    fn e1_continuous_at_switch() {
        let lo = exp_integral_e1(1.0 - 1e-12);
        let hi = exp_integral_e1(1.0 + 1e-12);
        assert!((lo - hi).abs() < 1e-11);
    }

    #[test]
    fn log1mexp_matches_naive_in_safe_range() {
        for x in [0.1, 0.5, 1.0, 3.0] {
            let naive = (1.0 - (-x as f64).exp()).ln();
            assert!((log1mexp(x) - naive).abs() < 1e-14);
        }
        assert!((log1mexp(1e-20) - (1e-20f64).ln()).abs() < 1e-12);
    }
}
