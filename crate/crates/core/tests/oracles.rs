//! Self-checks of the independent oracles against known constants.

mod common;

use std::f64::consts::PI;

#[test]
fn gauss_legendre_is_exact_for_polynomials() {
    assert!((common::integrate(|x| x.powi(7), 0.0, 2.0, 1) - 32.0).abs() < 1e-12);
    assert!((common::integrate_log(|x| x * (-x).exp(), -40.0, 5.0) - 1.0).abs() < 1e-9);
}

#[test]
fn zeta_reference_values() {
    assert!((common::zeta(2.0) - PI * PI / 6.0).abs() < 1e-13);
    assert!((common::zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
}

#[test]
fn dirac_joint_transform_marginals() {
    // η = λ = 0 gives E[e^{−ρZ}] = (1 + ρ/2)^{−2} for μ = δ₁, β = 1.
    let v = common::dirac_joint_laplace(1.0, 1.0, 1.0, 0.5, 1.0, 0.0, 0.0);
    assert!((v - 1.0 / 2.25).abs() < 1e-15);
}
