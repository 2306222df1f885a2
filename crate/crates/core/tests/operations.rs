//! Documented evaluation examples, each against an independent closed form
//! (and the quoted decimal where one is given).

mod common;

use cbi_core::analytics::neutral_stable_family_asymptote;
use cbi_core::kernel::{
    c_theta, delta_theta, gamma_excursion, sample_mass_given_alive, sample_transition, u_theta, FamilyLaw,
};
use cbi_core::measure::{lambda_of_s, log_integral};
use cbi_core::sim::run_replicas;
use cbi_core::stats::McSummary;
use cbi_core::{BranchingParams, MutationMeasure, Quadrature, StationaryModel};
use std::f64::consts::{LN_2, PI};

fn unit() -> FamilyLaw {
    FamilyLaw::new(1.0, BranchingParams::new(1.0).unwrap()).unwrap()
}

fn dirac1() -> StationaryModel {
    StationaryModel::new(BranchingParams::new(1.0).unwrap(), MutationMeasure::dirac(1.0, 1.0).unwrap()).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn laplace_exponent_examples() {
    let law = unit();
    assert_eq!(u_theta(&law, 5.0, 0.0).unwrap(), 5.0);
    let u = u_theta(&law, 1.0, 0.5).unwrap();
    assert!(close(u, common::u_family(1.0, 1.0, 1.0, 0.5), 1e-14));
    assert!((u - 0.27953).abs() < 5e-6);
    let c = 2.0 / (std::f64::consts::E - 1.0);
    assert!(close(u_theta(&law, 1e12, 0.5).unwrap(), c, 1e-10));
    assert!((c - 1.16395).abs() < 5e-6);
}

#[test]
fn extinction_and_delta_examples() {
    let law = unit();
    assert!(close(c_theta(&law, LN_2 / 2.0).unwrap(), 2.0, 1e-14));
    assert!(close(c_theta(&law, 0.5).unwrap(), common::c_family(1.0, 1.0, 0.5), 1e-14));
    assert_eq!(delta_theta(&law, 0.0).unwrap(), 0.0);
    assert!(close(delta_theta(&law, 1e6).unwrap(), 0.5, 1e-15));
    let d = delta_theta(&law, 0.5).unwrap();
    assert!(close(d, common::delta_family(1.0, 1.0, 0.5), 1e-14));
    assert!((d - 0.31606).abs() < 5e-6);
}

#[test]
fn excursion_transform_examples() {
    let law = unit();
    for (l, r) in [(0.3, 0.2), (2.0, 1.5)] {
        assert!(close(gamma_excursion(&law, r, l, 0.0).unwrap(), u_theta(&law, l, r).unwrap(), 1e-14));
    }
    assert!(close(gamma_excursion(&law, 0.5, 0.0, 50.0).unwrap(), common::c_family(1.0, 1.0, 0.5), 1e-12));
    let e = (-1.0f64).exp();
    let oracle = (1.0 - e) * common::c_family(1.0, 1.0, 0.5) + e * common::u_family(1.0, 1.0, 1.0, 0.5);
    let v = gamma_excursion(&law, 0.5, 1.0, 1.0).unwrap();
    assert!(close(v, oracle, 1e-14));
    // 30-digit evaluation of the same expression.
    assert!(close(v, 0.838592533166876, 1e-13));
}

#[test]
fn transition_sampler_moments() {
    let law = unit();
    let ys = run_replicas(11, 1_000_000, None, |_, rng| sample_transition(&law, 1.0, 0.5, rng)).unwrap();
    let mean = McSummary::from_values(ys.iter().copied());
    assert!(mean.agrees((-1.0f64).exp(), 3.0, 0.0), "{mean:?}");
    let lt = McSummary::from_values(ys.iter().map(|y| (-y).exp()));
    let oracle = (-common::u_family(1.0, 1.0, 1.0, 0.5)).exp();
    assert!(lt.agrees(oracle, 3.0, 0.0), "{lt:?} vs {oracle}");
    assert!((oracle - 0.75614).abs() < 5e-6);
}

#[test]
fn mass_given_alive_mean() {
    let law = unit();
    let ys = run_replicas(12, 1_000_000, None, |_, rng| sample_mass_given_alive(&law, 0.5, rng)).unwrap();
    let mean = McSummary::from_values(ys);
    assert!(mean.agrees(common::delta_family(1.0, 1.0, 0.5), 3.0, 0.0), "{mean:?}");
    let far = run_replicas(13, 100_000, None, |_, rng| sample_mass_given_alive(&law, 100.0, rng)).unwrap();
    assert!(McSummary::from_values(far).agrees(0.5, 3.0, 0.0));
}

#[test]
fn measure_integral_examples() {
    let q = Quadrature::default();
    let dirac = MutationMeasure::dirac(1.0, 1.0).unwrap();
    assert!(close(log_integral(&dirac, 2.0, &q).unwrap().value, LN_2, 1e-14));
    let stable = MutationMeasure::stable(1.0, 0.5).unwrap();
    assert_eq!(log_integral(&stable, 0.0, &q).unwrap().value, 0.0);
    // ∫ log(1 + λ/2θ) θ^{α−1} dθ = (λ/2)^α π/(α sin πα).
    let a = 0.5;
    let oracle = 0.5f64.powf(a) * PI / (a * (PI * a).sin());
    assert!(close(log_integral(&stable, 1.0, &q).unwrap().value, oracle, 1e-9));

    let beta = BranchingParams::new(1.0).unwrap();
    let l = lambda_of_s(&dirac, &beta, 0.5, &q).unwrap().value;
    assert!(close(l, -2.0 * (1.0 - (-1.0f64).exp()).ln(), 1e-14));
    assert!((l - 0.91735).abs() < 5e-6);
    let c3 = common::stable_c3_series(1.0, common::gamma_half(), 0.5, 1.0);
    assert!(close(lambda_of_s(&stable, &beta, 1.0, &q).unwrap().value, c3, 1e-9));
}

#[test]
fn stationary_law_examples() {
    let m = dirac1();
    assert!(close(m.laplace_z0(2.0).unwrap().value, 0.25, 1e-14));
    assert_eq!(m.laplace_z0(0.0).unwrap().value, 1.0);
    // d/dλ E[e^{−λZ}] at 0⁺ = −E[Z] = −1, by a one-sided Richardson difference.
    let h = 1e-4;
    let f = |x: f64| m.laplace_z0(x).unwrap().value;
    let d1 = (f(h) - 1.0) / h;
    let d2 = (f(h / 2.0) - 1.0) / (h / 2.0);
    assert!(close(2.0 * d2 - d1, -1.0, 1e-7));

    let cdf = m.cdf_a(0.5).unwrap().value;
    assert!(close(cdf, (1.0 - (-1.0f64).exp()).powi(2), 1e-14));
    assert!((cdf - 0.39958).abs() < 5e-6);

    let za = m.laplace_za_given_a(0.5, 1.0).unwrap().value;
    assert!(close(za, (1.0 + common::delta_family(1.0, 1.0, 0.5)).powi(-2), 1e-14));
    assert!(close(za, 0.577362318946738, 1e-13));

    let z1 = m.laplace_z0(1.0).unwrap().value;
    assert!(close(m.joint_laplace_zzm(0.7, 1.0, 0.0, 0.0).unwrap().value, z1, 1e-12));
    assert!(close(m.joint_laplace_zzm(0.7, 0.0, 1.0, 0.0).unwrap().value, z1, 1e-12));
    let direct = common::dirac_joint_laplace(1.0, 1.0, 1.0, 0.7, 0.3, 0.4, 0.5);
    assert!(close(m.joint_laplace_zzm(0.7, 0.3, 0.4, 0.5).unwrap().value, direct, 1e-12));
}

#[test]
fn neutral_stable_asymptote_example() {
    let v = neutral_stable_family_asymptote(2.0, 1.0, 0.5).unwrap();
    assert!(close(v, -2.0 * (1.0 - (-0.5f64).exp()).ln(), 1e-14));
    assert!(close(v, 1.865504259134377, 1e-13));
}
