//! Execution of the subcommands.
//!
//! Analytic commands report {input, value, tolerance_achieved} records; in
//! self-check mode they also simulate the same quantity by an independent
//! route and compare within 3σ. Simulation commands always compare their
//! estimates with the analytic oracles; self-check mode turns a mismatch
//! into a failure.

use crate::config::{CommandArgs, RunConfig};
use crate::output::{cell, mc, num, record, scalar_or_list, Check, Outcome, Table};
use anyhow::Result;
use cbi_core::analytics::stable_constants;
use cbi_core::measure::{check_admissible, hits_zero_criterion, mean_z};
use cbi_core::sim::experiments::{
    run_bottleneck_experiment, run_family_count_experiment, run_fluctuation_experiment, RunSettings,
};
use cbi_core::sim::{run_replicas, AncestorSampler, PopulationOptions, PopulationSampler, TmrcaSampler};
use cbi_core::stats::{dispersion, laplace_estimate, McSummary};
use cbi_core::{BranchingParams, MutationMeasure, StationaryModel};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Binomial-proportion agreement within 3σ.
fn proportion_check(label: &str, hits: usize, n: usize, p: f64) -> Check {
    let est = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Check::new(format!("{label}: {est} vs {p} (±{se:.2e})"), (est - p).abs() <= 3.0 * se + 1e-12)
}

struct Ctx<'a> {
    config: &'a RunConfig,
    model: StationaryModel,
    workers: Option<usize>,
}

impl Ctx<'_> {
    fn settings(&self) -> RunSettings {
        let c = self.config;
        RunSettings { seed: c.seed, replicas: c.replicas, workers: self.workers, s_min: c.s_min, epsilon: c.epsilon }
    }

    fn population(&self, include_young: bool) -> Result<PopulationSampler> {
        let opts = PopulationOptions { include_young, epsilon: self.config.epsilon, ..Default::default() };
        Ok(PopulationSampler::new(&self.model, self.config.s_min, opts)?)
    }

    fn replicate<T: Send>(&self, f: impl Fn(&mut ChaCha8Rng) -> cbi_core::Result<T> + Sync) -> Result<Vec<T>> {
        Ok(run_replicas(self.config.seed, self.config.replicas, self.workers, |_, rng| f(rng))?)
    }
}

pub fn run(config: &RunConfig, workers: Option<usize>) -> Result<Outcome> {
    let params = BranchingParams::new(config.beta)?;
    if let CommandArgs::ValidateMeasure {} = config.command {
        return validate_measure(&config.measure, &params);
    }
    let cx = Ctx { config, model: StationaryModel::new(params, config.measure.clone())?, workers };
    match &config.command {
        CommandArgs::ValidateMeasure {} => unreachable!("handled above"),
        CommandArgs::Laplace { lambda } => laplace(&cx, lambda),
        CommandArgs::Tmrca { t } => tmrca(&cx, t),
        CommandArgs::MrcaType { t, q } => mrca_type(&cx, t, q),
        CommandArgs::Bottleneck {} => bottleneck(&cx),
        CommandArgs::SamplePopulation { include_young } => sample_population(&cx, *include_young),
        CommandArgs::Families { s } => families(&cx, s),
        CommandArgs::Ancestors { s, points } => ancestors(&cx, *s, points),
        CommandArgs::Fluctuations { s, points } => fluctuations(&cx, s, points),
        CommandArgs::StableReport {} => stable_report(&cx),
    }
}

fn validate_measure(mu: &MutationMeasure, params: &BranchingParams) -> Result<Outcome> {
    let quad = cbi_core::Quadrature::default();
    let r = check_admissible(mu, &quad)?;
    let mut o = Outcome::default();
    o.set("admissible", json!(r.admissible));
    o.set("total_mass", num(r.total_mass));
    o.set("near_zero_integral", num(r.near_zero_integral));
    o.set("tail_integral", num(r.tail_integral));
    o.set("zero_hitting", serde_json::to_value(hits_zero_criterion(mu, params, &quad)?)?);
    if r.admissible {
        o.set("mean_z", num(mean_z(mu, &quad)?));
    }
    Ok(o)
}

fn laplace(cx: &Ctx, lambdas: &[f64]) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut table = Table::new(vec!["lambda", "value", "tolerance_achieved"]);
    let mut values = Vec::new();
    for &l in lambdas {
        let e = cx.model.laplace_z0(l)?;
        o.records.push(record(json!({ "lambda": l }), e.value, e.rel_error()));
        table.push([l, e.value, e.rel_error()]);
        values.push(e.value);
    }
    if cx.config.self_check {
        let pop = cx.population(true)?;
        let z = cx.replicate(|rng| Ok(pop.sample_z0(rng)))?;
        for (&l, &v) in lambdas.iter().zip(&values) {
            o.checks.push(Check::mc(&format!("simulated E[exp(-{l} Z0)]"), &laplace_estimate(&z, l), v));
        }
    }
    o.set("lambda", scalar_or_list(lambdas));
    o.set("value", scalar_or_list(&values));
    o.table = Some(table);
    Ok(o)
}

fn tmrca(cx: &Ctx, ts: &[f64]) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut table = Table::new(vec!["t", "cdf", "density"]);
    let (mut cdfs, mut densities) = (Vec::new(), Vec::new());
    for &t in ts {
        let c = cx.model.cdf_a(t)?;
        let d = cx.model.density_a(t)?;
        o.records.push(record(json!({ "t": t, "quantity": "cdf" }), c.value, c.rel_error()));
        o.records.push(record(json!({ "t": t, "quantity": "density" }), d.value, d.rel_error()));
        table.push([t, c.value, d.value]);
        cdfs.push(c.value);
        densities.push(d.value);
    }
    if cx.config.self_check {
        // Independent route: A is the age of the oldest family of a population draw.
        let pop = cx.population(false)?;
        let ages = cx.replicate(|rng| Ok(pop.sample(rng).oldest().map_or(0.0, |f| f.birth_age)))?;
        for (&t, &c) in ts.iter().zip(&cdfs) {
            if t > cx.config.s_min {
                let hits = ages.iter().filter(|&&a| a <= t).count();
                o.checks.push(proportion_check(&format!("oldest-family P(A <= {t})"), hits, ages.len(), c));
            }
        }
    }
    o.set("t", scalar_or_list(ts));
    o.set("cdf", scalar_or_list(&cdfs));
    o.set("density", scalar_or_list(&densities));
    o.table = Some(table);
    Ok(o)
}

fn mrca_type(cx: &Ctx, ts: &[f64], qs: &[f64]) -> Result<Outcome> {
    let mut o = Outcome::default();
    let law = cx.model.mrca_law();
    let atomic = cx.model.mu().is_atomic();
    let mut table = Table::new(vec!["t", if atomic { "theta" } else { "q" }, if atomic { "probability" } else { "cdf" }]);
    let sampler = if cx.config.self_check { Some(TmrcaSampler::new(&cx.model)?) } else { None };
    let mut per_t = Vec::new();
    for &t in ts {
        let pairs: Vec<(f64, f64)> = if atomic {
            law.atom_weights(t)?
        } else {
            qs.iter().map(|&q| Ok((q, law.cdf(t, q)?))).collect::<Result<_>>()?
        };
        let key = if atomic { "theta" } else { "q" };
        for &(x, v) in &pairs {
            o.records.push(record(json!({ "t": t, key: x }), v, cx.model.quad().rel_tol));
            table.push([t, x, v]);
        }
        if let Some(s) = &sampler {
            let draws = cx.replicate(|rng| s.sample_theta_given_a(t, rng))?;
            for &(x, p) in &pairs {
                let hits = draws.iter().filter(|&&th| if atomic { th == x } else { th <= x }).count();
                let what = if atomic { format!("P(Theta = {x} | A = {t})") } else { format!("P(Theta <= {x} | A = {t})") };
                o.checks.push(proportion_check(&format!("sampled {what}"), hits, draws.len(), p));
            }
        }
        let (xs, vs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        per_t.push(json!({ "t": t, key: xs, if atomic { "probability" } else { "cdf" }: vs }));
    }
    o.set("laws", json!(per_t));
    o.table = Some(table);
    Ok(o)
}

fn bottleneck(cx: &Ctx) -> Result<Outcome> {
    let r = run_bottleneck_experiment(&cx.model, &cx.settings())?;
    let mut o = Outcome::default();
    let mut table = Table::new(vec!["a", "za", "z0"]);
    for row in &r.rows {
        table.push([row.a, row.za, row.z0]);
    }
    let m = mc(&r.mean_za, r.mean_za_oracle);
    for key in ["estimate", "mc_error", "oracle", "z_score"] {
        o.set(key, m[key].clone());
    }
    o.set("mean_z0", mc(&r.mean_z0, r.mean_z0_oracle));
    o.set("dominance_holds", json!(r.dominance_holds));
    o.set("worst_z", num(r.worst_z));
    for ((z, a), b) in r.dominance_grid.iter().zip(&r.cdf_za).zip(&r.cdf_z0) {
        o.records.push(json!({ "input": { "z": z }, "cdf_za": num(*a), "cdf_z0": num(*b) }));
    }
    o.records.push(json!({ "running_means": r.running_means }));
    o.checks.push(Check::new(format!("P(Z^A <= z) >= P(Z0 <= z), worst z-score {:.2}", r.worst_z), r.dominance_holds));
    if r.mean_za_oracle.is_finite() {
        o.checks.push(Check::mc("E[Z^A]", &r.mean_za, r.mean_za_oracle));
    }
    o.table = Some(table);
    Ok(o)
}

fn sample_population(cx: &Ctx, include_young: bool) -> Result<Outcome> {
    let pop = cx.population(include_young)?;
    let draws = cx.replicate(|rng| Ok(pop.sample(rng)))?;
    let mut o = Outcome::default();
    let mut table = Table::new(vec!["replica", "young", "birth_age", "theta", "mass"]);
    for (i, d) in draws.iter().enumerate() {
        for f in &d.families {
            table.push([i as f64, 0.0, f.birth_age, f.theta, f.mass]);
        }
        for &(theta, mass) in &d.young {
            table.push([i as f64, 1.0, f64::NAN, theta, mass]);
        }
    }
    let count = McSummary::from_values(draws.iter().map(|d| d.families.len() as f64));
    let mass = McSummary::from_values(draws.iter().map(|d| d.total_mass()));
    let full_mean = mean_z(cx.model.mu(), cx.model.quad())?;
    let mass_oracle = if include_young { full_mean } else { full_mean - pop.neglected_mass_mean() };
    o.set("families", mc(&count, pop.mean_families()));
    o.set("mass", mc(&mass, mass_oracle));
    o.set("neglected_mass_mean", num(pop.neglected_mass_mean()));
    o.checks.push(Check::mc("mean family count vs Lambda(s_min)", &count, pop.mean_families()));
    if mass_oracle.is_finite() {
        o.checks.push(Check::mc("mean mass", &mass, mass_oracle));
    }
    o.table = Some(table);
    Ok(o)
}

fn families(cx: &Ctx, ss: &[f64]) -> Result<Outcome> {
    let r = run_family_count_experiment(&cx.model, ss, &cx.settings())?;
    let mut o = Outcome::default();
    let mut table = Table::new(vec![
        "s",
        "lambda",
        "mean_count",
        "mc_error",
        "variance",
        "chi_square",
        "dof",
        "p_value",
        "scaled_mean",
        "scaled_mc_error",
        "c3",
    ]);
    let mut rows = Vec::new();
    for row in &r.rows {
        let gof = &row.goodness_of_fit;
        let (sm, se, c3) = row.stable_scaled.map_or((f64::NAN, f64::NAN, f64::NAN), |(m, c3)| (m.mean, m.std_error, c3));
        table.push([row.s, row.lambda, row.count.mean, row.count.std_error, row.variance, gof.statistic, gof.dof as f64, gof.p_value, sm, se, c3]);
        let mut v = json!({
            "s": row.s,
            "count": mc(&row.count, row.lambda),
            "variance": num(row.variance),
            "chi_square_p": num(gof.p_value),
        });
        o.checks.push(Check::new(format!("N_{} ~ Poisson({}): chi-square p = {:.3}", row.s, row.lambda, gof.p_value), gof.p_value > 1e-3));
        if let Some((m, c3)) = &row.stable_scaled {
            v["scaled"] = mc(m, *c3);
            o.checks.push(Check::mc(&format!("s^alpha N_s at s = {}", row.s), m, *c3));
        }
        o.records.push(v.clone());
        rows.push(v);
    }
    o.set("rows", json!(rows));
    o.table = Some(table);
    Ok(o)
}

fn ancestors(cx: &Ctx, s: f64, points: &[[f64; 3]]) -> Result<Outcome> {
    let opts = PopulationOptions { include_young: true, epsilon: cx.config.epsilon, ..Default::default() };
    let sampler = AncestorSampler::new(&cx.model, s, cx.config.s_min, opts)?;
    let draws = cx.replicate(|rng| Ok(sampler.sample(rng)))?;
    let mut o = Outcome::default();
    let mut table = Table::new(vec!["z_minus_s", "ns", "ms", "z0", "ws"]);
    for d in &draws {
        table.push([d.z_minus_s, d.ns as f64, d.ms as f64, d.z0, d.ws]);
    }
    let mut transforms = Vec::new();
    for &[rho, lambda, eta] in points {
        let oracle = cx.model.joint_laplace_zzm(s, rho, lambda, eta)?.value;
        let est = McSummary::from_values(
            draws.iter().map(|d| (-rho * d.z_minus_s - lambda * d.z0 - eta * d.ms as f64).exp()),
        );
        let mut v = mc(&est, oracle);
        v["input"] = json!({ "rho": rho, "lambda": lambda, "eta": eta });
        o.checks.push(Check::mc(&format!("E[exp(-{rho} Z_-s - {lambda} Z0 - {eta} M_s)]"), &est, oracle));
        o.records.push(v.clone());
        transforms.push(v);
    }
    let pairs: Vec<(f64, f64)> = draws.iter().map(|d| (d.ms as f64, d.ws)).collect();
    let disp = dispersion(&pairs);
    let ns = McSummary::from_values(draws.iter().map(|d| d.ns as f64));
    let ns_oracle = cx.model.lambda_of_s(s)?.value - sampler.ns_bias();
    o.checks.push(Check::new(
        format!("M_s | W_s Poisson: index {} ± {}, slope {} ± {}", disp.index, disp.index_se, disp.slope, disp.slope_se),
        disp.passes(3.0),
    ));
    o.checks.push(Check::mc("E[N_s] vs Lambda(s + s_min)", &ns, ns_oracle));
    o.set("s", num(s));
    o.set("transforms", json!(transforms));
    o.set("dispersion", serde_json::to_value(disp)?);
    o.set("ns", mc(&ns, ns_oracle));
    o.set("ns_bias", num(sampler.ns_bias()));
    o.table = Some(table);
    Ok(o)
}

fn fluctuations(cx: &Ctx, ss: &[f64], points: &[[f64; 3]]) -> Result<Outcome> {
    let r = run_fluctuation_experiment(&cx.model, ss, points, &cx.settings())?;
    let mut o = Outcome::default();
    let mut table =
        Table::new(vec!["s", "rho", "lambda", "eta", "estimate", "mc_error", "finite_s", "limit"]);
    let mut stable = Vec::new();
    for row in &r.rows {
        for f in &row.functionals {
            let [rho, lambda, eta] = f.point;
            let (fin, lim) = (f.finite_s.unwrap_or(f64::NAN), f.limit.unwrap_or(f64::NAN));
            table.push([row.s, rho, lambda, eta, f.empirical.mean, f.empirical.std_error, fin, lim]);
            let mut v = mc(&f.empirical, fin);
            v["input"] = json!({ "s": row.s, "rho": rho, "lambda": lambda, "eta": eta });
            v["limit"] = num(lim);
            o.records.push(v);
            if let Some(fin) = f.finite_s {
                o.checks.push(Check::mc(&format!("s = {}, point {:?}", row.s, f.point), &f.empirical, fin));
            }
        }
        if let Some(st) = &row.stable {
            stable.push(json!({
                "s": row.s,
                "mean": mc(&st.mean, st.oracle),
                "variance": num(st.variance),
                "median": num(st.median),
                "median_interval": [num(st.median_interval.0), num(st.median_interval.1)],
                "residual_ratio": mc(&st.residual_ratio, 1.0),
            }));
        }
    }
    o.set("condition_holds", json!(r.condition_holds));
    o.set("s", scalar_or_list(ss));
    if !stable.is_empty() {
        o.set("stable_statistic", json!(stable));
    }
    o.table = Some(table);
    Ok(o)
}

fn stable_report(cx: &Ctx) -> Result<Outcome> {
    let MutationMeasure::Stable { c, alpha } = *cx.model.mu() else {
        anyhow::bail!(cbi_core::Error::Config("stable-report needs a stable measure".into()));
    };
    let k = stable_constants(c, alpha, cx.model.params(), cx.model.quad())?;
    let laws = k.theta_laws()?;
    let (f, fs, eh) = laws.normalisation_checks()?;
    let mut o = Outcome::default();
    let tol = cx.model.quad().rel_tol;
    let constants = [("c1", k.c1), ("c2", k.c2), ("c3", k.c3), ("a1", k.a1), ("a2", k.a2), ("b", laws.b())];
    let mut table = Table::new(vec!["quantity", "value"]);
    for (name, v) in constants {
        o.set(name, num(v));
        o.records.push(record(json!({ "quantity": name }), v, tol));
        table.rows.push(vec![name.to_string(), cell(v)]);
    }
    o.set("h", k.h_alpha.map_or(serde_json::Value::Null, num));
    o.set("mean_za", num(k.mean_za()));
    o.set("normalisation", json!({ "f": num(f), "f_star": num(fs), "e_h_s": num(eh) }));
    for (name, v) in [("integral of f", f), ("integral of f*", fs), ("E[h(S)]", eh)] {
        o.checks.push(Check::new(format!("{name} = {v} (tol 1e-6)"), (v - 1.0).abs() <= 1e-6));
    }
    for s in [1e-2, 1.0] {
        let scaled = cx.model.lambda_of_s(s)?.value * f64::powf(s, alpha);
        o.checks.push(Check::new(
            format!("s^alpha Lambda(s) = {scaled} vs C3 = {} at s = {s}", k.c3),
            ((scaled - k.c3) / k.c3).abs() <= 1e-8,
        ));
    }
    o.table = Some(table);
    Ok(o)
}
