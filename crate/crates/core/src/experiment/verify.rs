//! Named property suites driven by `amc verify`.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::run::derive_seed;
use crate::combinatorics::{
    expected_first_one_position, first_one_tail, monte_carlo_detection, tau_pmf, tau_ratio, tau_ratio_closed_form,
    tau_total_mass, to_f64,
};
use crate::completion::{run_ercs, ErcsParams};
use crate::cost::{expand_column_costs, optimal_two_stage, run_erhc, run_erhc_column_costs};
use crate::error::{AmcError, Result};
use crate::generators::{erhc_tightness, gen_gaussian_lowrank, generate, paper_fixture, rng_from_seed, FixtureSpec};
use crate::linalg::{exact, DenseMatrix, Tolerance};
use crate::oracle::{CostModel, NoiseModel, ObservationOracle, UniformSampler};
use crate::sparsity::{nonsparsity_of_span, validate_profile, SubspaceProfile};

pub const SUITES: &[&str] = &["lemma1", "tightness", "first-one", "tail", "tau", "two-opt", "column-costs", "coherence", "dof"];

#[derive(Clone, Debug, Serialize)]
pub struct Property {
    pub name: String,
    pub pass: bool,
    pub detail: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub pass: bool,
    pub properties: Vec<Property>,
}

fn prop(name: &str, pass: bool, detail: serde_json::Value) -> Property {
    Property { name: name.to_string(), pass, detail }
}

pub fn verify(suite: &str, seed: u64) -> Result<VerifyReport> {
    let properties = match suite {
        "lemma1" => vec![lemma1(1000, seed)?],
        "tightness" => vec![tightness()?],
        "first-one" => first_one(seed)?,
        "tail" => vec![tail(seed)?],
        "tau" => tau()?,
        "two-opt" => two_opt(100, seed)?,
        "column-costs" => vec![column_costs(100, seed)?],
        "coherence" => coherence(1000, seed)?,
        "dof" => vec![dof(50, seed)?],
        other => return Err(AmcError::UnknownName(format!("verify suite {other:?}; known: {}", SUITES.join(", ")))),
    };
    Ok(VerifyReport { suite: suite.to_string(), pass: properties.iter().all(|p| p.pass), properties })
}

/// A random integer subspace with sparse generators, so that ψ̄ varies.
pub fn sparse_integer_span(m: usize, r: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    loop {
        let span = DenseMatrix::from_fn(m, r, |_, _| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(-3..=3) as f64 })
            .expect("nonempty");
        if exact::rank_of(&span) == r {
            return span;
        }
    }
}

/// Rank of the restricted vectors equals the full rank whenever |Ω| > ψ̄.
pub fn lemma1(instances: usize, seed: u64) -> Result<Property> {
    let results: Vec<(bool, bool)> = (0..instances)
        .into_par_iter()
        .map(|t| -> Result<(bool, bool)> {
            let s = derive_seed(seed, t, 0);
            let mut rng = rng_from_seed(s);
            let m = rng.random_range(3..=8);
            let r = rng.random_range(1..=m.min(4));
            let span = sparse_integer_span(m, r, s ^ 1);
            let psibar = m - nonsparsity_of_span(&span, Tolerance::exact())?;
            let size = rng.random_range(psibar + 1..=m);
            let omega = sample(&mut rng, m, size).into_vec();
            let k = rng.random_range(1..=r + 1);
            let vecs: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let c: Vec<f64> = (0..r).map(|_| rng.random_range(-2..=2) as f64).collect();
                    (0..m).map(|i| (0..r).map(|l| span.get(i, l) * c[l]).sum()).collect()
                })
                .collect();
            let full = DenseMatrix::from_columns(&vecs)?;
            let cols: Vec<usize> = (0..k).collect();
            let agree = exact::rank_of(&full) == exact::rank_of(&full.select(&omega, &cols)?);
            Ok((agree, exact::rank_of(&full) < k))
        })
        .collect::<Result<_>>()?;
    let disagreements = results.iter().filter(|r| !r.0).count();
    let dependent = results.iter().filter(|r| r.1).count();
    Ok(prop("lemma1", disagreements == 0, json!({"instances": instances, "disagreements": disagreements, "dependent_sets": dependent})))
}

/// The four-by-three witness: ψ̄ = 3 and three rows make independent columns dependent.
pub fn tightness() -> Result<Property> {
    let t = paper_fixture("tightness")?.matrix;
    let psibar = 4 - nonsparsity_of_span(&t, Tolerance::exact())?;
    let full = exact::rank_of(&t);
    let restricted = exact::rank_of(&t.select(&[1, 2, 3], &[0, 1, 2])?);
    Ok(prop(
        "tightness",
        psibar == 3 && full == 3 && restricted < 3,
        json!({"psibar": psibar, "full_rank": full, "restricted_rank": restricted}),
    ))
}

pub fn first_one(seed: u64) -> Result<Vec<Property>> {
    let mut out = Vec::new();
    for (m, k) in [(20u64, 3u64), (50, 5)] {
        let st = monte_carlo_detection(m, k, 100_000, seed)?;
        let expect = to_f64(&expected_first_one_position(m, k)?);
        let rel = (st.mean - expect).abs() / expect;
        out.push(prop(&format!("first-one m={m} k={k}"), rel <= 0.01, json!({"mean": st.mean, "expected": expect, "rel_err": rel})));
    }
    Ok(out)
}

pub fn tail(seed: u64) -> Result<Property> {
    let (m, k, trials) = (20u64, 3u64, 100_000u64);
    let st = monte_carlo_detection(m, k, trials, seed)?;
    let mut worst: f64 = 0.0;
    for a in 1..=5u64 {
        let p = to_f64(&first_one_tail(m, k, a)?);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        worst = worst.max((st.tail[a as usize] - p).abs() / sigma);
    }
    Ok(prop("tail", worst <= 3.0, json!({"max_sigma": worst})))
}

pub fn tau() -> Result<Vec<Property>> {
    let (k, m, r) = (3u64, 30u64, 4u64);
    let identity = (r..=10_000).into_par_iter().all(|n| tau_ratio(k, m, r, n).ok() == Some(tau_ratio_closed_form(k, m, r, n)));
    let (mass, tail) = tau_total_mass(k, m, r, 1e-13)?;
    let threshold = (2 * m / k + 1) * r;
    let mut bounds = true;
    for n in threshold + 1..threshold + 500 {
        let q = to_f64(&tau_ratio(k, m, r, n)?);
        let (kf, mf) = (k as f64, m as f64);
        bounds &= 1.0 - kf / mf < q && q < 1.0 - kf / (2.0 * mf);
    }
    let mut one_over_n = true;
    for nn in 1..=200u64 {
        one_over_n &= tau_pmf(k, m, r, 2 * m / k * (r + 1) + nn)? <= 1.0 / nn as f64;
    }
    Ok(vec![
        prop("tau ratio identity N<=1e4", identity, json!({"k": k, "m": m, "r": r})),
        prop("tau mass", (mass - 1.0).abs() <= 1e-10, json!({"mass": mass, "tail_bound": tail})),
        prop("tau ratio bounds", bounds, json!({"from_n": threshold + 1})),
        prop("tau 1/n", one_over_n, json!({})),
    ])
}

/// Random small instance with a mix of coherence classes and integer costs.
pub fn random_cost_instance(seed: u64) -> Result<(DenseMatrix, DenseMatrix, usize)> {
    let mut rng = rng_from_seed(seed);
    let m = rng.random_range(3..=6);
    let n = rng.random_range(3..=6);
    let r = rng.random_range(1..=m.min(n).min(3));
    let c = if r >= 2 { rng.random_range(0..=1) } else { 0 };
    let fx = generate(&FixtureSpec { m, n, r, coherent_cols: c, coherent_rows: 0, seed })?;
    let costs = DenseMatrix::from_fn(m, n, |_, _| rng.random_range(1..=9) as f64)?;
    Ok((fx.matrix, costs, fx.column_profile.sparsity))
}

pub fn two_opt(instances: usize, seed: u64) -> Result<Vec<Property>> {
    let gap = paper_fixture("erhc-greedy-gap")?;
    let same = paper_fixture("erhc-greedy-optimal")?;
    let greedy_cost = |fx: &DenseMatrix, c: &DenseMatrix, psibar: usize| -> Result<f64> {
        let mut o = ObservationOracle::new(fx.clone(), CostModel::PerEntry(c.clone()), NoiseModel::Clean)?;
        Ok(run_erhc(&mut o, psibar, Tolerance::for_matrix(fx))?.1.cost)
    };
    let gc = gap.costs.clone().expect("fixture has costs");
    let g1 = greedy_cost(&gap.matrix, &gc, 1)?;
    let o1 = optimal_two_stage(&gap.matrix, &gc, 1, Tolerance::exact())?.cost;
    let g2 = greedy_cost(&same.matrix, &gc, 1)?;
    let o2 = optimal_two_stage(&same.matrix, &gc, 1, Tolerance::exact())?.cost;
    let tight = erhc_tightness(0.25)?;
    let tc = tight.costs.clone().expect("fixture has costs");
    let tr = greedy_cost(&tight.matrix, &tc, 1)? / optimal_two_stage(&tight.matrix, &tc, 1, Tolerance::exact())?.cost;
    let ratios: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let (l, c, psibar) = random_cost_instance(derive_seed(seed, t, 0))?;
            let tol = Tolerance::default();
            let mut o = ObservationOracle::new(l.clone(), CostModel::PerEntry(c.clone()), NoiseModel::Clean)?;
            let g = run_erhc(&mut o, psibar, tol)?.1.cost;
            Ok(g / optimal_two_stage(&l, &c, psibar, tol)?.cost)
        })
        .collect::<Result<_>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(vec![
        prop("greedy gap", g1 == 32.0 && o1 == 31.0, json!({"greedy": g1, "optimal": o1})),
        prop("greedy optimal", g2 == o2, json!({"greedy": g2, "optimal": o2})),
        prop("tightness ratio", tr >= 1.9, json!({"eps": 0.25, "ratio": tr})),
        prop("two-opt", max_ratio <= 2.0, json!({"instances": instances, "max_ratio": max_ratio})),
    ])
}

pub fn column_costs(instances: usize, seed: u64) -> Result<Property> {
    let gaps: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let s = derive_seed(seed, t, 0);
            let l = gen_gaussian_lowrank(6, 6, 2, s)?;
            let mut rng = rng_from_seed(s ^ 0x55);
            let chi: Vec<f64> = (0..6).map(|_| rng.random_range(1..=9) as f64).collect();
            let tol = Tolerance::default();
            let mut o = ObservationOracle::new(l.clone(), CostModel::PerColumn(chi.clone()), NoiseModel::Clean)?;
            let g = run_erhc_column_costs(&mut o, 1, tol)?.1.cost;
            Ok((g - optimal_two_stage(&l, &expand_column_costs(&chi, 6)?, 1, tol)?.cost).abs())
        })
        .collect::<Result<_>>()?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(prop("column-costs", worst < 1e-9, json!({"instances": instances, "max_gap": worst})))
}

/// Profile inequalities on small exact subspaces and on generated fixtures.
pub fn coherence(count: usize, seed: u64) -> Result<Vec<Property>> {
    let violations: Vec<usize> = (0..count)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let s = derive_seed(seed, t, 0);
            let mut rng = rng_from_seed(s);
            let m = rng.random_range(3..=9);
            let r = rng.random_range(1..=m.min(4));
            let span = if t % 2 == 0 {
                sparse_integer_span(m, r, s ^ 3)
            } else {
                let n = rng.random_range(r.max(2)..=10);
                let c = rng.random_range(0..=r.min(1));
                let d = if r > c { rng.random_range(0..=1) } else { 0 };
                generate(&FixtureSpec { m, n, r, coherent_cols: c, coherent_rows: d, seed: s })?.matrix
            };
            let p = SubspaceProfile::of_span(&span, Tolerance::for_matrix(&span))?;
            Ok(validate_profile(&p).len())
        })
        .collect::<Result<_>>()?;
    let bad = violations.iter().filter(|&&v| v > 0).count();
    let mut coherent_ok = true;
    let mut worst: f64 = 0.0;
    for t in 0..20 {
        let fx = generate(&FixtureSpec { m: 40, n: 50, r: 4, coherent_cols: 1, coherent_rows: 0, seed: derive_seed(seed, t, 1) })?;
        let dev = (fx.column_profile.coherence - 10.0).abs();
        worst = worst.max(dev);
        coherent_ok &= dev <= 1e-9 && fx.column_profile.nonsparsity == 1;
    }
    Ok(vec![
        prop("profile inequalities", bad == 0, json!({"subspaces": count, "violating": bad})),
        prop("coherent generator", coherent_ok, json!({"m": 40, "r": 4, "max_dev_from_m_over_r": worst})),
    ])
}

pub fn dof(trials: usize, seed: u64) -> Result<Property> {
    let counts: Vec<(usize, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(usize, bool)> {
            let l = gen_gaussian_lowrank(30, 40, 5, derive_seed(seed, t, 0))?;
            let mut o = ObservationOracle::clean(l.clone());
            let mut res = run_ercs(&mut o, ErcsParams { d: 5 }, &mut UniformSampler::new(derive_seed(seed, t, 2)), Tolerance::default())?;
            Ok((res.stats.count, res.score(&l, 1e-8)?))
        })
        .collect::<Result<_>>()?;
    let ok = counts.iter().all(|&(c, s)| c == 325 && s);
    Ok(prop("dof", ok, json!({"trials": trials, "expected": 325})))
}
