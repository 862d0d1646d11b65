use std::collections::BTreeSet;

use proptest::prelude::*;

use amc_core::combinatorics::{tau_pmf, tau_ratio, tau_ratio_closed_form};
use amc_core::completion::{run_err, run_err_observed, ErrEvent, ErrParams};
use amc_core::cost::{optimal_two_stage, plan_cost, run_erhc};
use amc_core::generators::{gen_gaussian_lowrank, generate, inject_sparse_noise_columns, FixtureSpec};
use amc_core::linalg::{
    numeric_rank, orthonormalize, rank_of_columns, reconstruct_column, restricted_residual, DenseMatrix, IndexSet,
    Tolerance,
};
use amc_core::oracle::{CostModel, NoiseModel, ObservationOracle, UniformSampler};
use amc_core::sparsity::{validate_profile, SubspaceProfile};

fn tol() -> Tolerance {
    Tolerance::default()
}

/// Distinct indices drawn from 0..bound by sorting a random key per index.
fn subset(bound: usize, size: usize, keys: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..bound).collect();
    idx.sort_by_key(|&i| (keys[i % keys.len()].wrapping_mul(2654435761).wrapping_add(i as u32), i));
    idx.truncate(size);
    idx.sort_unstable();
    idx
}

fn span_vector(u: &DenseMatrix, coef: &[f64]) -> Vec<f64> {
    (0..u.rows()).map(|i| (0..u.cols()).map(|c| u.get(i, c) * coef[c]).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn residual_vanishes_on_span(m in 3usize..14, k in 1usize..4, seed in any::<u64>(), coef in prop::collection::vec(-3.0f64..3.0, 4)) {
        let k = k.min(m);
        let u = gen_gaussian_lowrank(m, k, k, seed).unwrap();
        let basis = orthonormalize(m, &u.columns(), tol()).unwrap();
        let x = span_vector(&u, &coef);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res = restricted_residual(&basis, &IndexSet::full(m), &x).unwrap();
        prop_assert!(res <= 1e-9 * norm.max(1.0), "residual {res}");
    }

    #[test]
    fn reconstruct_inverts_restriction(m in 4usize..14, k in 1usize..4, extra in 0usize..4, seed in any::<u64>(),
                                       keys in prop::collection::vec(any::<u32>(), 16), coef in prop::collection::vec(-3.0f64..3.0, 4)) {
        let u = gen_gaussian_lowrank(m, k, k, seed).unwrap();
        let basis = orthonormalize(m, &u.columns(), tol()).unwrap();
        let rows = subset(m, (k + extra).min(m), &keys);
        let x = span_vector(&u, &coef);
        let obs: Vec<f64> = rows.iter().map(|&i| x[i]).collect();
        let rec = reconstruct_column(&basis, &IndexSet::new(rows, m).unwrap(), &obs).unwrap();
        for (a, b) in rec.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn rank_is_permutation_and_transpose_invariant(m in 2usize..10, n in 2usize..10, r in 1usize..5, seed in any::<u64>(),
                                                   keys in prop::collection::vec(any::<u32>(), 16)) {
        let r = r.min(m).min(n);
        let a = gen_gaussian_lowrank(m, n, r, seed).unwrap();
        let pr = {
            let mut p: Vec<usize> = (0..m).collect();
            p.sort_by_key(|&i| keys[i % keys.len()] ^ i as u32);
            p
        };
        let pc: Vec<usize> = (0..n).rev().collect();
        let permuted = a.select(&pr, &pc).unwrap();
        let base = numeric_rank(&a, tol());
        prop_assert_eq!(base, r);
        prop_assert_eq!(numeric_rank(&permuted, tol()), base);
        prop_assert_eq!(numeric_rank(&a.transpose(), tol()), base);
    }

    #[test]
    fn metering_counts_distinct_entries(m in 1usize..8, n in 1usize..8, probes in prop::collection::vec((0usize..8, 0usize..8), 0..60),
                                        cost_seed in any::<u64>()) {
        let truth = DenseMatrix::from_fn(m, n, |i, j| (i * n + j) as f64).unwrap();
        let costs = DenseMatrix::from_fn(m, n, |i, j| 1.0 + ((cost_seed >> ((i + j) % 60)) & 7) as f64).unwrap();
        let mut o = ObservationOracle::new(truth.clone(), CostModel::PerEntry(costs.clone()), NoiseModel::Clean).unwrap();
        let mut seen = BTreeSet::new();
        for (i, j) in probes {
            let (i, j) = (i % m, j % n);
            prop_assert_eq!(o.observe(i, j).unwrap(), truth.get(i, j));
            seen.insert((i, j));
        }
        let st = o.stats();
        prop_assert_eq!(st.count, seen.len());
        let want: f64 = seen.iter().map(|&(i, j)| costs.get(i, j)).sum();
        prop_assert!((st.cost - want).abs() < 1e-9);
        prop_assert!(o.observe(m, 0).is_err());
    }

    #[test]
    fn err_replays_and_stays_within_mn(m in 4usize..16, n in 4usize..16, r in 1usize..4, seed in any::<u64>()) {
        let r = r.min(m).min(n);
        let truth = gen_gaussian_lowrank(m, n, r, seed).unwrap();
        let run = || {
            let mut o = ObservationOracle::clean(truth.clone());
            let res = run_err(&mut o, ErrParams { r }, &mut UniformSampler::new(seed ^ 77), tol()).unwrap();
            (o.log().to_vec(), res.stats, res.recovered, res.rank_estimate)
        };
        let (log1, st1, rec1, r1) = run();
        let (log2, st2, rec2, r2) = run();
        prop_assert_eq!(&log1, &log2);
        prop_assert_eq!(&st1, &st2);
        prop_assert_eq!(&rec1, &rec2);
        prop_assert_eq!(r1, r2);
        prop_assert!(st1.count <= m * n);
        let err = rec1.max_abs_diff(&truth).unwrap();
        if err <= 1e-6 * truth.max_abs().max(1.0) {
            prop_assert_eq!(r1, r);
        }
    }

    #[test]
    fn restricted_dependence_implies_full_dependence(m in 4usize..12, r in 2usize..5, s in 1usize..5, extra in 0usize..4,
                                                     seed in any::<u64>(), keys in prop::collection::vec(any::<u32>(), 16),
                                                     force_dependent in any::<bool>()) {
        let r = r.min(m - 1);
        let u = gen_gaussian_lowrank(m, r, r, seed).unwrap();
        let profile = SubspaceProfile::of_span(&u, tol()).unwrap();
        let psibar = profile.sparsity;
        let omega = subset(m, (psibar + 1 + extra).min(m), &keys);
        let s = s.min(r);
        let coefs = gen_gaussian_lowrank(r, s, s.min(r), seed.wrapping_add(1)).unwrap();
        let mut vecs: Vec<Vec<f64>> = (0..s).map(|c| span_vector(&u, &coefs.column(c))).collect();
        if force_dependent && s >= 2 {
            let combo: Vec<f64> = vecs[0].iter().zip(&vecs[1]).map(|(a, b)| 2.0 * a - b).collect();
            vecs[s - 1] = combo;
        }
        let restricted: Vec<Vec<f64>> = vecs.iter().map(|v| omega.iter().map(|&i| v[i]).collect()).collect();
        let full_dep = rank_of_columns(&vecs, tol()) < s;
        let restricted_dep = rank_of_columns(&restricted, tol()) < s;
        if restricted_dep {
            prop_assert!(full_dep, "restricted dependence without full dependence");
        }
        if full_dep {
            prop_assert!(restricted_dep, "full dependence must survive restriction");
        }
    }

    #[test]
    fn generated_profiles_satisfy_bounds(m in 3usize..12, n in 3usize..12, r in 1usize..5, cc in 0usize..2, cr in 0usize..2,
                                         seed in any::<u64>()) {
        let r = r.min(m).min(n);
        prop_assume!(cc + cr <= r);
        let fx = generate(&FixtureSpec { m, n, r, coherent_cols: cc, coherent_rows: cr, seed }).unwrap();
        prop_assert!(validate_profile(&fx.column_profile).is_empty(), "{:?}", fx.column_profile);
        prop_assert!(validate_profile(&fx.row_profile).is_empty(), "{:?}", fx.row_profile);
        if cc > 0 {
            prop_assert!((fx.column_profile.coherence - m as f64 / r as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn tau_ratio_matches_closed_form(m in 2u64..60, k in 1u64..60, r in 1u64..6, off in 0u64..200) {
        let k = k.min(m);
        let big_n = r + off;
        let ratio = tau_ratio(k, m, r, big_n).unwrap();
        let closed = tau_ratio_closed_form(k, m, r, big_n);
        if k < m {
            prop_assert_eq!(ratio, closed);
        }
        let p = tau_pmf(k, m, r, big_n).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn erhc_is_two_optimal(m in 3usize..7, n in 3usize..7, r in 1usize..4, seed in any::<u64>(),
                           costs in prop::collection::vec(1u8..10, 36)) {
        let r = r.min(m).min(n);
        let fx = generate(&FixtureSpec::generic(m, n, r, seed)).unwrap();
        let chi = DenseMatrix::from_fn(m, n, |i, j| costs[i * 6 + j] as f64).unwrap();
        let psibar = fx.column_profile.sparsity;
        let t = Tolerance::for_matrix(&fx.matrix);
        let mut o = ObservationOracle::new(fx.matrix.clone(), CostModel::PerEntry(chi.clone()), NoiseModel::Clean).unwrap();
        let (res, plan) = run_erhc(&mut o, psibar, t).unwrap();
        let best = optimal_two_stage(&fx.matrix, &chi, psibar, t).unwrap();
        prop_assert_eq!(plan.columns.len(), r);
        prop_assert!((plan.cost - plan_cost(&chi, &plan.rows, &plan.columns)).abs() < 1e-9);
        prop_assert!(best.cost <= plan.cost + 1e-9);
        prop_assert!(plan.cost <= 2.0 * best.cost + 1e-9, "greedy {} optimal {}", plan.cost, best.cost);
        prop_assert!(res.recovered.max_abs_diff(&fx.matrix).unwrap() <= 1e-6 * fx.matrix.max_abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn deleting_columns_drops_row_nonsparsity_by_at_most_a(m in 5usize..9, n in 5usize..11, r in 1usize..4, cr in 0usize..2,
                                                           a in 0usize..4, seed in any::<u64>(), keys in prop::collection::vec(any::<u32>(), 16)) {
        let r = r.min(m - 1).min(n);
        prop_assume!(cr <= r);
        let fx = generate(&FixtureSpec { m, n, r, coherent_cols: 0, coherent_rows: cr, seed }).unwrap();
        let before = SubspaceProfile::of_rows(&fx.matrix, tol()).unwrap();
        prop_assume!(before.nonsparsity > a);
        let dropped = subset(n, a, &keys);
        let kept: Vec<usize> = (0..n).filter(|j| !dropped.contains(j)).collect();
        let all_rows: Vec<usize> = (0..m).collect();
        let rest = fx.matrix.select(&all_rows, &kept).unwrap();
        let after = SubspaceProfile::of_rows(&rest, tol()).unwrap();
        prop_assert!(before.exact && after.exact);
        prop_assert_eq!(after.rank, before.rank);
        prop_assert!(after.nonsparsity + a >= before.nonsparsity, "before {} after {} a {a}", before.nonsparsity, after.nonsparsity);
    }

    #[test]
    fn noisy_columns_leave_the_clean_span(m in 5usize..12, n in 5usize..12, r in 1usize..4, a in 1usize..4, seed in any::<u64>()) {
        let r = r.min(m - 1).min(n);
        let a = a.min(n);
        let clean = gen_gaussian_lowrank(m, n, r, seed).unwrap();
        let basis = orthonormalize(m, &clean.columns(), tol()).unwrap();
        let (noisy, cols) = inject_sparse_noise_columns(&clean, a, seed ^ 5).unwrap();
        for j in cols.iter() {
            let x = noisy.column(j);
            let res = restricted_residual(&basis, &IndexSet::full(m), &x).unwrap();
            prop_assert!(res > 1e-6, "noisy column {j} inside the clean span");
        }
    }

    #[test]
    fn active_columns_outnumber_row_nonsparsity(m in 6usize..14, n in 6usize..14, r in 2usize..5, cr in 0usize..2, seed in any::<u64>()) {
        let r = r.min(m - 1).min(n - 1);
        let fx = generate(&FixtureSpec { m, n, r, coherent_cols: 0, coherent_rows: cr, seed }).unwrap();
        let psi_v = fx.row_profile.nonsparsity;
        let truth = fx.matrix.clone();
        let t = Tolerance::for_matrix(&truth);
        let mut o = ObservationOracle::clean(truth.clone());
        let mut violations = Vec::new();
        let mut check = |cols: &[usize]| {
            if cols.len() >= r {
                return;
            }
            let chosen: Vec<Vec<f64>> = cols.iter().map(|&j| truth.column(j)).collect();
            let base = rank_of_columns(&chosen, t);
            let active = (0..n)
                .filter(|j| !cols.contains(j))
                .filter(|&j| {
                    let mut with = chosen.clone();
                    with.push(truth.column(j));
                    rank_of_columns(&with, t) > base
                })
                .count();
            if active < psi_v {
                violations.push((cols.to_vec(), active));
            }
        };
        run_err_observed(&mut o, ErrParams { r }, &mut UniformSampler::new(seed), t, &mut |ev| match ev {
            ErrEvent::Draw { columns, .. } | ErrEvent::PhaseEnd { columns, .. } => check(columns),
        }).unwrap();
        prop_assert!(violations.is_empty(), "ψ(V) = {psi_v}: {violations:?}");
    }
}
