//! Exact recovery when entries carry different observation costs.
//!
//! Both algorithms are two-stage: observe a row set `R` with `|R| = ψ̄ + 1`
//! in full, then visit the columns in a cost-driven order and fully observe
//! each one that is independent on `R`.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::completion::{run_two_stage, Algorithm, CompletionResult};
use crate::error::{AmcError, Result};
use crate::linalg::{numeric_rank, DenseMatrix, Tolerance};
use crate::oracle::{CostModel, ObservationOracle};

/// Largest side accepted by [`optimal_two_stage`].
pub const EXHAUSTIVE_SIDE: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoStagePlan {
    pub rows: Vec<usize>,
    pub column_order: Vec<usize>,
    pub columns: Vec<usize>,
    pub cost: f64,
}

/// χ(M_R:) + χ(M_:C) − χ(M_R:C).
pub fn plan_cost(costs: &DenseMatrix, rows: &[usize], columns: &[usize]) -> f64 {
    let (m, n) = costs.shape();
    let mut in_r = vec![false; m];
    rows.iter().for_each(|&i| in_r[i] = true);
    let row_part: f64 = rows.iter().map(|&i| (0..n).map(|j| costs.get(i, j)).sum::<f64>()).sum();
    let col_part: f64 = columns.iter().map(|&j| (0..m).filter(|&i| !in_r[i]).map(|i| costs.get(i, j)).sum::<f64>()).sum();
    row_part + col_part
}

/// Indices sorted by key, ties to the lower index.
fn order_by(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    idx
}

fn check_psibar(psibar: usize, m: usize) -> Result<usize> {
    let d = psibar + 1;
    if d > m {
        return Err(AmcError::InvalidParameter(format!("ψ̄ + 1 = {d} exceeds m = {m}")));
    }
    Ok(d)
}

fn finish(oracle: &mut ObservationOracle, rows: Vec<usize>, order: Vec<usize>, tol: Tolerance, alg: Algorithm) -> Result<(CompletionResult, TwoStagePlan)> {
    let res = run_two_stage(oracle, &rows, &order, tol, alg)?;
    let plan = TwoStagePlan { rows, column_order: order, columns: res.columns.clone(), cost: res.stats.cost };
    Ok((res, plan))
}

/// ERHC: the `ψ̄ + 1` rows with the smallest cost sums, then columns in
/// increasing order of the cost left outside those rows.
pub fn run_erhc(oracle: &mut ObservationOracle, psibar: usize, tol: Tolerance) -> Result<(CompletionResult, TwoStagePlan)> {
    let (m, n) = oracle.shape();
    let d = check_psibar(psibar, m)?;
    let CostModel::PerEntry(costs) = oracle.cost_model().clone() else {
        return Err(AmcError::CostModel("ERHC needs a per-entry cost matrix".into()));
    };
    let row_sums: Vec<f64> = (0..m).map(|i| (0..n).map(|j| costs.get(i, j)).sum()).collect();
    let mut rows = order_by(&row_sums);
    rows.truncate(d);
    let residual: Vec<f64> = (0..n).map(|j| (0..m).filter(|i| !rows.contains(i)).map(|i| costs.get(i, j)).sum()).collect();
    let order = order_by(&residual);
    finish(oracle, rows, order, tol, Algorithm::Erhc)
}

/// Column-cost variant: every row costs the same, so the first `ψ̄ + 1` rows
/// are taken and columns are visited cheapest first.
pub fn run_erhc_column_costs(oracle: &mut ObservationOracle, psibar: usize, tol: Tolerance) -> Result<(CompletionResult, TwoStagePlan)> {
    let m = oracle.rows();
    let d = check_psibar(psibar, m)?;
    let CostModel::PerColumn(chi) = oracle.cost_model().clone() else {
        return Err(AmcError::CostModel("the column-cost variant needs per-column costs".into()));
    };
    finish(oracle, (0..d).collect(), order_by(&chi), tol, Algorithm::ErhcColumns)
}

/// Per-entry cost matrix of a per-column model.
pub fn expand_column_costs(chi: &[f64], m: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_fn(m, chi.len(), |_, j| chi[j])
}

/// Cheapest two-stage plan by exhaustive search over `(ψ̄+1)`-row subsets
/// and `r`-column bases. Reads the matrix directly; no metering.
pub fn optimal_two_stage(matrix: &DenseMatrix, costs: &DenseMatrix, psibar: usize, tol: Tolerance) -> Result<TwoStagePlan> {
    let (m, n) = matrix.shape();
    if costs.shape() != (m, n) {
        return Err(AmcError::Dimension(format!("cost matrix is {}x{}, target is {m}x{n}", costs.rows(), costs.cols())));
    }
    if m > EXHAUSTIVE_SIDE || n > EXHAUSTIVE_SIDE {
        return Err(AmcError::TooLarge(format!("{m}x{n} exceeds the {EXHAUSTIVE_SIDE}x{EXHAUSTIVE_SIDE} search limit")));
    }
    let d = check_psibar(psibar, m)?;
    let r = numeric_rank(matrix, tol);
    let all_rows: Vec<usize> = (0..m).collect();
    let bases: Vec<Vec<usize>> = (0..n)
        .combinations(r)
        .filter(|c| numeric_rank(&matrix.select(&all_rows, c).expect("in range"), tol) == r)
        .collect();
    let best = (0..m)
        .combinations(d)
        .collect::<Vec<_>>()
        .into_par_iter()
        .filter_map(|rows| {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for c in &bases {
                let cost = plan_cost(costs, &rows, c);
                if best.as_ref().is_some_and(|(b, _)| cost >= *b) {
                    continue;
                }
                // back-projection needs the restricted basis to stay independent
                if numeric_rank(&matrix.select(&rows, c).expect("in range"), tol) == r {
                    best = Some((cost, c.clone()));
                }
            }
            best.map(|(cost, c)| (cost, rows, c))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| (&a.1, &a.2).cmp(&(&b.1, &b.2))));
    let (cost, rows, columns) = best.ok_or(AmcError::RankDeficient)?;
    Ok(TwoStagePlan { rows, column_order: columns.clone(), columns, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{erhc_tightness, gen_gaussian_lowrank, paper_fixture, rng_from_seed};
    use crate::oracle::NoiseModel;
    use rand::Rng;

    fn oracle_with(fx: &DenseMatrix, costs: &DenseMatrix) -> ObservationOracle {
        ObservationOracle::new(fx.clone(), CostModel::PerEntry(costs.clone()), NoiseModel::Clean).unwrap()
    }

    #[test]
    fn greedy_gap_fixture() {
        let fx = paper_fixture("erhc-greedy-gap").unwrap();
        let costs = fx.costs.unwrap();
        let mut o = oracle_with(&fx.matrix, &costs);
        let (mut res, plan) = run_erhc(&mut o, 1, Tolerance::exact()).unwrap();
        assert!(res.score(&fx.matrix, 0.0).unwrap());
        assert_eq!(plan.rows, vec![0, 1]);
        assert_eq!(plan.columns, vec![0, 1]);
        assert_eq!(plan.cost, 32.0);
        assert_eq!(plan_cost(&costs, &plan.rows, &plan.columns), 32.0);
        let opt = optimal_two_stage(&fx.matrix, &costs, 1, Tolerance::exact()).unwrap();
        assert_eq!(opt.cost, 31.0);
        assert_eq!((opt.rows, opt.columns), (vec![0, 2], vec![0, 2]));
    }

    #[test]
    fn greedy_optimal_fixture() {
        let fx = paper_fixture("erhc-greedy-optimal").unwrap();
        let costs = fx.costs.unwrap();
        let mut o = oracle_with(&fx.matrix, &costs);
        let (mut res, plan) = run_erhc(&mut o, 1, Tolerance::exact()).unwrap();
        assert!(res.score(&fx.matrix, 0.0).unwrap());
        let opt = optimal_two_stage(&fx.matrix, &costs, 1, Tolerance::exact()).unwrap();
        assert_eq!(plan.cost, opt.cost);
        assert_eq!(plan.cost, 32.0);
    }

    #[test]
    fn tightness_ratio() {
        let eps = 0.25;
        let fx = erhc_tightness(eps).unwrap();
        let costs = fx.costs.unwrap();
        let mut o = oracle_with(&fx.matrix, &costs);
        let (mut res, plan) = run_erhc(&mut o, 1, Tolerance::exact()).unwrap();
        assert!(res.score(&fx.matrix, 0.0).unwrap());
        assert_eq!(plan.columns, vec![4, 5]);
        let opt = optimal_two_stage(&fx.matrix, &costs, 1, Tolerance::exact()).unwrap();
        let greedy = 80.0 - 8.0 * eps + 0.12 * eps;
        assert!((plan.cost - greedy).abs() < 1e-9);
        assert!((opt.cost - (40.0 + 0.16 * eps)).abs() < 1e-9);
        assert!(plan.cost / opt.cost > 1.94);
    }

    #[test]
    fn column_variant_visits_cheapest_first() {
        let l = DenseMatrix::from_fn(3, 3, |i, j| ((i + 1) * (j + 1)) as f64).unwrap();
        let mut o = ObservationOracle::new(l.clone(), CostModel::PerColumn(vec![3.0, 1.0, 2.0]), NoiseModel::Clean).unwrap();
        let (mut res, plan) = run_erhc_column_costs(&mut o, 0, Tolerance::exact()).unwrap();
        assert!(res.score(&l, 0.0).unwrap());
        assert_eq!(plan.column_order, vec![1, 2, 0]);
        assert_eq!(plan.columns, vec![1]);
        // one full row (3 + 1 + 2) plus the rest of column 1
        assert_eq!(plan.cost, 6.0 + 2.0);
    }

    #[test]
    fn column_variant_matches_optimum() {
        for seed in 0..30u64 {
            let l = gen_gaussian_lowrank(6, 6, 2, seed).unwrap();
            let mut rng = rng_from_seed(seed + 1000);
            let chi: Vec<f64> = (0..6).map(|_| rng.random_range(1..10) as f64).collect();
            let mut o = ObservationOracle::new(l.clone(), CostModel::PerColumn(chi.clone()), NoiseModel::Clean).unwrap();
            let (_, plan) = run_erhc_column_costs(&mut o, 1, Tolerance::default()).unwrap();
            let opt = optimal_two_stage(&l, &expand_column_costs(&chi, 6).unwrap(), 1, Tolerance::default()).unwrap();
            assert!((plan.cost - opt.cost).abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn unit_costs_formula() {
        let l = gen_gaussian_lowrank(7, 9, 3, 2).unwrap();
        let ones = DenseMatrix::from_fn(7, 9, |_, _| 1.0).unwrap();
        let opt = optimal_two_stage(&l, &ones, 2, Tolerance::default()).unwrap();
        assert_eq!(opt.cost, (3 * 9 + 3 * 7 - 3 * 3) as f64);
    }

    #[test]
    fn wrong_cost_model_and_sizes() {
        let l = gen_gaussian_lowrank(4, 4, 1, 2).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        assert!(run_erhc(&mut o, 0, Tolerance::default()).is_err());
        assert!(run_erhc_column_costs(&mut o, 0, Tolerance::default()).is_err());
        let big = gen_gaussian_lowrank(13, 4, 1, 2).unwrap();
        let ones = DenseMatrix::from_fn(13, 4, |_, _| 1.0).unwrap();
        assert!(matches!(optimal_two_stage(&big, &ones, 0, Tolerance::default()), Err(AmcError::TooLarge(_))));
        let mut o = ObservationOracle::new(l, CostModel::PerEntry(DenseMatrix::from_fn(4, 4, |_, _| 1.0).unwrap()), NoiseModel::Clean).unwrap();
        assert!(run_erhc(&mut o, 4, Tolerance::default()).is_err());
    }
}
