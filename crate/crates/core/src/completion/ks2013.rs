//! Fixed-row-set algorithms: the KS2013 baseline and ERCS.

use super::{Algorithm, CompletionResult, SpanTracker};
use crate::error::{AmcError, Result};
use crate::linalg::{DenseMatrix, IndexSet, Tolerance};
use crate::oracle::{ObservationOracle, RowSampler};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ks2013Params {
    pub d: usize,
}

/// ERCS needs `d ≥ ψ̄(U) + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErcsParams {
    pub d: usize,
}

fn check_d(d: usize, m: usize) -> Result<()> {
    if d == 0 || d > m {
        return Err(AmcError::InvalidParameter(format!("sample size d = {d} must lie in 1..={m}")));
    }
    Ok(())
}

/// Shared column loop. Rows `omega` are probed (or already observed) in each
/// column; a column whose probe is outside the current span is observed in
/// full, the others are back-projected from `omega`.
fn column_pass(
    oracle: &mut ObservationOracle,
    omega: &IndexSet,
    order: &[usize],
    tol: Tolerance,
    algorithm: Algorithm,
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    let mut span = SpanTracker::new(m, tol);
    let mut recovered = DenseMatrix::zeros(m, n)?;
    let mut columns = Vec::new();
    for &j in order {
        let x = oracle.observe_entries(omega.as_slice(), j)?;
        if span.is_independent(omega, &x)? {
            let col = oracle.observe_column(j)?;
            recovered.set_column(j, &col);
            span.push(col)?;
            columns.push(j);
        } else {
            recovered.set_column(j, &span.reconstruct_lenient(omega, &x)?);
        }
    }
    let mut res = CompletionResult::new(algorithm, recovered, oracle.stats());
    res.rank_estimate = span.rank();
    res.rows = omega.as_slice().to_vec();
    res.columns = columns;
    res.phases = 1;
    Ok(res)
}

/// KS2013: one random row set Ω of size `d`; probe every column on Ω.
pub fn run_ks2013(
    oracle: &mut ObservationOracle,
    params: Ks2013Params,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    check_d(params.d, m)?;
    let all: Vec<usize> = (0..m).collect();
    let omega = IndexSet::new(sampler.sample_rows(&all, params.d), m)?;
    let order: Vec<usize> = (0..n).collect();
    column_pass(oracle, &omega, &order, tol, Algorithm::Ks2013)
}

/// Observes rows `rows` in full, then visits columns in `order`.
pub fn run_two_stage(
    oracle: &mut ObservationOracle,
    rows: &[usize],
    order: &[usize],
    tol: Tolerance,
    algorithm: Algorithm,
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    check_d(rows.len(), m)?;
    let omega = IndexSet::new(rows.to_vec(), m)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(AmcError::InvalidParameter("column order must be a permutation".into()));
    }
    for &i in rows {
        oracle.observe_row(i)?;
    }
    column_pass(oracle, &omega, order, tol, algorithm)
}

/// ERCS: observe `d` random rows in full, then run the column pass.
pub fn run_ercs(
    oracle: &mut ObservationOracle,
    params: ErcsParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    check_d(params.d, m)?;
    let all: Vec<usize> = (0..m).collect();
    let rows = sampler.sample_rows(&all, params.d);
    let order: Vec<usize> = (0..n).collect();
    run_two_stage(oracle, &rows, &order, tol, Algorithm::Ercs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_gaussian_lowrank, paper_fixture};
    use crate::oracle::{ScriptedSampler, UniformSampler};

    #[test]
    fn ks2013_tightness_witness_misrecovers() {
        let t = paper_fixture("tightness").unwrap().matrix;
        for tol in [Tolerance::exact(), Tolerance::default()] {
            let mut o = ObservationOracle::clean(t.clone());
            let mut s = ScriptedSampler::new(vec![vec![1, 2, 3]]);
            let mut r = run_ks2013(&mut o, Ks2013Params { d: 3 }, &mut s, tol).unwrap();
            assert_eq!(r.columns, vec![0, 1]);
            assert!(!r.score(&t, 1e-9).unwrap());
            // the third column is taken for 4·(first column)
            assert!((r.recovered.get(0, 2) - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ks2013_full_sample_recovers_rank_one() {
        let l = gen_gaussian_lowrank(7, 9, 1, 3).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let mut r = run_ks2013(&mut o, Ks2013Params { d: 7 }, &mut UniformSampler::new(1), Tolerance::default()).unwrap();
        assert!(r.score(&l, 1e-9).unwrap());
        assert_eq!(r.stats.count, 63);
    }

    #[test]
    fn ercs_degree_of_freedom_count() {
        let l = gen_gaussian_lowrank(30, 40, 5, 11).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let mut r = run_ercs(&mut o, ErcsParams { d: 5 }, &mut UniformSampler::new(2), Tolerance::default()).unwrap();
        assert_eq!(r.stats.count, 325);
        assert!(r.score(&l, 1e-8).unwrap());
    }

    #[test]
    fn ercs_all_ones() {
        let l = DenseMatrix::from_fn(5, 8, |_, _| 1.0).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let mut r = run_ercs(&mut o, ErcsParams { d: 1 }, &mut UniformSampler::new(2), Tolerance::exact()).unwrap();
        assert_eq!(r.stats.count, 5 + 8 - 1);
        assert!(r.score(&l, 0.0).unwrap());
    }

    #[test]
    fn ercs_tightness_any_rows() {
        let t = paper_fixture("tightness").unwrap().matrix;
        let mut o = ObservationOracle::clean(t.clone());
        let mut r = run_ercs(&mut o, ErcsParams { d: 4 }, &mut UniformSampler::new(0), Tolerance::exact()).unwrap();
        assert!(r.score(&t, 0.0).unwrap());
        let mut o = ObservationOracle::clean(t);
        assert!(run_ercs(&mut o, ErcsParams { d: 5 }, &mut UniformSampler::new(0), Tolerance::exact()).is_err());
    }
}
