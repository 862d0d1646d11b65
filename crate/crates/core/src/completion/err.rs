//! ERR (known rank) and ERRE (rank estimated with a delay parameter).
//!
//! Both sweep the columns in phases. In each phase every column outside the
//! chosen set gets one fresh uniformly drawn entry `(i, j)`; if
//! `M[R ∪ {i}, C ∪ {j}]` is nonsingular, row `i` and column `j` are observed
//! in full and join `R` and `C`.

use super::{Algorithm, CompletionResult, SpanTracker};
use crate::error::{AmcError, Result};
use crate::linalg::{is_nonsingular, DenseMatrix, IndexSet, Tolerance};
use crate::oracle::{ObservationOracle, RowSampler};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrParams {
    pub r: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErreParams {
    pub t: usize,
}

/// Progress notifications for test harnesses.
#[derive(Debug)]
pub enum ErrEvent<'a> {
    /// One probe. `rows`/`columns` are the chosen sets before the test.
    Draw { phase: usize, row: usize, column: usize, accepted: bool, rows: &'a [usize], columns: &'a [usize] },
    PhaseEnd { phase: usize, rows: &'a [usize], columns: &'a [usize] },
}

enum Stop {
    Rank(usize),
    Delay(usize),
}

fn submatrix(oracle: &ObservationOracle, rows: &[usize], cols: &[usize]) -> Result<DenseMatrix> {
    let mut data = Vec::with_capacity(rows.len() * cols.len());
    for &i in rows {
        for &j in cols {
            data.push(oracle.peek(i, j).ok_or(AmcError::Unobserved(i, j))?);
        }
    }
    DenseMatrix::new(rows.len(), cols.len(), data)
}

struct Sweep {
    rows: Vec<usize>,
    cols: Vec<usize>,
    phases: usize,
    exhausted: bool,
}

fn sweep(
    oracle: &mut ObservationOracle,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
    stop: Stop,
    observer: &mut dyn FnMut(ErrEvent<'_>),
) -> Result<Sweep> {
    let n = oracle.cols();
    let cap = oracle.rows().min(n);
    let mut rows: Vec<usize> = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    let mut in_c = vec![false; n];
    let mut phases = 0;
    let mut delay = 0;
    let mut exhausted = false;
    let done = |rows: &Vec<usize>| matches!(stop, Stop::Rank(r) if rows.len() >= r);
    while !done(&rows) {
        oracle.begin_phase();
        phases += 1;
        let mut drew = false;
        let mut found = false;
        for j in 0..n {
            if done(&rows) {
                break;
            }
            if in_c[j] || rows.len() == cap {
                continue;
            }
            let Some(i) = oracle.draw_unobserved_uniform(j, sampler) else {
                continue;
            };
            drew = true;
            oracle.observe(i, j)?;
            let mut r2 = rows.clone();
            r2.push(i);
            let mut c2 = cols.clone();
            c2.push(j);
            let accepted = is_nonsingular(&submatrix(oracle, &r2, &c2)?, tol)?;
            observer(ErrEvent::Draw { phase: phases, row: i, column: j, accepted, rows: &rows, columns: &cols });
            if accepted {
                oracle.observe_column(j)?;
                oracle.observe_row(i)?;
                rows.push(i);
                cols.push(j);
                in_c[j] = true;
                found = true;
            }
        }
        observer(ErrEvent::PhaseEnd { phase: phases, rows: &rows, columns: &cols });
        if !drew {
            exhausted = true;
            break;
        }
        if let Stop::Delay(t) = stop {
            if found {
                delay = 0;
            } else {
                delay += 1;
                if delay >= t {
                    break;
                }
            }
        }
    }
    Ok(Sweep { rows, cols, phases, exhausted })
}

fn finish(oracle: &ObservationOracle, sw: Sweep, tol: Tolerance, algorithm: Algorithm) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    let mut span = SpanTracker::new(m, tol);
    let mut recovered = DenseMatrix::zeros(m, n)?;
    for &j in &sw.cols {
        let col: Vec<f64> = (0..m).map(|i| oracle.peek(i, j).ok_or(AmcError::Unobserved(i, j))).collect::<Result<_>>()?;
        recovered.set_column(j, &col);
        span.push(col)?;
    }
    let rset = IndexSet::new(sw.rows.clone(), m)?;
    for j in 0..n {
        if sw.cols.contains(&j) {
            continue;
        }
        if oracle.observed().column_fully_observed(j) {
            let col: Vec<f64> = (0..m).map(|i| oracle.peek(i, j).unwrap_or(0.0)).collect();
            recovered.set_column(j, &col);
            continue;
        }
        let x: Vec<f64> = sw.rows.iter().map(|&i| oracle.peek(i, j).ok_or(AmcError::Unobserved(i, j))).collect::<Result<_>>()?;
        recovered.set_column(j, &span.reconstruct(&rset, &x)?);
    }
    let mut res = CompletionResult::new(algorithm, recovered, oracle.stats());
    res.rank_estimate = sw.rows.len();
    res.phases = sw.phases;
    res.exhausted = sw.exhausted && algorithm == Algorithm::Err;
    res.rows = sw.rows;
    res.columns = sw.cols;
    Ok(res)
}

pub fn run_err(
    oracle: &mut ObservationOracle,
    params: ErrParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<CompletionResult> {
    run_err_observed(oracle, params, sampler, tol, &mut |_| {})
}

/// ERR with a callback on every probe and phase end.
pub fn run_err_observed(
    oracle: &mut ObservationOracle,
    params: ErrParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
    observer: &mut dyn FnMut(ErrEvent<'_>),
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    if params.r > m.min(n) {
        return Err(AmcError::InvalidParameter(format!("rank {} exceeds min(m, n) = {}", params.r, m.min(n))));
    }
    if params.r == 0 {
        let mut res = CompletionResult::new(Algorithm::Err, DenseMatrix::zeros(m, n)?, oracle.stats());
        res.rank_estimate = 0;
        return Ok(res);
    }
    let sw = sweep(oracle, sampler, tol, Stop::Rank(params.r), observer)?;
    finish(oracle, sw, tol, Algorithm::Err)
}

pub fn run_erre(
    oracle: &mut ObservationOracle,
    params: ErreParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<CompletionResult> {
    run_erre_observed(oracle, params, sampler, tol, &mut |_| {})
}

pub fn run_erre_observed(
    oracle: &mut ObservationOracle,
    params: ErreParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
    observer: &mut dyn FnMut(ErrEvent<'_>),
) -> Result<CompletionResult> {
    if params.t == 0 {
        return Err(AmcError::InvalidParameter("delay T must be at least 1".into()));
    }
    let sw = sweep(oracle, sampler, tol, Stop::Delay(params.t), observer)?;
    finish(oracle, sw, tol, Algorithm::Erre)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_gaussian_lowrank, paper_fixture};
    use crate::oracle::UniformSampler;

    #[test]
    fn recovers_matrix_a() {
        let a = paper_fixture("A").unwrap().matrix;
        for seed in 0..20 {
            let mut o = ObservationOracle::clean(a.clone());
            let mut r = run_err(&mut o, ErrParams { r: 2 }, &mut UniformSampler::new(seed), Tolerance::exact()).unwrap();
            assert!(r.score(&a, 0.0).unwrap());
            assert!(r.stats.count >= 16);
            assert_eq!(r.rank_estimate, 2);
        }
    }

    #[test]
    fn rank_one_without_zeros() {
        let l = DenseMatrix::from_fn(5, 7, |i, j| (i + 1) as f64 * (j + 2) as f64).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let mut r = run_err(&mut o, ErrParams { r: 1 }, &mut UniformSampler::new(4), Tolerance::exact()).unwrap();
        assert!(r.score(&l, 0.0).unwrap());
        // first draw succeeds immediately: one row and one column, no probes
        assert_eq!(r.stats.count, 5 + 7 - 1);
        assert_eq!(r.phases, 1);
    }

    #[test]
    fn rank_too_large_exhausts() {
        let l = gen_gaussian_lowrank(5, 6, 2, 1).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let r = run_err(&mut o, ErrParams { r: 3 }, &mut UniformSampler::new(4), Tolerance::default()).unwrap();
        assert!(r.exhausted);
        assert_eq!(r.rank_estimate, 2);
        assert_eq!(r.stats.count, 30);
        assert!(r.recovered.max_abs_diff(&l).unwrap() < 1e-12);
    }

    #[test]
    fn zero_rank_is_free() {
        let l = DenseMatrix::zeros(3, 3).unwrap();
        let mut o = ObservationOracle::clean(l);
        let r = run_err(&mut o, ErrParams { r: 0 }, &mut UniformSampler::new(4), Tolerance::default()).unwrap();
        assert_eq!(r.stats.count, 0);
        assert_eq!(r.recovered.max_abs(), 0.0);
    }

    #[test]
    fn erre_zero_matrix_single_phase() {
        let l = DenseMatrix::zeros(4, 6).unwrap();
        let mut o = ObservationOracle::clean(l);
        let r = run_erre(&mut o, ErreParams { t: 1 }, &mut UniformSampler::new(4), Tolerance::default()).unwrap();
        assert_eq!(r.rank_estimate, 0);
        assert_eq!(r.phases, 1);
        assert_eq!(r.stats.count, 6);
        assert_eq!(r.stats.phase_counts, vec![6]);
    }

    #[test]
    fn erre_estimates_rank() {
        let l = gen_gaussian_lowrank(20, 30, 3, 9).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let mut r = run_erre(&mut o, ErreParams { t: 3 }, &mut UniformSampler::new(5), Tolerance::default()).unwrap();
        assert!(r.score(&l, 1e-8).unwrap());
        assert_eq!(r.rank_estimate, 3);
    }

    #[test]
    fn accepted_blocks_are_nonsingular_exactly() {
        let b = paper_fixture("B").unwrap().matrix;
        for seed in 0..20 {
            let mut o = ObservationOracle::clean(b.clone());
            let r = run_err(&mut o, ErrParams { r: 2 }, &mut UniformSampler::new(seed), Tolerance::exact()).unwrap();
            let block = b.select(&r.rows, &r.columns).unwrap();
            assert!(is_nonsingular(&block, Tolerance::exact()).unwrap());
        }
    }
}
