//! EREI: exact recovery using estimates of ψ(U) and ψ(V).
//!
//! Each column is probed on Ω = Δ ∪ R, where Δ is a fresh uniform draw of
//! `d` rows outside R. A detected column is observed in full and R grows by
//! one row that keeps the restricted basis invertible. At the end the rows
//! in R are observed in full and the remaining columns back-projected.

use super::{Algorithm, CompletionResult, SpanTracker};
use crate::error::{AmcError, Result};
use crate::linalg::{DenseMatrix, IndexSet, Tolerance};
use crate::oracle::{ObservationOracle, RowSampler};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EreiParams {
    pub r: usize,
    pub psi_u: usize,
    pub psi_v: usize,
    pub eps: f64,
    /// Replaces the computed sample size when set.
    pub d_override: Option<usize>,
}

impl EreiParams {
    pub fn new(r: usize, psi_u: usize, psi_v: usize, eps: f64) -> Self {
        Self { r, psi_u, psi_v, eps, d_override: None }
    }

    /// Parameters derived from the column-space coherence alone:
    /// ψ(V) := 1 and ψ(U) := ⌈m / (μ₀ r)⌉.
    pub fn from_coherence(m: usize, r: usize, mu0: f64, eps: f64) -> Self {
        let psi_u = ((m as f64 / (mu0 * r as f64)) - 1e-12).ceil().max(1.0) as usize;
        Self::new(r, psi_u.min(m), 1, eps)
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.r == 0 || self.r > m.min(n) {
            return Err(AmcError::InvalidParameter(format!("rank {} must lie in 1..={}", self.r, m.min(n))));
        }
        if self.psi_u == 0 || self.psi_u > m || self.psi_v == 0 || self.psi_v > n {
            return Err(AmcError::InvalidParameter(format!(
                "need 1 <= ψ(U) <= {m} and 1 <= ψ(V) <= {n}, got {} and {}",
                self.psi_u, self.psi_v
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(AmcError::InvalidParameter(format!("ε must lie in (0, 1), got {}", self.eps)));
        }
        if let Some(d) = self.d_override {
            if d == 0 || d > m {
                return Err(AmcError::InvalidParameter(format!("d = {d} must lie in 1..={m}")));
            }
        }
        Ok(())
    }

    /// min(2(m/ψU)ln(r/ε), (2m/ψU)(r+2+ln(1/ε))/ψV), rounded up and clamped to [1, m].
    pub fn sample_size(&self, m: usize) -> usize {
        if let Some(d) = self.d_override {
            return d;
        }
        let mf = m as f64;
        let pu = self.psi_u as f64;
        let a = 2.0 * (mf / pu) * (self.r as f64 / self.eps).ln();
        let b = (2.0 * mf / pu) * (self.r as f64 + 2.0 + (1.0 / self.eps).ln()) / self.psi_v as f64;
        clamp_sample_size(a.min(b), m)
    }
}

pub fn clamp_sample_size(x: f64, m: usize) -> usize {
    if !x.is_finite() || x >= m as f64 {
        return m;
    }
    (x.ceil() as usize).clamp(1, m)
}

/// The EREI loop with an explicit sample size `d`.
pub fn run_erei_engine(
    oracle: &mut ObservationOracle,
    d: usize,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
    algorithm: Algorithm,
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    if d == 0 || d > m {
        return Err(AmcError::InvalidParameter(format!("d = {d} must lie in 1..={m}")));
    }
    let mut span = SpanTracker::new(m, tol);
    let mut r_rows: Vec<usize> = Vec::new();
    let mut columns: Vec<usize> = Vec::new();
    for j in 0..n {
        let outside: Vec<usize> = (0..m).filter(|i| !r_rows.contains(i)).collect();
        let mut omega_rows = sampler.sample_rows(&outside, d.min(outside.len()));
        omega_rows.extend_from_slice(&r_rows);
        let omega = IndexSet::new(omega_rows, m)?;
        let x = oracle.observe_entries(omega.as_slice(), j)?;
        if !span.is_independent(&omega, &x)? {
            continue;
        }
        let col = oracle.observe_column(j)?;
        if !span.push(col)? {
            continue;
        }
        columns.push(j);
        if r_rows.len() == m {
            continue;
        }
        let candidates: Vec<usize> = omega.iter().filter(|i| !r_rows.contains(i)).collect();
        let a = match span.extension_row(&r_rows, &candidates) {
            Some(a) => a,
            None => {
                // every row of the new column is known, so trying more rows is free
                let rest: Vec<usize> = (0..m).filter(|i| !r_rows.contains(i) && !candidates.contains(i)).collect();
                let shuffled = sampler.sample_rows(&rest, rest.len());
                span.extension_row(&r_rows, &shuffled).ok_or(AmcError::RankDeficient)?
            }
        };
        r_rows.push(a);
    }
    for &i in &r_rows {
        oracle.observe_row(i)?;
    }
    let rset = IndexSet::new(r_rows.clone(), m)?;
    let mut recovered = DenseMatrix::zeros(m, n)?;
    for j in 0..n {
        if columns.contains(&j) {
            let col: Vec<f64> = (0..m).map(|i| oracle.peek(i, j).ok_or(AmcError::Unobserved(i, j))).collect::<Result<_>>()?;
            recovered.set_column(j, &col);
        } else {
            let x: Vec<f64> = r_rows.iter().map(|&i| oracle.peek(i, j).ok_or(AmcError::Unobserved(i, j))).collect::<Result<_>>()?;
            recovered.set_column(j, &span.reconstruct(&rset, &x)?);
        }
    }
    let mut res = CompletionResult::new(algorithm, recovered, oracle.stats());
    res.rank_estimate = span.rank();
    res.rows = r_rows;
    res.columns = columns;
    res.phases = 1;
    Ok(res)
}

pub fn run_erei(
    oracle: &mut ObservationOracle,
    params: EreiParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<CompletionResult> {
    let (m, n) = oracle.shape();
    params.validate(m, n)?;
    run_erei_engine(oracle, params.sample_size(m), sampler, tol, Algorithm::Erei)
}
