//! Nonsparsity number ψ, sparsity number ψ̄ = m − ψ and coherence μ of a
//! subspace, plus the inequalities tying them together.
//!
//! ψ is the smallest support of a nonzero vector in the subspace. Two exact
//! methods are provided: maximising the size of a row set `Z` on which the
//! basis loses rank, and enumerating kernels of `(r−1)`-row restrictions.

use std::fmt;

use itertools::Itertools;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AmcError, Result};
use crate::linalg::exact::{self, Rational};
use crate::linalg::{norm, orthonormalize, DenseMatrix, OrthonormalBasis, Tolerance};

/// Largest ambient dimension handled by the zero-set enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 22;

/// Largest number of `(r−1)`-subsets the kernel enumeration will visit.
pub const KERNEL_BUDGET: u128 = 3_000_000;

const CHUNK: usize = 4096;

/// Rank, ψ, ψ̄ and μ of one subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceProfile {
    pub ambient: usize,
    pub rank: usize,
    pub nonsparsity: usize,
    pub sparsity: usize,
    pub coherence: f64,
    /// False when `nonsparsity` is only a lower bound.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileViolation {
    SparsityBelowRankBound { sparsity: usize, rank: usize },
    SparsityAboveMax { sparsity: usize, ambient: usize },
    SparsityMismatch { sparsity: usize, nonsparsity: usize, ambient: usize },
    CoherenceBelowOne(f64),
    CoherenceAboveMax { coherence: f64, max: f64 },
    CoherenceBelowSparsityBound { coherence: f64, bound: f64 },
}

impl fmt::Display for ProfileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SparsityBelowRankBound { sparsity, rank } => {
                write!(f, "ψ̄ < r−1 (ψ̄ = {sparsity}, r = {rank})")
            }
            Self::SparsityAboveMax { sparsity, ambient } => write!(f, "ψ̄ > m−1 (ψ̄ = {sparsity}, m = {ambient})"),
            Self::SparsityMismatch { sparsity, nonsparsity, ambient } => {
                write!(f, "ψ̄ ≠ m−ψ (ψ̄ = {sparsity}, ψ = {nonsparsity}, m = {ambient})")
            }
            Self::CoherenceBelowOne(mu) => write!(f, "μ < 1 (μ = {mu})"),
            Self::CoherenceAboveMax { coherence, max } => write!(f, "μ > m/r (μ = {coherence}, m/r = {max})"),
            Self::CoherenceBelowSparsityBound { coherence, bound } => {
                write!(f, "μ < (m/r)/ψ (μ = {coherence}, bound = {bound})")
            }
        }
    }
}

/// μ = (m/r)·max_j ||P_U e_j||².
pub fn coherence(basis: &OrthonormalBasis) -> Result<f64> {
    let r = basis.rank();
    if r == 0 {
        return Err(AmcError::InvalidParameter("coherence of the zero subspace".into()));
    }
    let m = basis.ambient_dim();
    let best = (0..m)
        .map(|i| basis.vectors().iter().map(|q| q[i] * q[i]).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(m as f64 / r as f64 * best)
}

/// Coherence of the column span of `span`.
pub fn coherence_of_span(span: &DenseMatrix, tol: Tolerance) -> Result<f64> {
    coherence(&orthonormalize(span.rows(), &span.columns(), tol.as_float())?)
}

/// Row-subset rank oracle over a fixed spanning set.
enum SpanRep {
    /// Rows of an orthonormal `m x r` basis.
    Float { rows: Vec<Vec<f64>>, rel: f64 },
    /// Rows of an `m x r` integer/rational matrix with independent columns.
    Exact { rows: Vec<Vec<Rational>> },
}

impl SpanRep {
    fn from_basis(basis: &OrthonormalBasis) -> Self {
        let m = basis.ambient_dim();
        let rows = (0..m).map(|i| basis.vectors().iter().map(|q| q[i]).collect()).collect();
        SpanRep::Float { rows, rel: basis.tolerance().relative() }
    }

    fn from_span(span: &DenseMatrix, tol: Tolerance) -> Result<Self> {
        if tol.is_exact() {
            let mut chosen: Vec<usize> = Vec::new();
            for j in 0..span.cols() {
                let mut trial = chosen.clone();
                trial.push(j);
                let all: Vec<usize> = (0..span.rows()).collect();
                if exact::rank_of(&span.select(&all, &trial)?) == trial.len() {
                    chosen = trial;
                }
            }
            let rows = (0..span.rows())
                .map(|i| chosen.iter().map(|&j| exact::to_rational(span.get(i, j))).collect())
                .collect();
            Ok(SpanRep::Exact { rows })
        } else {
            Ok(Self::from_basis(&orthonormalize(span.rows(), &span.columns(), tol)?))
        }
    }

    fn ambient(&self) -> usize {
        match self {
            SpanRep::Float { rows, .. } => rows.len(),
            SpanRep::Exact { rows } => rows.len(),
        }
    }

    fn rank(&self) -> usize {
        match self {
            SpanRep::Float { rows, .. } => rows.first().map_or(0, Vec::len),
            SpanRep::Exact { rows } => rows.first().map_or(0, Vec::len),
        }
    }

    fn rank_rows(&self, z: &[usize]) -> usize {
        match self {
            SpanRep::Float { rows, rel } => {
                let r = self.rank();
                let cols: Vec<Vec<f64>> = (0..r).map(|c| z.iter().map(|&i| rows[i][c]).collect()).collect();
                float_rank_abs(&cols, rel * z.len().max(r).max(1) as f64)
            }
            SpanRep::Exact { rows } => exact::rank(z.iter().map(|&i| rows[i].clone()).collect()),
        }
    }

    /// Support size of the lifted kernel vector of the rows `t`, when the
    /// restriction has rank exactly `r − 1`.
    fn kernel_support(&self, t: &[usize]) -> Option<usize> {
        let r = self.rank();
        match self {
            SpanRep::Float { rows, rel } => {
                let thr = rel * t.len().max(r).max(1) as f64;
                // orthonormal basis of the restricted row space inside R^r
                let mut qs: Vec<Vec<f64>> = Vec::new();
                for &i in t {
                    let mut v = rows[i].clone();
                    gs_deflate(&qs, &mut v);
                    let nv = norm(&v);
                    if nv > thr {
                        v.iter_mut().for_each(|x| *x /= nv);
                        qs.push(v);
                    }
                }
                if qs.len() != r - 1 {
                    return None;
                }
                let mut best: Option<Vec<f64>> = None;
                let mut best_norm = 0.0;
                for e in 0..r {
                    let mut v = vec![0.0; r];
                    v[e] = 1.0;
                    gs_deflate(&qs, &mut v);
                    let nv = norm(&v);
                    if nv > best_norm {
                        best_norm = nv;
                        best = Some(v);
                    }
                }
                let c: Vec<f64> = best?.iter().map(|x| x / best_norm).collect();
                let lifted_thr = rel * rows.len().max(1) as f64;
                Some(
                    rows.iter()
                        .filter(|row| row.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>().abs() > lifted_thr)
                        .count(),
                )
            }
            SpanRep::Exact { rows } => {
                let sub: Vec<Vec<Rational>> = t.iter().map(|&i| rows[i].clone()).collect();
                if exact::rank(sub.clone()) != r - 1 {
                    return None;
                }
                let ns = exact::nullspace(sub, r);
                let c = ns.first()?;
                Some(
                    rows.iter()
                        .filter(|row| !row.iter().zip(c).map(|(a, b)| a * b).sum::<Rational>().is_zero())
                        .count(),
                )
            }
        }
    }
}

fn gs_deflate(qs: &[Vec<f64>], v: &mut [f64]) {
    for _ in 0..2 {
        for q in qs {
            let h: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= h * y;
            }
        }
    }
}

fn float_rank_abs(cols: &[Vec<f64>], thr: f64) -> usize {
    let mut qs: Vec<Vec<f64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        gs_deflate(&qs, &mut v);
        let nv = norm(&v);
        if nv > thr {
            v.iter_mut().for_each(|x| *x /= nv);
            qs.push(v);
        }
    }
    qs.len()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

fn require_nonzero(rep: &SpanRep) -> Result<()> {
    if rep.rank() == 0 {
        return Err(AmcError::InvalidParameter("nonsparsity of the zero subspace is undefined".into()));
    }
    Ok(())
}

fn zero_set_method(rep: &SpanRep) -> Result<usize> {
    require_nonzero(rep)?;
    let m = rep.ambient();
    let r = rep.rank();
    if m > EXHAUSTIVE_LIMIT {
        return Err(AmcError::EstimateOnly(format!(
            "zero-set enumeration is capped at m = {EXHAUSTIVE_LIMIT}, got m = {m}"
        )));
    }
    // any r−1 rows are rank deficient, so ψ̄ ≥ r−1
    for s in (r..m).rev() {
        let mut it = (0..m).combinations(s);
        loop {
            let chunk: Vec<Vec<usize>> = it.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            if chunk.par_iter().any(|z| rep.rank_rows(z) < r) {
                return Ok(m - s);
            }
        }
    }
    Ok(m - (r - 1))
}

fn kernel_method(rep: &SpanRep) -> Result<usize> {
    require_nonzero(rep)?;
    let m = rep.ambient();
    let r = rep.rank();
    if binomial(m, r - 1) > KERNEL_BUDGET {
        return Err(AmcError::EstimateOnly(format!(
            "kernel enumeration over C({m}, {}) row subsets exceeds the budget",
            r - 1
        )));
    }
    let mut best = m;
    let mut it = (0..m).combinations(r - 1);
    loop {
        let chunk: Vec<Vec<usize>> = it.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        if let Some(b) = chunk.par_iter().filter_map(|t| rep.kernel_support(t)).min() {
            best = best.min(b);
        }
    }
    Ok(best)
}

/// ψ of the span of an orthonormal basis by whichever exact method is
/// cheaper; errors with `EstimateOnly` when neither is feasible.
pub fn nonsparsity_number_exact(basis: &OrthonormalBasis) -> Result<usize> {
    exact_dispatch(&SpanRep::from_basis(basis))
}

fn exact_dispatch(rep: &SpanRep) -> Result<usize> {
    require_nonzero(rep)?;
    let m = rep.ambient();
    let r = rep.rank();
    let kernel_cost = binomial(m, r - 1);
    let zero_cost = if m <= EXHAUSTIVE_LIMIT { 1u128 << m } else { u128::MAX };
    if kernel_cost <= KERNEL_BUDGET && kernel_cost <= zero_cost {
        kernel_method(rep)
    } else if m <= EXHAUSTIVE_LIMIT {
        zero_set_method(rep)
    } else {
        kernel_method(rep)
    }
}

/// ψ of the column span of `span`; exact rational arithmetic when `tol` is exact.
pub fn nonsparsity_of_span(span: &DenseMatrix, tol: Tolerance) -> Result<usize> {
    exact_dispatch(&SpanRep::from_span(span, tol)?)
}

/// ψ by zero-set maximisation only.
pub fn nonsparsity_zero_set(span: &DenseMatrix, tol: Tolerance) -> Result<usize> {
    zero_set_method(&SpanRep::from_span(span, tol)?)
}

/// ψ by `(r−1)`-row kernel enumeration only.
pub fn nonsparsity_by_kernels(span: &DenseMatrix, tol: Tolerance) -> Result<usize> {
    kernel_method(&SpanRep::from_span(span, tol)?)
}

pub fn sparsity_number(basis: &OrthonormalBasis) -> Result<usize> {
    Ok(basis.ambient_dim() - nonsparsity_number_exact(basis)?)
}

/// Lower bound ψ ≥ max(1, (m/r)/μ).
pub fn nonsparsity_lower_bound(m: usize, r: usize, mu: f64) -> usize {
    let b = (m as f64 / r as f64) / mu;
    (b - 1e-9).ceil().max(1.0) as usize
}

impl SubspaceProfile {
    /// Profile of the column span of `span`. ψ is exact when one of the
    /// exact methods is feasible, otherwise a coherence-derived lower bound.
    pub fn of_span(span: &DenseMatrix, tol: Tolerance) -> Result<Self> {
        let basis = orthonormalize(span.rows(), &span.columns(), tol.as_float())?;
        let rep = SpanRep::from_span(span, tol)?;
        let rank = rep.rank();
        if rank == 0 {
            return Err(AmcError::InvalidParameter("profile of the zero subspace".into()));
        }
        let mu = coherence(&basis)?;
        let m = span.rows();
        let (psi, exact) = match exact_dispatch(&rep) {
            Ok(p) => (p, true),
            Err(AmcError::EstimateOnly(_)) => (nonsparsity_lower_bound(m, rank, mu), false),
            Err(e) => return Err(e),
        };
        Ok(Self { ambient: m, rank, nonsparsity: psi, sparsity: m - psi, coherence: mu, exact })
    }

    pub fn of_columns(matrix: &DenseMatrix, tol: Tolerance) -> Result<Self> {
        Self::of_span(matrix, tol)
    }

    pub fn of_rows(matrix: &DenseMatrix, tol: Tolerance) -> Result<Self> {
        Self::of_span(&matrix.transpose(), tol)
    }

    /// Profile from values known by construction, with μ measured.
    pub fn from_known(basis: &OrthonormalBasis, nonsparsity: usize) -> Result<Self> {
        let m = basis.ambient_dim();
        Ok(Self {
            ambient: m,
            rank: basis.rank(),
            nonsparsity,
            sparsity: m - nonsparsity,
            coherence: coherence(basis)?,
            exact: true,
        })
    }
}

/// Empty iff r−1 ≤ ψ̄ ≤ m−1, ψ̄ = m−ψ, 1 ≤ μ ≤ m/r and μ ≥ (m/r)/ψ.
pub fn validate_profile(p: &SubspaceProfile) -> Vec<ProfileViolation> {
    let mut out = Vec::new();
    let slack = 1e-9;
    if p.rank >= 1 && p.sparsity + 1 < p.rank {
        out.push(ProfileViolation::SparsityBelowRankBound { sparsity: p.sparsity, rank: p.rank });
    }
    if p.sparsity + 1 > p.ambient {
        out.push(ProfileViolation::SparsityAboveMax { sparsity: p.sparsity, ambient: p.ambient });
    }
    if p.sparsity + p.nonsparsity != p.ambient {
        out.push(ProfileViolation::SparsityMismatch {
            sparsity: p.sparsity,
            nonsparsity: p.nonsparsity,
            ambient: p.ambient,
        });
    }
    if p.rank >= 1 {
        let max = p.ambient as f64 / p.rank as f64;
        if p.coherence < 1.0 - slack {
            out.push(ProfileViolation::CoherenceBelowOne(p.coherence));
        }
        if p.coherence > max * (1.0 + slack) {
            out.push(ProfileViolation::CoherenceAboveMax { coherence: p.coherence, max });
        }
        if p.nonsparsity >= 1 {
            let bound = max / p.nonsparsity as f64;
            if p.coherence < bound * (1.0 - slack) {
                out.push(ProfileViolation::CoherenceBelowSparsityBound { coherence: p.coherence, bound });
            }
        }
    }
    out
}
