//! Recovery under corrupted observations.
//!
//! EEREI handles a few columns replaced by random vectors: it runs the EREI
//! loop (noisy columns are detected like any independent column) and then
//! flags the columns whose deletion lowers the rank. LREBN estimates a
//! low-rank matrix whose columns carry bounded noise, growing its sample
//! size with an upper estimate of the angle between the learned and the
//! true subspace.

use std::f64::consts::PI;

use serde::Serialize;

use crate::combinatorics::lrebn_d_raw;
use crate::completion::{clamp_sample_size, run_erei_engine, Algorithm, CompletionResult};
use crate::error::{AmcError, Result};
use crate::linalg::{
    lstsq_min_norm, numeric_rank, reconstruct_column, restricted_residual, DenseMatrix, IndexSet, OrthonormalBasis,
    Tolerance,
};
use crate::oracle::{ObservationOracle, RowSampler};

/// A column counts as a rank decrement when its leverage in the row space
/// is within this distance of 1.
pub const LEVERAGE_SLACK: f64 = 1e-6;

/// Columns whose removal lowers the rank, i.e. those `j` with `e_j` in the
/// row space. Uses row-space leverage scores; exact mode deletes and recounts.
pub fn rank_decrement_columns(matrix: &DenseMatrix, tol: Tolerance) -> Result<IndexSet> {
    if tol.is_exact() {
        return rank_decrement_columns_by_deletion(matrix, tol);
    }
    let n = matrix.cols();
    let svd = matrix.to_nalgebra().svd(false, true);
    let vt = svd.v_t.as_ref().ok_or_else(|| AmcError::InvalidParameter("SVD did not converge".into()))?;
    let s = &svd.singular_values;
    let smax = s.max();
    if smax == 0.0 {
        return Ok(IndexSet::empty(n));
    }
    let thr = tol.rank_threshold(smax, matrix.rows(), n);
    let keep: Vec<usize> = (0..s.len()).filter(|&l| s[l] > thr).collect();
    let hits = (0..n).filter(|&j| {
        let lev: f64 = keep.iter().map(|&l| vt[(l, j)] * vt[(l, j)]).sum();
        lev >= 1.0 - LEVERAGE_SLACK
    });
    IndexSet::new(hits.collect(), n)
}

/// Reference route: delete each column and recompute the rank.
pub fn rank_decrement_columns_by_deletion(matrix: &DenseMatrix, tol: Tolerance) -> Result<IndexSet> {
    let n = matrix.cols();
    let full = numeric_rank(matrix, tol);
    if n == 1 {
        return IndexSet::new(if full == 1 { vec![0] } else { vec![] }, 1);
    }
    let mut hits = Vec::new();
    for j in 0..n {
        if numeric_rank(&matrix.without_column(j)?, tol) < full {
            hits.push(j);
        }
    }
    IndexSet::new(hits, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EereiParams {
    pub r: usize,
    pub psi_u: usize,
    pub psi_v: usize,
    /// Assumed number of noisy columns.
    pub xi: usize,
    pub eps: f64,
}

impl EereiParams {
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
        Ok(())
    }

    /// First branch 2(m/ψU)ln(r/ε); when ξ ≤ ψV/2 the smaller of that and
    /// 4(m/ψU)(r+2+ln(1/ε))/ψV.
    pub fn sample_size(&self, m: usize) -> usize {
        let mf = m as f64;
        let pu = self.psi_u as f64;
        let first = 2.0 * (mf / pu) * (self.r as f64 / self.eps).ln();
        let d = if 2 * self.xi <= self.psi_v {
            first.min(4.0 * (mf / pu) * (self.r as f64 + 2.0 + (1.0 / self.eps).ln()) / self.psi_v as f64)
        } else {
            first
        };
        clamp_sample_size(d, m)
    }
}

#[derive(Clone, Debug)]
pub struct EereiOutcome {
    /// Columns flagged as noisy.
    pub noisy: IndexSet,
    /// Recovered matrix; columns in `noisy` hold whatever was observed.
    pub result: CompletionResult,
}

impl EereiOutcome {
    /// Largest absolute error over the columns not flagged as noisy.
    pub fn clean_error(&self, truth: &DenseMatrix) -> Result<f64> {
        if truth.shape() != self.result.recovered.shape() {
            return Err(AmcError::Dimension("truth and recovery differ in shape".into()));
        }
        let (m, n) = truth.shape();
        let mut worst: f64 = 0.0;
        for j in (0..n).filter(|j| !self.noisy.contains(*j)) {
            for i in 0..m {
                worst = worst.max((truth.get(i, j) - self.result.recovered.get(i, j)).abs());
            }
        }
        Ok(worst)
    }
}

pub fn run_eerei(
    oracle: &mut ObservationOracle,
    params: EereiParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<EereiOutcome> {
    let (m, n) = oracle.shape();
    params.validate(m, n)?;
    let result = run_erei_engine(oracle, params.sample_size(m), sampler, tol, Algorithm::Eerei)?;
    let noisy = rank_decrement_columns(&result.recovered, tol)?;
    Ok(EereiOutcome { noisy, result })
}

/// Worst-case angle between the learned and the true k-dimensional spaces:
/// (3π/2)√(kε).
pub fn angle_cap(k: usize, eps: f64) -> f64 {
    1.5 * PI * (k as f64 * eps.max(0.0)).sqrt()
}

/// Coherence bound for a perturbed space: 2μ_k + 2(m/k)θ².
pub fn noisy_coherence_bound(mu_k: f64, m: usize, k: usize, theta: f64) -> Result<f64> {
    if k == 0 {
        return Err(AmcError::InvalidParameter("k must be positive".into()));
    }
    Ok(2.0 * mu_k + 2.0 * (m as f64 / k as f64) * theta * theta)
}

/// Running upper estimate θ̃ of the angle between the learned and true spaces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleTracker {
    eps: f64,
    k: usize,
    theta: f64,
    history: Vec<f64>,
}

impl AngleTracker {
    pub fn new(eps: f64) -> Self {
        Self { eps, k: 0, theta: 0.0, history: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn cap(&self) -> f64 {
        angle_cap(self.k, self.eps)
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Adds one basis vector whose angle to the previous learned space was
    /// estimated as `new_angle`, and returns the new θ̃.
    pub fn update(&mut self, new_angle: f64) -> f64 {
        self.k += 1;
        let cap = angle_cap(self.k, self.eps);
        let numer = self.eps.min(1.0).asin();
        let denom = new_angle - self.theta;
        let next = if denom > 0.0 { 0.5 * PI * numer / denom + self.theta } else { cap };
        self.theta = next.min(cap).max(self.theta);
        self.history.push(self.theta);
        self.theta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LrebnParams {
    pub mu: f64,
    pub r: usize,
    pub eps: f64,
    pub delta: f64,
    /// Angle-driven d; when false d always grows by the worst-case angle.
    pub adaptive: bool,
    /// Multiplies the sample-size formula. 1.0 is the formula as stated.
    pub scale: f64,
}

impl LrebnParams {
    pub fn new(mu: f64, r: usize, eps: f64, delta: f64) -> Self {
        Self { mu, r, eps, delta, adaptive: true, scale: 1.0 }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.r == 0 || self.r > m {
            return Err(AmcError::InvalidParameter(format!("rank {} must lie in 1..={m}", self.r)));
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(AmcError::InvalidParameter(format!("μ must be positive, got {}", self.mu)));
        }
        if !(self.eps >= 0.0 && self.eps < 0.25) {
            return Err(AmcError::InvalidParameter(format!("ε must lie in [0, 1/4), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta <= 0.1) {
            return Err(AmcError::InvalidParameter(format!("δ must lie in (0, 0.1], got {}", self.delta)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(AmcError::InvalidParameter(format!("scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    pub fn sample_size(&self, theta: f64, m: usize) -> usize {
        clamp_sample_size(self.scale * lrebn_d_raw(self.mu, self.r, self.delta, theta, m), m)
    }

    /// (1+ε)(√(3d/2m)θ̃ + √(3dkε/2m)).
    pub fn threshold(&self, d: usize, k: usize, theta: f64, m: usize) -> f64 {
        let a = 1.5 * d as f64 / m as f64;
        (1.0 + self.eps) * (a.sqrt() * theta + (a * k as f64 * self.eps).sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct LrebnReport {
    pub result: CompletionResult,
    /// Sample size in force when each column was probed.
    pub column_d: Vec<usize>,
    /// Basis dimension when each column was probed.
    pub column_k: Vec<usize>,
    pub tracker: AngleTracker,
}

impl LrebnReport {
    /// ℓ₂ error of each column against `truth`.
    pub fn column_errors(&self, truth: &DenseMatrix) -> Vec<f64> {
        let rec = &self.result.recovered;
        (0..truth.cols())
            .map(|j| (0..truth.rows()).map(|i| (truth.get(i, j) - rec.get(i, j)).powi(2)).sum::<f64>().sqrt())
            .collect()
    }
}

fn back_project(basis: &OrthonormalBasis, omega: &IndexSet, x: &[f64], tol: Tolerance) -> Result<Vec<f64>> {
    match reconstruct_column(basis, omega, x) {
        Err(AmcError::RankDeficient) => {
            let u = basis.to_matrix().ok_or(AmcError::RankDeficient)?;
            let c = lstsq_min_norm(&u.select(omega.as_slice(), &(0..basis.rank()).collect::<Vec<_>>())?, x, tol)?;
            Ok(basis.combine(&c))
        }
        other => other,
    }
}

pub fn run_lrebn(
    oracle: &mut ObservationOracle,
    params: LrebnParams,
    sampler: &mut dyn RowSampler,
    tol: Tolerance,
) -> Result<LrebnReport> {
    let (m, n) = oracle.shape();
    params.validate(m)?;
    let tol = Tolerance::new(tol.relative())?;
    let all: Vec<usize> = (0..m).collect();
    let mut tracker = AngleTracker::new(params.eps);
    let mut basis = OrthonormalBasis::empty(m, tol);
    let mut d = params.sample_size(0.0, m);
    let mut omega = IndexSet::new(sampler.sample_rows(&all, d), m)?;
    let mut recovered = DenseMatrix::zeros(m, n)?;
    let mut columns = Vec::new();
    let mut column_d = Vec::with_capacity(n);
    let mut column_k = Vec::with_capacity(n);
    for j in 0..n {
        column_d.push(d);
        column_k.push(basis.rank());
        let x = oracle.observe_entries(omega.as_slice(), j)?;
        let res = restricted_residual(&basis, &omega, &x)?;
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let thr = params.threshold(d, basis.rank(), tracker.theta(), m) + tol.residual_threshold(xnorm, d);
        if res > thr && basis.rank() < m {
            let col = oracle.observe_column(j)?;
            recovered.set_column(j, &col);
            if !basis.try_push(&col)? {
                continue;
            }
            columns.push(j);
            let seen = ((2.0 * m as f64 / (3.0 * d as f64)).sqrt() * res / (1.0 + params.eps)).min(0.5 * PI);
            let theta = tracker.update(seen);
            let theta_for_d = if params.adaptive { theta } else { tracker.cap() };
            d = params.sample_size(theta_for_d, m);
            omega = IndexSet::new(sampler.sample_rows(&all, d), m)?;
        } else if basis.rank() > 0 {
            recovered.set_column(j, &back_project(&basis, &omega, &x, tol)?);
        }
    }
    let mut result = CompletionResult::new(Algorithm::Lrebn, recovered, oracle.stats());
    result.rank_estimate = basis.rank();
    result.columns = columns;
    result.phases = 1;
    Ok(LrebnReport { result, column_d, column_k, tracker })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_gaussian_lowrank, paper_fixture};
    use crate::oracle::{CostModel, NoiseModel, UniformSampler};
    use crate::sparsity::coherence_of_span;

    #[test]
    fn decrement_columns_on_fixtures() {
        let a = paper_fixture("A").unwrap().matrix;
        let b = paper_fixture("B").unwrap().matrix;
        let i3 = DenseMatrix::identity(3).unwrap();
        for tol in [Tolerance::default(), Tolerance::exact()] {
            assert_eq!(rank_decrement_columns(&a, tol).unwrap().sorted(), vec![0]);
            assert!(rank_decrement_columns(&b, tol).unwrap().is_empty());
            assert_eq!(rank_decrement_columns(&i3, tol).unwrap().sorted(), vec![0, 1, 2]);
        }
    }

    #[test]
    fn leverage_route_matches_deletion() {
        for seed in 0..20 {
            let l = gen_gaussian_lowrank(8, 10, 3, seed).unwrap();
            let (noisy, _) = crate::generators::inject_sparse_noise_columns(&l, (seed % 4) as usize, seed).unwrap();
            let tol = Tolerance::default();
            assert_eq!(
                rank_decrement_columns(&noisy, tol).unwrap().sorted(),
                rank_decrement_columns_by_deletion(&noisy, tol).unwrap().sorted()
            );
        }
    }

    #[test]
    fn eerei_sample_size_branches() {
        let p = EereiParams { r: 5, psi_u: 46, psi_v: 196, xi: 5, eps: 0.1 };
        let first = 2.0 * (50.0 / 46.0) * 50f64.ln();
        let second = 4.0 * (50.0 / 46.0) * (7.0 + 10f64.ln()) / 196.0;
        assert_eq!(p.sample_size(50), first.min(second).ceil() as usize);
        let p = EereiParams { xi: 99, ..p };
        assert_eq!(p.sample_size(50), first.ceil() as usize);
    }

    #[test]
    fn eerei_finds_injected_columns() {
        let mut good = 0;
        for seed in 0..20u64 {
            let l = gen_gaussian_lowrank(30, 60, 3, seed).unwrap();
            let noise = NoiseModel::random_sparse(60, 3, seed + 7).unwrap();
            let NoiseModel::SparseColumns { columns, .. } = &noise else { unreachable!() };
            let mut injected = columns.clone();
            injected.sort_unstable();
            let mut o = ObservationOracle::new(l.clone(), CostModel::Uniform, noise).unwrap();
            let p = EereiParams { r: 3, psi_u: 28, psi_v: 58, xi: 3, eps: 0.1 };
            let out = run_eerei(&mut o, p, &mut UniformSampler::new(seed), Tolerance::default()).unwrap();
            if out.noisy.sorted() == injected && out.clean_error(&l).unwrap() < 1e-8 {
                good += 1;
            }
        }
        assert!(good >= 18, "{good}/20");
    }

    #[test]
    fn eerei_without_noise_is_erei() {
        let l = gen_gaussian_lowrank(20, 30, 2, 3).unwrap();
        let mut o = ObservationOracle::clean(l.clone());
        let p = EereiParams { r: 2, psi_u: 19, psi_v: 29, xi: 0, eps: 0.1 };
        let out = run_eerei(&mut o, p, &mut UniformSampler::new(1), Tolerance::default()).unwrap();
        assert!(out.noisy.is_empty());
        assert!(out.clean_error(&l).unwrap() < 1e-9);
    }

    #[test]
    fn angle_cap_values() {
        assert_eq!(angle_cap(0, 0.3), 0.0);
        assert!((angle_cap(1, 0.04) - 0.942_477_796).abs() < 1e-8);
        // a_k = a_{k-1} + (π/2)√(ε/k) never passes the cap
        let eps = 0.01;
        let mut a = 0.0;
        for k in 1..=10_000usize {
            a += 0.5 * PI * (eps / k as f64).sqrt();
            assert!(a <= angle_cap(k, eps) + 1e-12);
        }
    }

    #[test]
    fn tracker_is_monotone_and_capped() {
        let mut t = AngleTracker::new(0.02);
        for seen in [0.9, 0.05, 1.2, 0.0, 0.3] {
            let before = t.theta();
            let th = t.update(seen);
            assert!(th >= before && th <= t.cap() + 1e-15);
        }
        let mut z = AngleTracker::new(0.0);
        assert_eq!(z.update(0.7), 0.0);
    }

    #[test]
    fn coherence_bound_zero_angle() {
        assert_eq!(noisy_coherence_bound(1.5, 10, 2, 0.0).unwrap(), 3.0);
        assert!(noisy_coherence_bound(1.5, 10, 0, 0.0).is_err());
    }

    fn lrebn_fixture(seed: u64) -> (DenseMatrix, f64) {
        let l = gen_gaussian_lowrank(60, 80, 3, seed).unwrap();
        let mu = coherence_of_span(&l, Tolerance::default()).unwrap();
        (l, mu)
    }

    #[test]
    fn lrebn_clean_is_exact() {
        for seed in 0..5 {
            let (l, mu) = lrebn_fixture(seed);
            let mut o = ObservationOracle::new(l, CostModel::Uniform, NoiseModel::Bounded { eps: 0.0, seed }).unwrap();
            let mut p = LrebnParams::new(mu, 3, 0.0, 0.05);
            p.scale = 0.01;
            let rep = run_lrebn(&mut o, p, &mut UniformSampler::new(seed), Tolerance::default()).unwrap();
            assert_eq!(rep.result.rank_estimate, 3);
            let err = rep.result.recovered.max_abs_diff(o.harness_truth()).unwrap();
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn lrebn_noisy_dimension_bounded() {
        for seed in 0..5 {
            let (l, mu) = lrebn_fixture(seed);
            for adaptive in [true, false] {
                let mut o =
                    ObservationOracle::new(l.clone(), CostModel::Uniform, NoiseModel::Bounded { eps: 0.01, seed }).unwrap();
                let mut p = LrebnParams::new(mu, 3, 0.01, 0.05);
                p.scale = 0.01;
                p.adaptive = adaptive;
                let rep = run_lrebn(&mut o, p, &mut UniformSampler::new(seed), Tolerance::default()).unwrap();
                assert!(rep.result.rank_estimate <= 3);
                assert!(rep.column_d.iter().all(|&d| d <= 60));
            }
        }
    }

    #[test]
    fn lrebn_parameter_checks() {
        let l = gen_gaussian_lowrank(10, 10, 2, 0).unwrap();
        let mut o = ObservationOracle::new(l, CostModel::Uniform, NoiseModel::Bounded { eps: 0.1, seed: 0 }).unwrap();
        let bad = [
            LrebnParams::new(1.0, 2, 0.3, 0.05),
            LrebnParams::new(1.0, 2, 0.1, 0.2),
            LrebnParams::new(0.0, 2, 0.1, 0.05),
            LrebnParams::new(1.0, 0, 0.1, 0.05),
        ];
        for p in bad {
            assert!(run_lrebn(&mut o, p, &mut UniformSampler::new(0), Tolerance::default()).is_err());
        }
    }
}
