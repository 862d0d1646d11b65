//! Single trials and their aggregation.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CostSpec, NoiseSpec, RunConfig, Source};
use crate::combinatorics::{erei_bound, err_bound, erre_bound, ercs_count};
use crate::completion::{
    clamp_sample_size, run_ercs, run_erei, run_err, run_erre, run_ks2013, Algorithm, CompletionResult, EreiParams,
    ErcsParams, ErrParams, ErreParams, Ks2013Params,
};
use crate::cost::{run_erhc, run_erhc_column_costs};
use crate::error::{AmcError, Result};
use crate::generators::{generate, paper_fixture, rng_from_seed, FixtureSpec};
use crate::linalg::csv::read_csv;
use crate::linalg::{DenseMatrix, Tolerance};
use crate::noise::{run_eerei, run_lrebn, EereiParams, LrebnParams};
use crate::oracle::{CostModel, NoiseModel, ObservationOracle, UniformSampler};
use crate::sparsity::SubspaceProfile;

/// Independent per-trial seed for one purpose (fixture, noise, sampler, costs),
/// fixed by the base seed and trial index alone.
pub fn derive_seed(base: u64, trial: usize, purpose: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((trial as u64) << 2) | (purpose & 3));
    rng.next_u64()
}

/// A ground truth plus the subspace facts the algorithms are given.
#[derive(Clone, Debug)]
pub struct Instance {
    pub truth: DenseMatrix,
    pub rank: usize,
    pub psi_u: usize,
    pub psi_v: usize,
    pub mu_u: f64,
    pub costs: Option<DenseMatrix>,
}

impl Instance {
    pub fn psibar_u(&self) -> usize {
        self.truth.rows() - self.psi_u
    }

    /// Measures rank and subspace profiles of a given ground truth.
    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self> {
        measured(matrix, None)
    }
}

fn measured(matrix: DenseMatrix, costs: Option<DenseMatrix>) -> Result<Instance> {
    let tol = Tolerance::for_matrix(&matrix);
    let cp = SubspaceProfile::of_columns(&matrix, tol)?;
    let rp = SubspaceProfile::of_rows(&matrix, tol)?;
    Ok(Instance {
        rank: cp.rank,
        psi_u: cp.nonsparsity,
        psi_v: rp.nonsparsity,
        mu_u: cp.coherence,
        truth: matrix,
        costs,
    })
}

pub fn build_instance(cfg: &RunConfig, seed: u64) -> Result<Instance> {
    match &cfg.source {
        Source::Generated => {
            let fx = generate(&FixtureSpec::with_class(cfg.m, cfg.n, cfg.r, cfg.class, seed))?;
            Ok(Instance {
                rank: fx.rank,
                psi_u: fx.column_profile.nonsparsity,
                psi_v: fx.row_profile.nonsparsity,
                mu_u: fx.column_profile.coherence,
                truth: fx.matrix,
                costs: None,
            })
        }
        Source::Named(name) => {
            let fx = paper_fixture(name)?;
            measured(fx.matrix, fx.costs)
        }
        Source::Csv(path) => measured(read_csv(path)?, None),
    }
}

fn random_costs(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    let mut rng = rng_from_seed(seed);
    DenseMatrix::from_fn(m, n, |_, _| rng.random_range(1..=9) as f64)
}

fn cost_model(cfg: &RunConfig, inst: &Instance, seed: u64) -> Result<CostModel> {
    let (m, n) = inst.truth.shape();
    let per_column = cfg.alg == Algorithm::ErhcColumns;
    let spec = match &cfg.cost {
        Some(s) => s.clone(),
        None if cfg.alg == Algorithm::Erhc && inst.costs.is_some() => {
            return Ok(CostModel::PerEntry(inst.costs.clone().expect("checked")));
        }
        None if matches!(cfg.alg, Algorithm::Erhc | Algorithm::ErhcColumns) => CostSpec::Random,
        None => CostSpec::Uniform,
    };
    Ok(match spec {
        CostSpec::Uniform => CostModel::Uniform,
        CostSpec::Random if per_column => CostModel::PerColumn(random_costs(1, n, seed)?.row(0)),
        CostSpec::Random => CostModel::PerEntry(random_costs(m, n, seed)?),
        CostSpec::File(path) => {
            let c = read_csv(&path)?;
            if c.rows() == 1 && c.cols() == n && (m > 1 || per_column) {
                CostModel::PerColumn(c.row(0))
            } else {
                CostModel::PerEntry(c)
            }
        }
    })
}

fn noise_model(cfg: &RunConfig, n: usize, seed: u64) -> Result<NoiseModel> {
    Ok(match cfg.noise {
        NoiseSpec::None if cfg.alg == Algorithm::Lrebn => NoiseModel::Bounded { eps: 0.0, seed },
        NoiseSpec::None => NoiseModel::Clean,
        NoiseSpec::Sparse(a) => NoiseModel::random_sparse(n, a, seed)?,
        NoiseSpec::Bounded(eps) => NoiseModel::Bounded { eps, seed },
    })
}

/// Default KS2013 row count ⌈μ₀ r^{3/2} ln(r/ε)⌉, clamped to [1, m].
pub fn ks2013_default_d(mu0: f64, r: usize, eps: f64, m: usize) -> usize {
    let rf = r as f64;
    clamp_sample_size(mu0 * rf.powf(1.5) * (rf / eps).ln().max(0.0), m)
}

/// Runs a clean-data algorithm on `matrix` with uniform costs and the same
/// default parameters as [`run_trial`], scored at `success_tol` relative to the
/// largest entry.
pub fn complete_matrix(matrix: DenseMatrix, alg: Algorithm, eps: f64, seed: u64) -> Result<CompletionResult> {
    let cfg = RunConfig { alg, eps, ..Default::default() };
    if !(eps > 0.0 && eps < 1.0) {
        return Err(AmcError::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let inst = Instance::from_matrix(matrix)?;
    if inst.rank == 0 {
        return Err(AmcError::InvalidParameter("matrix is zero".into()));
    }
    let (m, n) = inst.truth.shape();
    let r = inst.rank;
    let tol = Tolerance::for_matrix(&inst.truth);
    let mut oracle = ObservationOracle::new(inst.truth.clone(), CostModel::Uniform, NoiseModel::Clean)?;
    let mut sampler = UniformSampler::new(seed);
    let mut res = match alg {
        Algorithm::Ks2013 => {
            let d = ks2013_default_d(inst.mu_u, r, eps, m);
            run_ks2013(&mut oracle, Ks2013Params { d }, &mut sampler, tol)?
        }
        Algorithm::Ercs => run_ercs(&mut oracle, ErcsParams { d: inst.psibar_u() + 1 }, &mut sampler, tol)?,
        Algorithm::Err => {
            let mut res = run_err(&mut oracle, ErrParams { r }, &mut sampler, tol)?;
            res.attach_bound(err_bound(m, n, r, inst.psi_u, inst.psi_v, eps)?.total);
            res
        }
        Algorithm::Erre => {
            let t = (1.0 / eps).ln().ceil().max(1.0) as usize;
            run_erre(&mut oracle, ErreParams { t }, &mut sampler, tol)?
        }
        Algorithm::Erei => run_erei(&mut oracle, EreiParams::new(r, inst.psi_u, inst.psi_v, eps), &mut sampler, tol)?,
        other => return Err(AmcError::InvalidParameter(format!("{other} is not a clean uniform-cost algorithm"))),
    };
    score(&mut res, &inst.truth, &cfg)?;
    Ok(res)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub alg: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub observations: usize,
    pub cost: f64,
    pub success: bool,
    pub rank_estimate: usize,
    pub phases: usize,
    pub exhausted: bool,
    pub max_abs_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noisy_detected: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noisy_injected: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_column_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

fn score(res: &mut CompletionResult, truth: &DenseMatrix, cfg: &RunConfig) -> Result<bool> {
    let tol = if cfg.exact { cfg.success_tol } else { cfg.success_tol * truth.max_abs().max(1.0) };
    res.score(truth, tol)
}

pub fn run_trial(cfg: &RunConfig, trial: usize) -> Result<TrialRecord> {
    let start = Instant::now();
    let seed = derive_seed(cfg.seed, trial, 0);
    let inst = build_instance(cfg, seed)?;
    let (m, n) = inst.truth.shape();
    let r = inst.rank;
    let tol = cfg.tolerance()?;
    let costs = cost_model(cfg, &inst, derive_seed(cfg.seed, trial, 3))?;
    let noise = noise_model(cfg, n, derive_seed(cfg.seed, trial, 1))?;
    let injected = match &noise {
        NoiseModel::SparseColumns { columns, .. } => {
            let mut c = columns.clone();
            c.sort_unstable();
            Some(c)
        }
        _ => None,
    };
    let mut oracle = ObservationOracle::new(inst.truth.clone(), costs, noise)?;
    let mut sampler = UniformSampler::new(derive_seed(cfg.seed, trial, 2));
    let check_d = |d: usize| -> Result<usize> {
        if d == 0 || d > m {
            return Err(AmcError::InvalidParameter(format!("d = {d} must lie in 1..={m}")));
        }
        Ok(d)
    };
    let mut noisy_detected = None;
    let mut max_column_error = None;
    let mut success_override = None;
    let mut plan_rows = None;
    let mut res = match cfg.alg {
        Algorithm::Ks2013 => {
            let d = check_d(cfg.d.unwrap_or_else(|| ks2013_default_d(cfg.mu.unwrap_or(inst.mu_u), r, cfg.eps, m)))?;
            let mut res = run_ks2013(&mut oracle, Ks2013Params { d }, &mut sampler, tol)?;
            res.attach_bound(ercs_count(m, n, r, d) as f64);
            res
        }
        Algorithm::Ercs => {
            let d = check_d(cfg.d.unwrap_or(cfg.psibar.unwrap_or(inst.psibar_u()) + 1))?;
            let mut res = run_ercs(&mut oracle, ErcsParams { d }, &mut sampler, tol)?;
            res.attach_bound(ercs_count(m, n, r, d) as f64);
            res
        }
        Algorithm::Err => {
            let mut res = run_err(&mut oracle, ErrParams { r }, &mut sampler, tol)?;
            res.attach_bound(err_bound(m, n, r, inst.psi_u, inst.psi_v, cfg.eps)?.total);
            res
        }
        Algorithm::Erre => {
            let t = cfg.t.unwrap_or((1.0 / cfg.eps).ln().ceil().max(1.0) as usize);
            let mut res = run_erre(&mut oracle, ErreParams { t }, &mut sampler, tol)?;
            res.attach_bound(erre_bound(m, n, r, inst.psi_u, inst.psi_v, cfg.eps, t)?.0);
            res
        }
        Algorithm::Erei => {
            let mut p = EreiParams::new(r, inst.psi_u, inst.psi_v, cfg.eps);
            p.d_override = cfg.d;
            let mut res = run_erei(&mut oracle, p, &mut sampler, tol)?;
            res.attach_bound(erei_bound(m, n, r, inst.psi_u, inst.psi_v, cfg.eps)?.total);
            res
        }
        Algorithm::Erhc => {
            let (res, plan) = run_erhc(&mut oracle, cfg.psibar.unwrap_or(inst.psibar_u()), tol)?;
            plan_rows = Some(plan.rows);
            res
        }
        Algorithm::ErhcColumns => {
            let (res, plan) = run_erhc_column_costs(&mut oracle, cfg.psibar.unwrap_or(inst.psibar_u()), tol)?;
            plan_rows = Some(plan.rows);
            res
        }
        Algorithm::Eerei => {
            let xi = cfg.xi.unwrap_or(injected.as_ref().map_or(0, Vec::len));
            let p = EereiParams { r, psi_u: inst.psi_u, psi_v: inst.psi_v, xi, eps: cfg.eps };
            let out = run_eerei(&mut oracle, p, &mut sampler, tol)?;
            let clean = out.clean_error(oracle.harness_truth())?;
            let found = out.noisy.sorted();
            let tol_abs = cfg.success_tol * oracle.harness_truth().max_abs().max(1.0);
            success_override = Some(Some(&found) == injected.as_ref() && clean <= tol_abs);
            noisy_detected = Some(found);
            let mut res = out.result;
            res.max_abs_error = Some(clean);
            res
        }
        Algorithm::Lrebn => {
            let eps = match cfg.noise {
                NoiseSpec::Bounded(e) => e,
                _ => 0.0,
            };
            let mut p = LrebnParams::new(cfg.mu.unwrap_or(inst.mu_u), r, eps, cfg.delta);
            p.adaptive = cfg.adaptive;
            p.scale = cfg.scale;
            let rep = run_lrebn(&mut oracle, p, &mut sampler, tol)?;
            let errs = rep.column_errors(oracle.harness_truth());
            max_column_error = Some(errs.iter().copied().fold(0.0, f64::max));
            success_override = Some(rep.result.rank_estimate <= r);
            let mut res = rep.result;
            res.max_abs_error = Some(res.recovered.max_abs_diff(oracle.harness_truth())?);
            res
        }
    };
    let success = match success_override {
        Some(s) => s,
        None => score(&mut res, &oracle.harness_truth().clone(), cfg)?,
    };
    Ok(TrialRecord {
        trial,
        seed,
        alg: cfg.alg.as_str().to_string(),
        m,
        n,
        r,
        observations: res.stats.count,
        cost: res.stats.cost,
        success,
        rank_estimate: res.rank_estimate,
        phases: res.phases,
        exhausted: res.exhausted,
        max_abs_error: res.max_abs_error.unwrap_or(f64::NAN),
        bound: res.bound,
        bound_ok: res.bound_ok,
        rows: plan_rows,
        columns: matches!(cfg.alg, Algorithm::Erhc | Algorithm::ErhcColumns).then(|| res.columns.clone()),
        noisy_detected,
        noisy_injected: injected.filter(|_| cfg.alg == Algorithm::Eerei),
        max_column_error,
        timing: Some(Timing { wall_ms: start.elapsed().as_secs_f64() * 1e3 }),
    })
}

/// All trials of a run, in trial order, computed in parallel.
pub fn run_trials(cfg: &RunConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub summary: bool,
    pub alg: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_obs: f64,
    pub std_obs: f64,
    pub mean_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_bound: Option<f64>,
    /// Fraction of successful trials whose count is within the bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_ok_rate: Option<f64>,
    pub required_success: f64,
    pub pass: bool,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

impl Summary {
    pub fn of(cfg: &RunConfig, records: &[TrialRecord]) -> Self {
        let obs: Vec<f64> = records.iter().map(|r| r.observations as f64).collect();
        let (mean_obs, std_obs) = mean_std(&obs);
        let successes = records.iter().filter(|r| r.success).count();
        let success_rate = successes as f64 / records.len().max(1) as f64;
        let bounds: Vec<f64> = records.iter().filter_map(|r| r.bound).collect();
        let mean_bound = (!bounds.is_empty()).then(|| mean_std(&bounds).0);
        let judged: Vec<bool> = records.iter().filter(|r| r.success).filter_map(|r| r.bound_ok).collect();
        let bound_ok_rate =
            (!judged.is_empty()).then(|| judged.iter().filter(|&&b| b).count() as f64 / judged.len() as f64);
        let required_success = cfg.required_success();
        Self {
            summary: true,
            alg: cfg.alg.as_str().to_string(),
            trials: records.len(),
            successes,
            success_rate,
            mean_obs,
            std_obs,
            mean_cost: mean_std(&records.iter().map(|r| r.cost).collect::<Vec<_>>()).0,
            mean_bound,
            bound_ok_rate,
            required_success,
            pass: success_rate >= required_success,
        }
    }
}
