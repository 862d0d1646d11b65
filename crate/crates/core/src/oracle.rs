//! Metered access to ground-truth entries.
//!
//! Algorithms read the hidden matrix only through [`ObservationOracle`].
//! The first read of an entry is counted and charged under the cost model;
//! re-reads are free and return the cached value.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AmcError, Result};
use crate::generators::{inject_bounded_noise, normalize_columns, rng_from_seed};
use crate::linalg::{DenseMatrix, PartialMatrix};

/// Price of observing each entry.
#[derive(Clone, Debug, PartialEq)]
pub enum CostModel {
    Uniform,
    PerColumn(Vec<f64>),
    PerEntry(DenseMatrix),
}

impl CostModel {
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let ok = |v: &f64| v.is_finite() && *v >= 0.0;
        match self {
            CostModel::Uniform => Ok(()),
            CostModel::PerColumn(c) => {
                if c.len() != n {
                    return Err(AmcError::CostModel(format!("{} column costs for {n} columns", c.len())));
                }
                if !c.iter().all(ok) {
                    return Err(AmcError::CostModel("column costs must be finite and nonnegative".into()));
                }
                Ok(())
            }
            CostModel::PerEntry(c) => {
                if c.shape() != (m, n) {
                    return Err(AmcError::CostModel(format!(
                        "cost matrix is {}x{}, target is {m}x{n}",
                        c.rows(),
                        c.cols()
                    )));
                }
                if !c.data().iter().all(ok) {
                    return Err(AmcError::CostModel("entry costs must be nonnegative".into()));
                }
                Ok(())
            }
        }
    }

    pub fn entry_cost(&self, i: usize, j: usize) -> f64 {
        match self {
            CostModel::Uniform => 1.0,
            CostModel::PerColumn(c) => c[j],
            CostModel::PerEntry(c) => c.get(i, j),
        }
    }
}

/// Corruption applied to the ground truth before it is served.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    Clean,
    /// The listed columns are replaced by standard normal vectors drawn from `seed`.
    SparseColumns { columns: Vec<usize>, seed: u64 },
    /// Columns are normalised, then perturbed by at most `eps` in ℓ2.
    Bounded { eps: f64, seed: u64 },
}

impl NoiseModel {
    /// Sparse column noise on `count` uniformly chosen columns.
    pub fn random_sparse(n: usize, count: usize, seed: u64) -> Result<Self> {
        if count > n {
            return Err(AmcError::InvalidParameter(format!("cannot corrupt {count} of {n} columns")));
        }
        let mut rng = rng_from_seed(seed);
        let mut columns = sample(&mut rng, n, count).into_vec();
        columns.sort_unstable();
        Ok(NoiseModel::SparseColumns { columns, seed: seed.wrapping_add(1) })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleStats {
    pub count: usize,
    pub cost: f64,
    pub phase_counts: Vec<usize>,
    pub full_columns: usize,
    pub full_rows: usize,
}

/// Source of uniformly random row subsets.
pub trait RowSampler {
    /// `count` distinct elements of `pool`, uniformly at random.
    fn sample_rows(&mut self, pool: &[usize], count: usize) -> Vec<usize>;

    fn pick_one(&mut self, pool: &[usize]) -> usize {
        self.sample_rows(pool, 1)[0]
    }
}

pub struct UniformSampler {
    rng: ChaCha8Rng,
}

impl UniformSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }
}

impl RowSampler for UniformSampler {
    fn sample_rows(&mut self, pool: &[usize], count: usize) -> Vec<usize> {
        let count = count.min(pool.len());
        sample(&mut self.rng, pool.len(), count).into_iter().map(|k| pool[k]).collect()
    }
}

/// Replays fixed draws, one entry per call. Draws outside the pool are
/// dropped; when the script runs out, the lowest pool indices are used.
pub struct ScriptedSampler {
    script: VecDeque<Vec<usize>>,
}

impl ScriptedSampler {
    pub fn new(script: Vec<Vec<usize>>) -> Self {
        Self { script: script.into() }
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }
}

impl RowSampler for ScriptedSampler {
    fn sample_rows(&mut self, pool: &[usize], count: usize) -> Vec<usize> {
        let count = count.min(pool.len());
        let mut out: Vec<usize> = match self.script.pop_front() {
            Some(draw) => draw.into_iter().filter(|i| pool.contains(i)).take(count).collect(),
            None => Vec::new(),
        };
        for &p in pool {
            if out.len() >= count {
                break;
            }
            if !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}

pub struct ObservationOracle {
    truth: DenseMatrix,
    view: DenseMatrix,
    cost: CostModel,
    noise: NoiseModel,
    seen: PartialMatrix,
    total_cost: f64,
    phase_marks: Vec<usize>,
    log: Vec<(usize, usize)>,
}

impl ObservationOracle {
    pub fn new(truth: DenseMatrix, cost: CostModel, noise: NoiseModel) -> Result<Self> {
        let (m, n) = truth.shape();
        cost.validate(m, n)?;
        let (truth, view) = match &noise {
            NoiseModel::Clean => (truth.clone(), truth),
            NoiseModel::SparseColumns { columns, seed } => {
                let mut view = truth.clone();
                let mut rng = rng_from_seed(*seed);
                let mut seen = vec![false; n];
                for &j in columns {
                    if j >= n {
                        return Err(AmcError::OutOfBounds { index: j, bound: n });
                    }
                    if std::mem::replace(&mut seen[j], true) {
                        return Err(AmcError::DuplicateIndex(j));
                    }
                    let col: Vec<f64> =
                        (0..m).map(|_| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)).collect();
                    view.set_column(j, &col);
                }
                (truth, view)
            }
            NoiseModel::Bounded { eps, seed } => {
                let clean = normalize_columns(&truth)?;
                let view = inject_bounded_noise(&truth, *eps, *seed)?;
                (clean, view)
            }
        };
        Ok(Self {
            seen: PartialMatrix::new(m, n)?,
            truth,
            view,
            cost,
            noise,
            total_cost: 0.0,
            phase_marks: Vec::new(),
            log: Vec::new(),
        })
    }

    /// Uniform costs, no noise.
    pub fn clean(truth: DenseMatrix) -> Self {
        Self::new(truth, CostModel::Uniform, NoiseModel::Clean).expect("uniform clean oracle")
    }

    pub fn shape(&self) -> (usize, usize) {
        self.view.shape()
    }

    pub fn rows(&self) -> usize {
        self.view.rows()
    }

    pub fn cols(&self) -> usize {
        self.view.cols()
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn noise_model(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn observe(&mut self, i: usize, j: usize) -> Result<f64> {
        if let Some(v) = self.seen.try_get(i, j) {
            return Ok(v);
        }
        let (m, n) = self.shape();
        if i >= m {
            return Err(AmcError::OutOfBounds { index: i, bound: m });
        }
        if j >= n {
            return Err(AmcError::OutOfBounds { index: j, bound: n });
        }
        let v = self.view.get(i, j);
        self.seen.record(i, j, v)?;
        self.total_cost += self.cost.entry_cost(i, j);
        self.log.push((i, j));
        Ok(v)
    }

    pub fn observe_column(&mut self, j: usize) -> Result<Vec<f64>> {
        (0..self.rows()).map(|i| self.observe(i, j)).collect()
    }

    pub fn observe_row(&mut self, i: usize) -> Result<Vec<f64>> {
        (0..self.cols()).map(|j| self.observe(i, j)).collect()
    }

    /// Entries `rows` of column `j`, observing as needed.
    pub fn observe_entries(&mut self, rows: &[usize], j: usize) -> Result<Vec<f64>> {
        rows.iter().map(|&i| self.observe(i, j)).collect()
    }

    /// Value of an already observed entry; never charges.
    pub fn peek(&self, i: usize, j: usize) -> Option<f64> {
        self.seen.try_get(i, j)
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.seen.is_observed(i, j)
    }

    pub fn observed(&self) -> &PartialMatrix {
        &self.seen
    }

    pub fn unobserved_rows(&self, j: usize) -> Vec<usize> {
        self.seen.unobserved_rows(j)
    }

    /// A uniformly random unobserved row of column `j`, or `None` once the
    /// column is exhausted. Does not observe the entry.
    pub fn draw_unobserved_uniform(&self, j: usize, sampler: &mut dyn RowSampler) -> Option<usize> {
        let pool = self.seen.unobserved_rows(j);
        if pool.is_empty() {
            None
        } else {
            Some(sampler.pick_one(&pool))
        }
    }

    /// Marks the start of a new phase for per-phase accounting.
    pub fn begin_phase(&mut self) {
        self.phase_marks.push(self.seen.observed_count());
    }

    pub fn count(&self) -> usize {
        self.seen.observed_count()
    }

    pub fn stats(&self) -> OracleStats {
        let count = self.seen.observed_count();
        let mut phase_counts = Vec::with_capacity(self.phase_marks.len());
        for (k, &start) in self.phase_marks.iter().enumerate() {
            let end = self.phase_marks.get(k + 1).copied().unwrap_or(count);
            phase_counts.push(end - start);
        }
        OracleStats {
            count,
            cost: self.total_cost,
            phase_counts,
            full_columns: self.seen.fully_observed_columns(),
            full_rows: self.seen.fully_observed_rows(),
        }
    }

    /// Observed coordinates in request order.
    pub fn log(&self) -> &[(usize, usize)] {
        &self.log
    }

    /// Clean ground truth (normalised under bounded noise). For test
    /// harnesses and result scoring only; algorithms must not call this.
    pub fn harness_truth(&self) -> &DenseMatrix {
        &self.truth
    }

    /// The matrix actually served by `observe`. Harness use only.
    pub fn harness_view(&self) -> &DenseMatrix {
        &self.view
    }
}
