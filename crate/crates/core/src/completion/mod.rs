//! Exact-recovery algorithms: the KS2013 baseline, ERCS, ERR, ERRE and EREI.
//!
//! Every algorithm reads the hidden matrix through an
//! [`ObservationOracle`](crate::oracle::ObservationOracle) and returns a
//! [`CompletionResult`]. Success flags are filled in later by a harness that
//! can see the ground truth.

mod erei;
mod err;
mod ks2013;
mod span;

pub use erei::{clamp_sample_size, run_erei, run_erei_engine, EreiParams};
pub use err::{run_err, run_err_observed, run_erre, run_erre_observed, ErrEvent, ErrParams, ErreParams};
pub use ks2013::{run_ercs, run_ks2013, run_two_stage, ErcsParams, Ks2013Params};
pub(crate) use span::SpanTracker;

use std::fmt;

use serde::Serialize;

use crate::error::{AmcError, Result};
use crate::linalg::DenseMatrix;
use crate::oracle::OracleStats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ks2013,
    Ercs,
    Err,
    Erre,
    Erei,
    Erhc,
    ErhcColumns,
    Eerei,
    Lrebn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Ks2013,
        Algorithm::Ercs,
        Algorithm::Err,
        Algorithm::Erre,
        Algorithm::Erei,
        Algorithm::Erhc,
        Algorithm::ErhcColumns,
        Algorithm::Eerei,
        Algorithm::Lrebn,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Ks2013 => "ks2013",
            Algorithm::Ercs => "ercs",
            Algorithm::Err => "err",
            Algorithm::Erre => "erre",
            Algorithm::Erei => "erei",
            Algorithm::Erhc => "erhc",
            Algorithm::ErhcColumns => "erhc-columns",
            Algorithm::Eerei => "eerei",
            Algorithm::Lrebn => "lrebn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| AmcError::UnknownName(format!("algorithm {s:?}")))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of one algorithm run.
#[derive(Clone, Debug)]
pub struct CompletionResult {
    pub algorithm: Algorithm,
    pub recovered: DenseMatrix,
    pub rank_estimate: usize,
    pub stats: OracleStats,
    pub phases: usize,
    /// Set when ERR ran out of entries before reaching the requested rank.
    pub exhausted: bool,
    /// Fully observed rows used for back-projection.
    pub rows: Vec<usize>,
    /// Columns accepted as independent, in discovery order.
    pub columns: Vec<usize>,
    pub bound: Option<f64>,
    pub bound_ok: Option<bool>,
    pub max_abs_error: Option<f64>,
    pub success: Option<bool>,
}

impl CompletionResult {
    pub(crate) fn new(algorithm: Algorithm, recovered: DenseMatrix, stats: OracleStats) -> Self {
        Self {
            algorithm,
            recovered,
            rank_estimate: 0,
            stats,
            phases: 0,
            exhausted: false,
            rows: Vec::new(),
            columns: Vec::new(),
            bound: None,
            bound_ok: None,
            max_abs_error: None,
            success: None,
        }
    }

    /// Records a theory bound on the observation count.
    pub fn attach_bound(&mut self, bound: f64) {
        self.bound = Some(bound);
        self.bound_ok = Some(self.stats.count as f64 <= bound);
    }

    /// Harness scoring against the ground truth: success iff the largest
    /// absolute error is at most `tol` and no exhaustion flag is set.
    pub fn score(&mut self, truth: &DenseMatrix, tol: f64) -> Result<bool> {
        let err = self.recovered.max_abs_diff(truth)?;
        let ok = err <= tol && !self.exhausted;
        self.max_abs_error = Some(err);
        self.success = Some(ok);
        Ok(ok)
    }
}
