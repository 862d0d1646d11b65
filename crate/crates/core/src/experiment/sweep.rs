//! Parameter sweeps over n or r, aggregated into a CSV table.

use serde::Serialize;

use super::config::RunConfig;
use super::run::{mean_std, run_trials, TrialRecord};
use crate::completion::Algorithm;
use crate::error::{AmcError, Result};
use crate::generators::CoherenceClass;

pub const SWEEP_HEADER: &str = "axis,alg,class,mean_obs,std_obs,success_rate,mean_cost,bound,bound_ok";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    N,
    R,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Self::N),
            "r" => Ok(Self::R),
            _ => Err(AmcError::UnknownName(format!("sweep axis {s:?}; expected n or r"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub algs: Vec<Algorithm>,
    pub classes: Vec<CoherenceClass>,
    pub base: RunConfig,
}

impl SweepConfig {
    pub const DEFAULT_ALGS: [Algorithm; 5] =
        [Algorithm::Ks2013, Algorithm::Ercs, Algorithm::Err, Algorithm::Erre, Algorithm::Erei];

    fn config_for(&self, value: usize, alg: Algorithm, class: CoherenceClass) -> RunConfig {
        let mut c = self.base.clone();
        match self.axis {
            SweepAxis::N => c.n = value,
            SweepAxis::R => c.r = value,
        }
        c.alg = alg;
        c.class = class;
        c
    }

    /// Validates every cell before any trial runs.
    pub fn validate(&self) -> Result<()> {
        for &v in &self.values {
            for &a in &self.algs {
                for &cl in &self.classes {
                    let c = self.config_for(v, a, cl);
                    c.validate()?;
                    let (cc, cr) = cl.injections();
                    if cc + cr > c.r {
                        return Err(AmcError::InvalidParameter(format!(
                            "class {} needs rank at least {}, got {}",
                            cl.as_str(),
                            cc + cr,
                            c.r
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: usize,
    pub alg: String,
    pub class: String,
    pub mean_obs: f64,
    pub std_obs: f64,
    pub success_rate: f64,
    pub mean_cost: f64,
    pub bound: Option<f64>,
    /// Every successful trial stayed within its bound.
    pub bound_ok: Option<bool>,
}

fn aggregate(value: usize, alg: Algorithm, class: CoherenceClass, recs: &[TrialRecord]) -> SweepRow {
    let obs: Vec<f64> = recs.iter().map(|r| r.observations as f64).collect();
    let (mean_obs, std_obs) = mean_std(&obs);
    let bounds: Vec<f64> = recs.iter().filter_map(|r| r.bound).collect();
    let judged: Vec<bool> = recs.iter().filter(|r| r.success).filter_map(|r| r.bound_ok).collect();
    SweepRow {
        axis: value,
        alg: alg.as_str().to_string(),
        class: class.as_str().to_string(),
        mean_obs,
        std_obs,
        success_rate: recs.iter().filter(|r| r.success).count() as f64 / recs.len().max(1) as f64,
        mean_cost: mean_std(&recs.iter().map(|r| r.cost).collect::<Vec<_>>()).0,
        bound: (!bounds.is_empty()).then(|| mean_std(&bounds).0),
        bound_ok: (!judged.is_empty()).then(|| judged.iter().all(|&b| b)),
    }
}

/// One row per (axis value, algorithm, class), in that nesting order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &v in &cfg.values {
        for &a in &cfg.algs {
            for &cl in &cfg.classes {
                let recs = run_trials(&cfg.config_for(v, a, cl))?;
                rows.push(aggregate(v, a, cl, &recs));
            }
        }
    }
    Ok(rows)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.axis,
            r.alg,
            r.class,
            r.mean_obs,
            r.std_obs,
            r.success_rate,
            r.mean_cost,
            opt(&r.bound),
            opt(&r.bound_ok)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_axis_gives_header_only() {
        let cfg = SweepConfig {
            axis: SweepAxis::R,
            values: vec![],
            algs: vec![Algorithm::Err],
            classes: vec![CoherenceClass::II],
            base: RunConfig::default(),
        };
        assert_eq!(sweep_csv(&run_sweep(&cfg).unwrap()), format!("{SWEEP_HEADER}\n"));
    }

    #[test]
    fn small_r_sweep_is_monotone_for_err() {
        let base = RunConfig { m: 20, n: 30, trials: 4, ..Default::default() };
        let cfg = SweepConfig {
            axis: SweepAxis::R,
            values: vec![1, 2, 3, 4],
            algs: vec![Algorithm::Err],
            classes: vec![CoherenceClass::II],
            base,
        };
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows.windows(2).all(|w| w[0].mean_obs <= w[1].mean_obs));
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn invalid_class_rank_rejected() {
        let cfg = SweepConfig {
            axis: SweepAxis::R,
            values: vec![1],
            algs: vec![Algorithm::Erei],
            classes: vec![CoherenceClass::CC],
            base: RunConfig::default(),
        };
        assert!(run_sweep(&cfg).is_err());
    }
}
