//! Run configuration: defaults, a flat `key = value` file, then overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::completion::Algorithm;
use crate::error::{AmcError, Result};
use crate::generators::{CoherenceClass, PAPER_FIXTURE_NAMES};
use crate::linalg::Tolerance;

pub const DESK_MAX_M: usize = 200;
pub const DESK_MAX_N: usize = 500;
pub const DESK_MAX_TRIALS: usize = 500;

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "AMC_SEED";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    None,
    Sparse(usize),
    Bounded(f64),
}

impl NoiseSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || AmcError::Parse(format!("noise spec {s:?}; expected none, sparse:A or bounded:EPS"));
        if s == "none" {
            return Ok(Self::None);
        }
        let (kind, val) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "sparse" => Ok(Self::Sparse(val.parse().map_err(|_| bad())?)),
            "bounded" => {
                let e: f64 = val.parse().map_err(|_| bad())?;
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(bad());
                }
                Ok(Self::Bounded(e))
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSpec {
    Uniform,
    /// Integer costs 1..=9 drawn from the trial seed.
    Random,
    File(PathBuf),
}

impl CostSpec {
    pub fn parse(s: &str) -> Self {
        match s {
            "uniform" => Self::Uniform,
            "random" => Self::Random,
            path => Self::File(PathBuf::from(path)),
        }
    }
}

/// Where the ground truth comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Generated,
    Named(String),
    Csv(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub alg: Algorithm,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub class: CoherenceClass,
    pub source: Source,
    pub cost: Option<CostSpec>,
    pub noise: NoiseSpec,
    pub trials: usize,
    pub seed: u64,
    /// Failure budget ε of the probabilistic algorithms.
    pub eps: f64,
    pub delta: f64,
    pub mu: Option<f64>,
    pub xi: Option<usize>,
    pub psibar: Option<usize>,
    pub d: Option<usize>,
    pub t: Option<usize>,
    pub adaptive: bool,
    pub scale: f64,
    pub exact: bool,
    pub rel_tol: f64,
    pub success_tol: f64,
    pub min_success: Option<f64>,
    pub paper_scale: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alg: Algorithm::Err,
            m: 50,
            n: 100,
            r: 5,
            class: CoherenceClass::II,
            source: Source::Generated,
            cost: None,
            noise: NoiseSpec::None,
            trials: 1,
            seed: 0,
            eps: 0.1,
            delta: 0.05,
            mu: None,
            xi: None,
            psibar: None,
            d: None,
            t: None,
            adaptive: true,
            scale: 1.0,
            exact: false,
            rel_tol: 1e-9,
            success_tol: 1e-6,
            min_success: None,
            paper_scale: false,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| AmcError::Parse(format!("bad value {v:?} for {key}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(AmcError::Parse(format!("bad value {v:?} for {key}; expected on/off"))),
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| AmcError::Parse(format!("line {}: expected key = value", no + 1)))?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_kv(&std::fs::read_to_string(path)?)
}

/// Seed from the environment, when set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => Ok(Some(num(SEED_ENV, v.trim())?)),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "alg" => self.alg = Algorithm::parse(v)?,
            "m" => self.m = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "r" | "rank" => self.r = num(key, v)?,
            "class" => self.class = CoherenceClass::parse(v)?,
            "fixture" => {
                if !PAPER_FIXTURE_NAMES.contains(&v) {
                    return Err(AmcError::UnknownName(format!("fixture {v:?}")));
                }
                self.source = Source::Named(v.to_string());
            }
            "matrix" => self.source = Source::Csv(PathBuf::from(v)),
            "cost" => self.cost = Some(CostSpec::parse(v)),
            "noise" => self.noise = NoiseSpec::parse(v)?,
            "trials" => self.trials = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "eps" => self.eps = num(key, v)?,
            "delta" => self.delta = num(key, v)?,
            "mu" => self.mu = Some(num(key, v)?),
            "xi" => self.xi = Some(num(key, v)?),
            "psibar" => self.psibar = Some(num(key, v)?),
            "d" => self.d = Some(num(key, v)?),
            "t" => self.t = Some(num(key, v)?),
            "adaptive" => self.adaptive = flag(key, v)?,
            "scale" => self.scale = num(key, v)?,
            "exact" => self.exact = flag(key, v)?,
            "rel-tol" => self.rel_tol = num(key, v)?,
            "success-tol" => self.success_tol = num(key, v)?,
            "min-success" => self.min_success = Some(num(key, v)?),
            "paper-scale" => self.paper_scale = flag(key, v)?,
            other => return Err(AmcError::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        kv.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn tolerance(&self) -> Result<Tolerance> {
        if self.exact {
            Ok(Tolerance::exact())
        } else {
            Tolerance::new(self.rel_tol)
        }
    }

    /// Checks that can be made before any sampling.
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(AmcError::InvalidParameter(s));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !self.paper_scale
            && (self.m > DESK_MAX_M || self.n > DESK_MAX_N || self.trials > DESK_MAX_TRIALS)
        {
            return bad(format!(
                "desk-scale limits are m <= {DESK_MAX_M}, n <= {DESK_MAX_N}, trials <= {DESK_MAX_TRIALS}; pass --paper-scale to lift them"
            ));
        }
        if self.source == Source::Generated && (self.r == 0 || self.r > self.m.min(self.n)) {
            return bad(format!("rank {} must lie in 1..={}", self.r, self.m.min(self.n)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if let Some(d) = self.d {
            if d == 0 || (self.source == Source::Generated && d > self.m) {
                return bad(format!("d = {d} must lie in 1..={}", self.m));
            }
        }
        if self.t == Some(0) {
            return bad("delay T must be at least 1".into());
        }
        if !(self.success_tol >= 0.0) {
            return bad("success tolerance must be nonnegative".into());
        }
        match (self.alg, &self.noise) {
            (Algorithm::Eerei, NoiseSpec::Bounded(_)) => return bad("eerei expects sparse or no noise".into()),
            (Algorithm::Lrebn, NoiseSpec::Sparse(_)) => return bad("lrebn expects bounded or no noise".into()),
            (Algorithm::Eerei | Algorithm::Lrebn, _) => {}
            (_, NoiseSpec::None) => {}
            (a, _) => return bad(format!("{a} runs on clean data only")),
        }
        if let NoiseSpec::Sparse(a) = self.noise {
            if self.source == Source::Generated && a > self.n {
                return bad(format!("{a} noisy columns exceed n = {}", self.n));
            }
        }
        if matches!(self.alg, Algorithm::Erhc | Algorithm::ErhcColumns) && self.cost == Some(CostSpec::Uniform) {
            return bad(format!("{} needs random or file costs", self.alg));
        }
        self.tolerance()?;
        Ok(())
    }

    /// Success rate the run must reach for exit code 0.
    pub fn required_success(&self) -> f64 {
        if let Some(s) = self.min_success {
            return s;
        }
        match self.alg {
            Algorithm::Ercs | Algorithm::Erhc | Algorithm::ErhcColumns | Algorithm::Lrebn => 1.0,
            Algorithm::Err | Algorithm::Erei | Algorithm::Eerei => 1.0 - self.eps,
            Algorithm::Erre => 1.0 - 2.0 * self.eps,
            Algorithm::Ks2013 => 0.0,
        }
    }
}
