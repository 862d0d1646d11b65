use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use amc_core::combinatorics::{
    err_bound, erre_bound, expected_first_one_position, first_one_tail, lrebn_d, monte_carlo_detection, tau_pmf,
    tau_ratio, tau_ratio_closed_form, to_f64,
};
use amc_core::completion::Algorithm;
use amc_core::experiment::config::{env_seed, read_kv, DESK_MAX_M, DESK_MAX_N};
use amc_core::experiment::{
    run_sweep, run_trials, sweep_csv, verify, NoiseSpec, RunConfig, Summary, SweepAxis, SweepConfig, SUITES,
};
use amc_core::generators::{generate, CoherenceClass, FixtureSpec};
use amc_core::linalg::csv::write_csv;
use amc_core::oracle::{CostModel, NoiseModel, ObservationOracle};
use amc_core::AmcError;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "amc", version, about = "Adaptive low-rank matrix completion experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a fixture as CSV plus a profile sidecar.
    Gen(GenArgs),
    /// Run one algorithm over seeded trials; JSON lines, summary last.
    Run(RunArgs),
    /// Sweep n or r and print a CSV table.
    Sweep(SweepArgs),
    /// Evaluate the analytic formulas.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Run a named property suite (or `all`).
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    coherent_cols: usize,
    #[arg(long, default_value_t = 0)]
    coherent_rows: usize,
    /// none, sparse:A or bounded:EPS
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    paper_scale: bool,
}

/// Flags shared by `run` and `sweep`; each overrides the config file key of the same name.
#[derive(Args, Default)]
struct Overrides {
    /// Flat key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alg: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long, alias = "rank")]
    r: Option<String>,
    /// Coherence class of (column, row) space: ii, ic, ci or cc.
    #[arg(long)]
    class: Option<String>,
    /// Named worked-example matrix instead of a generated one.
    #[arg(long)]
    fixture: Option<String>,
    /// Ground truth read from CSV.
    #[arg(long)]
    matrix: Option<String>,
    /// uniform, random, or a CSV path.
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    xi: Option<String>,
    #[arg(long)]
    psibar: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    t: Option<String>,
    /// on or off
    #[arg(long)]
    adaptive: Option<String>,
    #[arg(long)]
    scale: Option<String>,
    /// on or off
    #[arg(long)]
    exact: Option<String>,
    #[arg(long)]
    rel_tol: Option<String>,
    #[arg(long)]
    success_tol: Option<String>,
    #[arg(long)]
    min_success: Option<String>,
    #[arg(long)]
    paper_scale: bool,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 24] = [
            ("alg", &self.alg),
            ("m", &self.m),
            ("n", &self.n),
            ("r", &self.r),
            ("class", &self.class),
            ("fixture", &self.fixture),
            ("matrix", &self.matrix),
            ("cost", &self.cost),
            ("noise", &self.noise),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("eps", &self.eps),
            ("delta", &self.delta),
            ("mu", &self.mu),
            ("xi", &self.xi),
            ("psibar", &self.psibar),
            ("d", &self.d),
            ("t", &self.t),
            ("adaptive", &self.adaptive),
            ("scale", &self.scale),
            ("exact", &self.exact),
            ("rel-tol", &self.rel_tol),
            ("success-tol", &self.success_tol),
            ("min-success", &self.min_success),
        ];
        fields.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }

    /// Defaults, then the seed variable, then the config file, then flags.
    fn build(&self, extra: &mut dyn FnMut(&str, &str) -> Option<amc_core::Result<()>>) -> amc_core::Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(s) = env_seed()? {
            cfg.seed = s;
        }
        if let Some(path) = &self.config {
            for (k, v) in read_kv(path)? {
                match extra(&k, &v) {
                    Some(r) => r?,
                    None => cfg.set(&k, &v)?,
                }
            }
        }
        for (k, v) in self.pairs() {
            cfg.set(k, v)?;
        }
        if self.paper_scale {
            cfg.paper_scale = true;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    o: Overrides,
    /// Omit wall-clock timing so output replays byte for byte.
    #[arg(long)]
    no_timing: bool,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    o: Overrides,
    /// n or r
    #[arg(long)]
    axis: Option<String>,
    /// Comma list or inclusive range `a..b` (may be empty).
    #[arg(long)]
    values: Option<String>,
    /// Comma list of algorithms.
    #[arg(long)]
    algs: Option<String>,
    /// Comma list of coherence classes.
    #[arg(long)]
    classes: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Mean first-one position, analytic and simulated.
    FirstOne {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// P(first one beyond position a).
    Tail {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        a: u64,
    },
    /// τ(N) and the successive ratio.
    Tau {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        r: u64,
        #[arg(long = "big-n")]
        big_n: u64,
    },
    /// Observation-count bounds and the LREBN sample size.
    Bounds {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        psi_u: usize,
        #[arg(long)]
        psi_v: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name, or `all`.
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(AmcError),
    Run(AmcError),
    Assertion,
}

impl From<AmcError> for Failure {
    fn from(e: AmcError) -> Self {
        Failure::Run(e)
    }
}

fn config<T>(r: amc_core::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Config)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| Failure::Config(e.into()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit(w: &mut dyn Write, line: &str) -> Result<(), Failure> {
    writeln!(w, "{line}").map_err(|e| Failure::Run(e.into()))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn default_seed(flag: Option<u64>) -> Result<u64, Failure> {
    Ok(match flag {
        Some(s) => s,
        None => config(env_seed())?.unwrap_or(0),
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("profile.json")
}

fn cmd_gen(a: GenArgs) -> Result<(), Failure> {
    if !a.paper_scale && (a.m > DESK_MAX_M || a.n > DESK_MAX_N) {
        return Err(Failure::Config(AmcError::InvalidParameter(format!(
            "desk-scale limits are m <= {DESK_MAX_M}, n <= {DESK_MAX_N}; pass --paper-scale to lift them"
        ))));
    }
    let seed = default_seed(a.seed)?;
    let noise = config(NoiseSpec::parse(&a.noise))?;
    let spec = FixtureSpec { m: a.m, n: a.n, r: a.r, coherent_cols: a.coherent_cols, coherent_rows: a.coherent_rows, seed };
    let fx = config(generate(&spec))?;
    let model = match noise {
        NoiseSpec::None => NoiseModel::Clean,
        NoiseSpec::Sparse(k) => config(NoiseModel::random_sparse(a.n, k, seed ^ 0x5eed))?,
        NoiseSpec::Bounded(eps) => NoiseModel::Bounded { eps, seed: seed ^ 0x5eed },
    };
    let oracle = ObservationOracle::new(fx.matrix.clone(), CostModel::Uniform, model.clone())?;
    write_csv(oracle.harness_view(), &a.out)?;
    let injected = match &model {
        NoiseModel::SparseColumns { columns, .. } => {
            let mut c = columns.clone();
            c.sort_unstable();
            Some(c)
        }
        _ => None,
    };
    let side = json!({
        "spec": spec,
        "rank": fx.rank,
        "column_profile": fx.column_profile,
        "row_profile": fx.row_profile,
        "noise": noise,
        "noisy_columns": injected,
    });
    let path = sidecar_path(&a.out);
    std::fs::write(&path, serde_json::to_string_pretty(&side).expect("serializable") + "\n")
        .map_err(|e| Failure::Run(e.into()))?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let cfg = config(a.o.build(&mut |_, _| None))?;
    config(cfg.validate())?;
    let mut records = run_trials(&cfg)?;
    let summary = Summary::of(&cfg, &records);
    let mut w = sink(&a.out)?;
    for rec in &mut records {
        if a.no_timing {
            rec.timing = None;
        }
        emit(&mut w, &to_json(rec))?;
    }
    emit(&mut w, &to_json(&summary))?;
    w.flush().map_err(|e| Failure::Run(e.into()))?;
    if summary.pass {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn parse_values(s: &str) -> amc_core::Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let bad = |_| AmcError::Parse(format!("bad value list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        return Ok((a..=b).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(bad)).collect()
}

fn parse_list<T>(s: &str, f: fn(&str) -> amc_core::Result<T>) -> amc_core::Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(f).collect()
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let mut axis = a.axis.clone();
    let mut values = a.values.clone();
    let mut algs = a.algs.clone();
    let mut classes = a.classes.clone();
    let base = {
        let mut extra = |k: &str, v: &str| -> Option<amc_core::Result<()>> {
            let slot = match k {
                "axis" => &mut axis,
                "values" => &mut values,
                "algs" => &mut algs,
                "classes" => &mut classes,
                _ => return None,
            };
            if slot.is_none() {
                *slot = Some(v.to_string());
            }
            Some(Ok(()))
        };
        config(a.o.build(&mut extra))?
    };
    let cfg = SweepConfig {
        axis: config(SweepAxis::parse(axis.as_deref().unwrap_or("r")))?,
        values: config(parse_values(values.as_deref().unwrap_or("1..8")))?,
        algs: match algs {
            Some(s) => config(parse_list(&s, Algorithm::parse))?,
            None => SweepConfig::DEFAULT_ALGS.to_vec(),
        },
        classes: config(parse_list(classes.as_deref().unwrap_or("ii"), CoherenceClass::parse))?,
        base,
    };
    config(cfg.validate())?;
    let rows = run_sweep(&cfg)?;
    let mut w = sink(&a.out)?;
    write!(w, "{}", sweep_csv(&rows)).map_err(|e| Failure::Run(e.into()))?;
    w.flush().map_err(|e| Failure::Run(e.into()))?;
    Ok(())
}

fn cmd_oracle(c: OracleCmd) -> Result<(), Failure> {
    let out = match c {
        OracleCmd::FirstOne { m, k, trials, seed } => {
            let exact = config(expected_first_one_position(m, k))?;
            let st = config(monte_carlo_detection(m, k, trials, default_seed(seed)?))?;
            json!({"m": m, "k": k, "expected": exact.to_string(), "expected_f64": to_f64(&exact), "empirical_mean": st.mean, "trials": trials})
        }
        OracleCmd::Tail { m, k, a } => {
            let p = config(first_one_tail(m, k, a))?;
            json!({"m": m, "k": k, "a": a, "tail": p.to_string(), "tail_f64": to_f64(&p)})
        }
        OracleCmd::Tau { k, m, r, big_n } => {
            let pmf = config(tau_pmf(k, m, r, big_n))?;
            let ratio = config(tau_ratio(k, m, r, big_n))?;
            let closed = tau_ratio_closed_form(k, m, r, big_n);
            json!({"k": k, "m": m, "r": r, "N": big_n, "pmf": pmf, "ratio": ratio.to_string(), "closed_form": closed.to_string(), "identity": ratio == closed})
        }
        OracleCmd::Bounds { m, n, r, psi_u, psi_v, eps, t, mu, delta, theta } => {
            let b = config(err_bound(m, n, r, psi_u, psi_v, eps))?;
            let t = t.unwrap_or((1.0 / eps).ln().ceil().max(1.0) as usize);
            let (erre_total, erre_fail) = config(erre_bound(m, n, r, psi_u, psi_v, eps, t))?;
            json!({
                "err": b,
                "erre": {"t": t, "total": erre_total, "failure": erre_fail},
                "lrebn_d": lrebn_d(mu, r, delta, theta, m),
            })
        }
    };
    println!("{out}");
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    let seed = default_seed(a.seed)?;
    let suites: Vec<&str> = if a.suite == "all" { SUITES.to_vec() } else { vec![a.suite.as_str()] };
    let mut pass = true;
    for s in suites {
        let rep = verify(s, seed).map_err(|e| match e {
            AmcError::UnknownName(_) => Failure::Config(e),
            other => Failure::Run(other),
        })?;
        pass &= rep.pass;
        println!("{}", to_json(&rep));
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Assertion)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(c) => cmd_oracle(c),
        Command::Verify(a) => cmd_verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion) => ExitCode::from(EXIT_FAIL),
        Err(Failure::Run(e)) => {
            eprintln!("amc: {e}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(Failure::Config(e)) => {
            eprintln!("amc: configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
