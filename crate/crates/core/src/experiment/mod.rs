//! Experiment harness behind the `amc` binary: configuration, seeded trials,
//! sweeps and named verification suites.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{CostSpec, NoiseSpec, RunConfig, Source};
pub use run::{complete_matrix, derive_seed, Instance, run_trial, run_trials, Summary, TrialRecord};
pub use sweep::{run_sweep, sweep_csv, SweepAxis, SweepConfig, SweepRow};
pub use verify::{verify, VerifyReport, SUITES};
