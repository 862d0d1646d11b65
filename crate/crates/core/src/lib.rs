//! Adaptive low-rank matrix completion.

pub mod combinatorics;
pub mod completion;
pub mod cost;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod linalg;
pub mod noise;
pub mod oracle;
pub mod sparsity;

pub use error::{AmcError, Result};
