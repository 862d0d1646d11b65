//! Partial matrices and the small set of linear-algebra kernels the
//! algorithms share: orthonormal bases, restricted residuals,
//! back-projection and rank tests in float or exact rational mode.

mod basis;
pub mod csv;
mod dense;
pub mod exact;
mod index;
mod partial;
mod rank;

pub use basis::{
    orthonormalize, reconstruct_column, restricted_coefficients, restricted_residual, OrthonormalBasis,
};
pub use dense::DenseMatrix;
pub use index::IndexSet;
pub use partial::PartialMatrix;
pub use rank::{is_nonsingular, lstsq_min_norm, numeric_rank, rank_of_columns, singular_values};

pub(crate) use dense::norm;

use crate::error::{AmcError, Result};

/// Rank and residual tolerance policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    rel: f64,
    exact: bool,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: Self::DEFAULT_REL, exact: false }
    }
}

impl Tolerance {
    pub const DEFAULT_REL: f64 = 1e-9;

    pub fn new(rel: f64) -> Result<Self> {
        if !(rel > 0.0 && rel.is_finite()) {
            return Err(AmcError::InvalidParameter(format!("tolerance must be positive, got {rel}")));
        }
        Ok(Self { rel, exact: false })
    }

    /// Rational arithmetic for rank decisions.
    pub fn exact() -> Self {
        Self { rel: Self::DEFAULT_REL, exact: true }
    }

    /// Exact mode for integer-valued matrices, the default float policy otherwise.
    pub fn for_matrix(m: &DenseMatrix) -> Self {
        if m.is_integer_valued() {
            Self::exact()
        } else {
            Self::default()
        }
    }

    pub fn relative(&self) -> f64 {
        self.rel
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn as_float(&self) -> Self {
        Self { rel: self.rel, exact: false }
    }

    /// Singular values at or below this are treated as zero.
    pub fn rank_threshold(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        self.rel * rows.max(cols) as f64 * sigma_max
    }

    /// A residual counts as nonzero when it exceeds this.
    pub fn residual_threshold(&self, norm: f64, dim: usize) -> f64 {
        self.rel * dim.max(1) as f64 * norm
    }
}
