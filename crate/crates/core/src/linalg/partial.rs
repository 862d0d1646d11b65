use super::DenseMatrix;
use crate::error::{AmcError, Result};

/// Value store plus observation mask. Unobserved slots hold NaN and reading
/// one is an error.
#[derive(Clone, Debug)]
pub struct PartialMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    observed: usize,
}

impl PartialMatrix {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(AmcError::Dimension(format!("{rows}x{cols} matrix is empty")));
        }
        Ok(Self {
            rows,
            cols,
            values: vec![f64::NAN; rows * cols],
            mask: vec![false; rows * cols],
            observed: 0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn slot(&self, i: usize, j: usize) -> Result<usize> {
        if i >= self.rows {
            return Err(AmcError::OutOfBounds { index: i, bound: self.rows });
        }
        if j >= self.cols {
            return Err(AmcError::OutOfBounds { index: j, bound: self.cols });
        }
        Ok(i * self.cols + j)
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        let s = self.slot(i, j)?;
        if !self.mask[s] {
            return Err(AmcError::Unobserved(i, j));
        }
        Ok(self.values[s])
    }

    pub fn try_get(&self, i: usize, j: usize) -> Option<f64> {
        let s = self.slot(i, j).ok()?;
        self.mask[s].then(|| self.values[s])
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.slot(i, j).map(|s| self.mask[s]).unwrap_or(false)
    }

    /// Records a value. Returns true when the entry was new. A second write
    /// to the same slot keeps the first value.
    pub fn record(&mut self, i: usize, j: usize, v: f64) -> Result<bool> {
        let s = self.slot(i, j)?;
        if !v.is_finite() {
            return Err(AmcError::InvalidParameter(format!("non-finite value at ({i}, {j})")));
        }
        if self.mask[s] {
            return Ok(false);
        }
        self.mask[s] = true;
        self.values[s] = v;
        self.observed += 1;
        Ok(true)
    }

    pub fn observed_count(&self) -> usize {
        self.observed
    }

    pub fn column_fully_observed(&self, j: usize) -> bool {
        (0..self.rows).all(|i| self.mask[i * self.cols + j])
    }

    pub fn row_fully_observed(&self, i: usize) -> bool {
        self.mask[i * self.cols..(i + 1) * self.cols].iter().all(|&b| b)
    }

    pub fn unobserved_rows(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| !self.mask[i * self.cols + j]).collect()
    }

    pub fn fully_observed_columns(&self) -> usize {
        (0..self.cols).filter(|&j| self.column_fully_observed(j)).count()
    }

    pub fn fully_observed_rows(&self) -> usize {
        (0..self.rows).filter(|&i| self.row_fully_observed(i)).count()
    }

    /// 0/1 mask as a dense matrix.
    pub fn mask_matrix(&self) -> DenseMatrix {
        DenseMatrix::new(
            self.rows,
            self.cols,
            self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
        .expect("mask shape is valid")
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if let Some(s) = self.mask.iter().position(|&b| !b) {
            return Err(AmcError::Unobserved(s / self.cols, s % self.cols));
        }
        DenseMatrix::new(self.rows, self.cols, self.values.clone())
    }
}
