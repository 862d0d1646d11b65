use super::{exact, DenseMatrix, Tolerance};
use crate::error::{AmcError, Result};

pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.to_nalgebra().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol.rank_threshold`, or the exact rank
/// over the rationals in exact mode.
pub fn numeric_rank(m: &DenseMatrix, tol: Tolerance) -> usize {
    if tol.is_exact() {
        return exact::rank_of(m);
    }
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let thr = tol.rank_threshold(smax, m.rows(), m.cols());
    s.iter().filter(|&&v| v > thr).count()
}

pub fn is_nonsingular(square: &DenseMatrix, tol: Tolerance) -> Result<bool> {
    if square.rows() != square.cols() {
        return Err(AmcError::Dimension(format!("{}x{} is not square", square.rows(), square.cols())));
    }
    Ok(numeric_rank(square, tol) == square.rows())
}

/// Rank of the matrix whose columns are `cols` (each of length `m`).
pub fn rank_of_columns(cols: &[Vec<f64>], tol: Tolerance) -> usize {
    if cols.is_empty() || cols[0].is_empty() {
        return 0;
    }
    numeric_rank(&DenseMatrix::from_columns(cols).expect("equal-length columns"), tol)
}

/// Minimum-norm least-squares solution of `A x = b` via the SVD.
pub fn lstsq_min_norm(a: &DenseMatrix, b: &[f64], tol: Tolerance) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(AmcError::Dimension("right-hand side length".into()));
    }
    let svd = a.to_nalgebra().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = tol.rank_threshold(smax, a.rows(), a.cols());
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = svd
        .solve(&rhs, eps.max(f64::MIN_POSITIVE))
        .map_err(|e| AmcError::InvalidParameter(e.to_string()))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let tol = Tolerance::default();
        assert!(is_nonsingular(&DenseMatrix::from_rows(&[vec![1.0]]).unwrap(), tol).unwrap());
        let p = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(!is_nonsingular(&p, tol).unwrap());
        assert!(!is_nonsingular(&p, Tolerance::exact()).unwrap());
        assert_eq!(numeric_rank(&DenseMatrix::zeros(3, 4).unwrap(), tol), 0);
        assert_eq!(numeric_rank(&DenseMatrix::zeros(3, 4).unwrap(), Tolerance::exact()), 0);
        assert!(is_nonsingular(&DenseMatrix::zeros(2, 3).unwrap(), tol).is_err());
    }

    #[test]
    fn min_norm_solution() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let x = lstsq_min_norm(&a, &[2.0], Tolerance::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
