//! Orthonormal bases, restricted projections and back-projection.

use super::dense::{dot, norm};
use super::{DenseMatrix, IndexSet, Tolerance};
use crate::error::{AmcError, Result};

/// Column-orthonormal spanning set of a subspace of R^m.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    tol: Tolerance,
}

/// Subtracts the projection of `v` on the orthonormal `qs` twice (classical
/// Gram-Schmidt with one reorthogonalisation pass) and returns the
/// coefficients.
fn deflate(qs: &[Vec<f64>], v: &mut [f64]) -> Vec<f64> {
    let mut coef = vec![0.0; qs.len()];
    for _ in 0..2 {
        for (c, q) in coef.iter_mut().zip(qs) {
            let h = dot(q, v);
            *c += h;
            for (x, y) in v.iter_mut().zip(q) {
                *x -= h * y;
            }
        }
    }
    coef
}

impl OrthonormalBasis {
    pub fn empty(dim: usize, tol: Tolerance) -> Self {
        Self { dim, vectors: Vec::new(), tol }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    /// Adds `v` if it is not numerically inside the current span.
    /// Returns whether the basis grew.
    pub fn try_push(&mut self, v: &[f64]) -> Result<bool> {
        if v.len() != self.dim {
            return Err(AmcError::Dimension(format!("vector length {} != {}", v.len(), self.dim)));
        }
        let n0 = norm(v);
        if n0 == 0.0 || self.vectors.len() == self.dim {
            return Ok(false);
        }
        let mut r = v.to_vec();
        deflate(&self.vectors, &mut r);
        let nr = norm(&r);
        let k = self.vectors.len() + 1;
        if nr <= self.tol.relative() * self.dim.max(k) as f64 * n0 {
            return Ok(false);
        }
        r.iter_mut().for_each(|x| *x /= nr);
        self.vectors.push(r);
        Ok(true)
    }

    /// Rows `rows` of the basis, one vector per basis column.
    pub fn restricted_columns(&self, rows: &[usize]) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|q| rows.iter().map(|&i| q[i]).collect())
            .collect()
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for q in &self.vectors {
            let h = dot(q, x);
            for (o, y) in out.iter_mut().zip(q) {
                *o += h * y;
            }
        }
        out
    }

    /// Basis as an `m x k` matrix; `None` for the zero subspace.
    pub fn to_matrix(&self) -> Option<DenseMatrix> {
        if self.vectors.is_empty() || self.dim == 0 {
            return None;
        }
        DenseMatrix::from_columns(&self.vectors).ok()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, u) in self.vectors.iter().enumerate() {
            for (b, v) in self.vectors.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot(u, v) - target).abs());
            }
        }
        worst
    }

    /// Combination `sum_j c_j q_j`.
    pub fn combine(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (c, q) in coef.iter().zip(&self.vectors) {
            for (o, y) in out.iter_mut().zip(q) {
                *o += c * y;
            }
        }
        out
    }
}

/// Orthonormal basis spanning `vectors`; numerically dependent vectors are dropped.
pub fn orthonormalize(dim: usize, vectors: &[Vec<f64>], tol: Tolerance) -> Result<OrthonormalBasis> {
    let mut b = OrthonormalBasis::empty(dim, tol);
    for v in vectors {
        b.try_push(v)?;
    }
    Ok(b)
}

/// Orthonormal basis of the span of `cols`, dropping directions whose
/// residual is at most `abs_thr`.
fn span_basis(cols: &[Vec<f64>], abs_thr: f64) -> Vec<Vec<f64>> {
    let mut qs: Vec<Vec<f64>> = Vec::new();
    for c in cols {
        let mut r = c.clone();
        deflate(&qs, &mut r);
        let nr = norm(&r);
        if nr > abs_thr {
            r.iter_mut().for_each(|x| *x /= nr);
            qs.push(r);
        }
    }
    qs
}

fn restriction_threshold(basis: &OrthonormalBasis, p: usize) -> f64 {
    // basis columns have unit norm in R^m, so the threshold is absolute
    basis.tol.relative() * p.max(basis.rank()).max(1) as f64
}

/// `||x_omega - P x_omega||` where `P` projects onto the span of the basis
/// restricted to the rows in `omega`.
pub fn restricted_residual(basis: &OrthonormalBasis, omega: &IndexSet, x_omega: &[f64]) -> Result<f64> {
    if omega.len() != x_omega.len() {
        return Err(AmcError::Dimension(format!(
            "|omega| = {} but x has {} entries",
            omega.len(),
            x_omega.len()
        )));
    }
    if omega.bound() != basis.ambient_dim() {
        return Err(AmcError::Dimension("omega bound differs from basis dimension".into()));
    }
    if basis.rank() == 0 {
        return Ok(norm(x_omega));
    }
    let cols = basis.restricted_columns(omega.as_slice());
    let qs = span_basis(&cols, restriction_threshold(basis, omega.len()));
    let mut r = x_omega.to_vec();
    deflate(&qs, &mut r);
    Ok(norm(&r))
}

/// Solves `min ||A c - b||` for `A` of full column rank given as columns.
/// Uses a Gram-Schmidt QR factorisation with reorthogonalisation.
pub(crate) fn solve_full_rank(cols: &[Vec<f64>], b: &[f64], abs_thr: f64) -> Result<Vec<f64>> {
    let k = cols.len();
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut rmat = vec![vec![0.0; k]; k];
    for (j, c) in cols.iter().enumerate() {
        let mut v = c.clone();
        let coef = deflate(&qs, &mut v);
        for (i, h) in coef.into_iter().enumerate() {
            rmat[i][j] = h;
        }
        let nv = norm(&v);
        if nv <= abs_thr {
            return Err(AmcError::RankDeficient);
        }
        rmat[j][j] = nv;
        v.iter_mut().for_each(|x| *x /= nv);
        qs.push(v);
    }
    let qtb: Vec<f64> = qs.iter().map(|q| dot(q, b)).collect();
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|l| rmat[i][l] * c[l]).sum();
        c[i] = (qtb[i] - s) / rmat[i][i];
    }
    Ok(c)
}

/// Coefficients `c` with `U_R c ≈ observed`.
pub fn restricted_coefficients(basis: &OrthonormalBasis, rows: &IndexSet, observed: &[f64]) -> Result<Vec<f64>> {
    if rows.len() != observed.len() {
        return Err(AmcError::Dimension(format!(
            "|rows| = {} but {} observed values",
            rows.len(),
            observed.len()
        )));
    }
    if rows.bound() != basis.ambient_dim() {
        return Err(AmcError::Dimension("row set bound differs from basis dimension".into()));
    }
    if basis.rank() == 0 {
        return Ok(Vec::new());
    }
    if rows.len() < basis.rank() {
        return Err(AmcError::RankDeficient);
    }
    let cols = basis.restricted_columns(rows.as_slice());
    solve_full_rank(&cols, observed, restriction_threshold(basis, rows.len()))
}

/// Back-projection `U (U_R)^+ observed`.
pub fn reconstruct_column(basis: &OrthonormalBasis, rows: &IndexSet, observed: &[f64]) -> Result<Vec<f64>> {
    let c = restricted_coefficients(basis, rows, observed)?;
    Ok(basis.combine(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn walkthrough_column_normalises() {
        let b = orthonormalize(6, &[vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0]], tol()).unwrap();
        assert_eq!(b.rank(), 1);
        let s = 5f64.sqrt();
        let expect = [0.0, 0.0, 1.0 / s, 0.0, 0.0, 2.0 / s];
        for (a, e) in b.vector(0).iter().zip(expect) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn dependent_pair_collapses() {
        let b = orthonormalize(2, &[vec![1.0, 1.0], vec![2.0, 2.0]], tol()).unwrap();
        assert_eq!(b.rank(), 1);
        let b = orthonormalize(2, &[vec![1.0, 0.0], vec![0.0, 1.0]], tol()).unwrap();
        assert_eq!(b.rank(), 2);
        assert!(b.orthogonality_error() < 1e-15);
        assert_eq!(orthonormalize(3, &[], tol()).unwrap().rank(), 0);
    }

    #[test]
    fn residual_examples() {
        let b = orthonormalize(6, &[vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0]], tol()).unwrap();
        let om = IndexSet::new(vec![0, 4], 6).unwrap();
        assert_eq!(restricted_residual(&b, &om, &[0.0, 0.0]).unwrap(), 0.0);

        let empty = OrthonormalBasis::empty(2, tol());
        let om = IndexSet::full(2);
        assert_eq!(restricted_residual(&empty, &om, &[3.0, 4.0]).unwrap(), 5.0);

        let e1 = orthonormalize(3, &[vec![1.0, 0.0, 0.0]], tol()).unwrap();
        let om = IndexSet::new(vec![1, 2], 3).unwrap();
        let r = restricted_residual(&e1, &om, &[1.0, 1.0]).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reconstruct_examples() {
        let b = orthonormalize(6, &[vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0]], tol()).unwrap();
        let rows = IndexSet::new(vec![2], 6).unwrap();
        let x = reconstruct_column(&b, &rows, &[3.0]).unwrap();
        let expect = [0.0, 0.0, 3.0, 0.0, 0.0, 6.0];
        for (a, e) in x.iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }

        let ones = orthonormalize(4, &[vec![1.0; 4]], tol()).unwrap();
        let rows = IndexSet::new(vec![0, 1], 4).unwrap();
        let x = reconstruct_column(&ones, &rows, &[2.0, 2.0]).unwrap();
        assert!(x.iter().all(|v| (v - 2.0).abs() < 1e-12));
        let z = reconstruct_column(&ones, &rows, &[0.0, 0.0]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruct_rejects_deficient_restriction() {
        let b = orthonormalize(6, &[vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0]], tol()).unwrap();
        let rows = IndexSet::new(vec![0, 1], 6).unwrap();
        assert_eq!(reconstruct_column(&b, &rows, &[0.0, 0.0]), Err(AmcError::RankDeficient));
    }
}
