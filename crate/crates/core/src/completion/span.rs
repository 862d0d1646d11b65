//! Estimated column space shared by the algorithms: an orthonormal basis for
//! float work plus the raw observed columns for exact rational tests.

use num_traits::{ToPrimitive, Zero};

use crate::error::{AmcError, Result};
use crate::linalg::exact::{self, Rational};
use crate::linalg::{
    lstsq_min_norm, norm, reconstruct_column, restricted_residual, DenseMatrix, IndexSet, OrthonormalBasis,
    Tolerance,
};

pub(crate) struct SpanTracker {
    basis: OrthonormalBasis,
    raw: Vec<Vec<f64>>,
    tol: Tolerance,
}

fn rational_rows(cols: &[&[f64]], rows: &[usize]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|&i| cols.iter().map(|c| exact::to_rational(c[i])).collect())
        .collect()
}

impl SpanTracker {
    pub fn new(m: usize, tol: Tolerance) -> Self {
        Self { basis: OrthonormalBasis::empty(m, tol.as_float()), raw: Vec::new(), tol }
    }

    pub fn rank(&self) -> usize {
        self.raw.len()
    }

    /// Whether `x_omega` lies outside the span restricted to `omega`.
    pub fn is_independent(&self, omega: &IndexSet, x_omega: &[f64]) -> Result<bool> {
        if self.tol.is_exact() {
            if x_omega.iter().all(|v| *v == 0.0) {
                return Ok(false);
            }
            let refs: Vec<&[f64]> = self.raw.iter().map(Vec::as_slice).collect();
            let base = rational_rows(&refs, omega.as_slice());
            let before = if self.raw.is_empty() { 0 } else { exact::rank(base.clone()) };
            let with: Vec<Vec<Rational>> = base
                .into_iter()
                .zip(x_omega)
                .map(|(mut row, &v)| {
                    row.push(exact::to_rational(v));
                    row
                })
                .collect();
            return Ok(exact::rank(with) > before);
        }
        let res = restricted_residual(&self.basis, omega, x_omega)?;
        Ok(res > self.tol.residual_threshold(norm(x_omega), omega.len()))
    }

    /// Adds a fully observed column. Returns false if, numerically, it adds
    /// nothing to the span (only possible in float mode).
    pub fn push(&mut self, col: Vec<f64>) -> Result<bool> {
        let grew = self.basis.try_push(&col)?;
        if grew || self.tol.is_exact() {
            self.raw.push(col);
            return Ok(true);
        }
        Ok(false)
    }

    /// `U (U_R)^+ x_R`; exact rational solve in exact mode.
    pub fn reconstruct(&self, rows: &IndexSet, vals: &[f64]) -> Result<Vec<f64>> {
        if !self.tol.is_exact() {
            return reconstruct_column(&self.basis, rows, vals);
        }
        let m = self.basis.ambient_dim();
        let k = self.raw.len();
        if k == 0 {
            return Ok(vec![0.0; m]);
        }
        let refs: Vec<&[f64]> = self.raw.iter().map(Vec::as_slice).collect();
        let a = rational_rows(&refs, rows.as_slice());
        let b: Vec<Rational> = vals.iter().map(|&v| exact::to_rational(v)).collect();
        // normal equations, augmented with the right-hand side
        let mut g: Vec<Vec<Rational>> = (0..k)
            .map(|p| {
                let mut row: Vec<Rational> = (0..k)
                    .map(|q| a.iter().map(|r| &r[p] * &r[q]).sum())
                    .collect();
                row.push(a.iter().zip(&b).map(|(r, bv)| &r[p] * bv).sum());
                row
            })
            .collect();
        let c = solve_augmented(&mut g, k).ok_or(AmcError::RankDeficient)?;
        Ok((0..m)
            .map(|i| {
                let s: Rational = refs.iter().zip(&c).map(|(col, ci)| exact::to_rational(col[i]) * ci).sum();
                s.to_f64().unwrap_or(f64::NAN)
            })
            .collect())
    }

    /// Back-projection, falling back to the minimum-norm least-squares
    /// coefficients when the restriction does not determine them.
    pub fn reconstruct_lenient(&self, rows: &IndexSet, vals: &[f64]) -> Result<Vec<f64>> {
        match self.reconstruct(rows, vals) {
            Ok(v) => Ok(v),
            Err(AmcError::RankDeficient) => {
                let m = self.basis.ambient_dim();
                let k = self.basis.rank();
                if k == 0 || rows.is_empty() {
                    return Ok(vec![0.0; m]);
                }
                let a = DenseMatrix::from_columns(&self.basis.restricted_columns(rows.as_slice()))?;
                let c = lstsq_min_norm(&a, vals, self.tol.as_float())?;
                Ok(self.basis.combine(&c))
            }
            Err(e) => Err(e),
        }
    }

    /// Row among `candidates` such that the span restricted to `rows ∪ {a}`
    /// has full column rank. Picks the candidate with the largest residual
    /// against the rows already chosen.
    pub fn extension_row(&self, rows: &[usize], candidates: &[usize]) -> Option<usize> {
        let k = self.basis.rank();
        let m = self.basis.ambient_dim();
        let row_of = |i: usize| -> Vec<f64> { self.basis.vectors().iter().map(|q| q[i]).collect() };
        let mut qs: Vec<Vec<f64>> = Vec::new();
        for &r in rows {
            let mut v = row_of(r);
            deflate(&qs, &mut v);
            let nv = norm(&v);
            if nv > 0.0 {
                v.iter_mut().for_each(|x| *x /= nv);
                qs.push(v);
            }
        }
        let thr = self.tol.relative() * m.max(k) as f64;
        let mut best: Option<(usize, f64)> = None;
        for &a in candidates {
            if rows.contains(&a) {
                continue;
            }
            let mut v = row_of(a);
            deflate(&qs, &mut v);
            let res = norm(&v);
            let valid = if self.tol.is_exact() {
                let refs: Vec<&[f64]> = self.raw.iter().map(Vec::as_slice).collect();
                let mut idx = rows.to_vec();
                idx.push(a);
                exact::rank(rational_rows(&refs, &idx)) == self.raw.len()
            } else {
                res > thr
            };
            if valid && best.is_none_or(|(_, b)| res > b) {
                best = Some((a, res));
            }
        }
        best.map(|(a, _)| a)
    }
}

fn deflate(qs: &[Vec<f64>], v: &mut [f64]) {
    for _ in 0..2 {
        for q in qs {
            let h: f64 = q.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= h * y;
            }
        }
    }
}

/// Gauss-Jordan on a `k x (k+1)` augmented system.
fn solve_augmented(g: &mut [Vec<Rational>], k: usize) -> Option<Vec<Rational>> {
    for c in 0..k {
        let p = (c..k).find(|&i| !g[i][c].is_zero())?;
        g.swap(c, p);
        let inv = g[c][c].recip();
        for v in g[c].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..k {
            if i == c || g[i][c].is_zero() {
                continue;
            }
            let f = g[i][c].clone();
            for l in c..=k {
                let d = &f * &g[c][l];
                g[i][l] -= d;
            }
        }
    }
    Some(g.iter().map(|row| row[k].clone()).collect())
}
