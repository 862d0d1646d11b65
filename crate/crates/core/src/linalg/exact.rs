//! Rational Gaussian elimination for exact rank and nullspace.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::DenseMatrix;

pub type Rational = BigRational;

/// Converts an `f64` to the rational it represents exactly.
pub fn to_rational(v: f64) -> Rational {
    BigRational::from_float(v).expect("finite value")
}

pub fn rational_rows(m: &DenseMatrix) -> Vec<Vec<Rational>> {
    (0..m.rows())
        .map(|i| m.row(i).into_iter().map(to_rational).collect())
        .collect()
}

/// Reduces `rows` to row echelon form in place; returns pivot columns.
fn echelon(rows: &mut [Vec<Rational>]) -> Vec<usize> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut().skip(c) {
            *v = &*v * &inv;
        }
        let (head, tail) = rows.split_at_mut(r + 1);
        let pivot_row = &head[r];
        for row in tail.iter_mut() {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for k in c..n {
                let d = &f * &pivot_row[k];
                row[k] -= d;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    echelon(&mut rows).len()
}

pub fn rank_of(m: &DenseMatrix) -> usize {
    rank(rational_rows(m))
}

/// Basis of the right nullspace of the matrix given by `rows` (`n` columns).
pub fn nullspace(mut rows: Vec<Vec<Rational>>, n: usize) -> Vec<Vec<Rational>> {
    let pivots = echelon(&mut rows);
    // back-substitute to reduced form
    for (pr, &pc) in pivots.iter().enumerate().rev() {
        for i in 0..pr {
            if rows[i][pc].is_zero() {
                continue;
            }
            let f = rows[i][pc].clone();
            for k in pc..n {
                let d = &f * &rows[pr][k];
                rows[i][k] -= d;
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![Rational::zero(); n];
            v[fc] = Rational::one();
            for (pr, &pc) in pivots.iter().enumerate() {
                v[pc] = -rows[pr][fc].clone();
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> Rational {
        Rational::from_integer(v.into())
    }

    #[test]
    fn rank_and_nullspace() {
        let rows = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        assert_eq!(rank(rows.clone()), 1);
        let ns = nullspace(rows.clone(), 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            for r in &rows {
                let s: Rational = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn exact_from_float() {
        assert_eq!(to_rational(0.5), Rational::new(1.into(), 2.into()));
    }
}
