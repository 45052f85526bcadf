//! Exact Gaussian elimination over the rationals.

use num_traits::Zero;

use crate::rational::Rational;

/// Solves `A X = B` for square `A` (rows of `a`) and any number of
/// right-hand-side columns (rows of `b` are the rows of `B`).
///
/// Returns `None` when `A` is singular.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Vec<Rational>>) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    assert_eq!(b.len(), n, "right-hand side has the wrong number of rows");
    let cols = b.first().map_or(0, Vec::len);
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for c in col..n {
            a[col][c] *= &inv;
        }
        for c in 0..cols {
            b[col][c] *= &inv;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            for c in 0..cols {
                let delta = &factor * &b[col][c];
                b[r][c] -= delta;
            }
        }
    }
    Some(b)
}
