//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative singular-value tolerance used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    let sv = singular_values(m);
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

pub fn has_full_row_rank(m: &CMatrix) -> bool {
    m.nrows() <= m.ncols() && numerical_rank(m, RANK_TOL) == m.nrows()
}

/// Stacks row blocks vertically. All blocks must share a column count.
pub fn vstack(rows: &[CVector]) -> CMatrix {
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// `conj(a) . b`
pub fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// `|h . w|^2` for a row channel `h` (stored as a vector) and column `w`.
pub fn gain(h: &CVector, w: &CVector) -> f64 {
    h.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr()
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
