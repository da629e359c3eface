//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `A x = rhs` where row `k` of `A` is
/// `lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1]`.
///
/// `lower[0]` and `upper[len-1]` are ignored. No pivoting is performed, so the
/// caller must supply a diagonally dominant (or otherwise pivot-safe) matrix.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(
        lower.len() == n && upper.len() == n && rhs.len() == n,
        "tridiagonal bands must have equal length"
    );
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for k in 1..n {
        pivot = diag[k] - lower[k] * c[k - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: k });
        }
        c[k] = if k + 1 < n { upper[k] / pivot } else { 0.0 };
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / pivot;
    }
    let mut x = d;
    for k in (0..n - 1).rev() {
        x[k] -= c[k] * x[k + 1];
    }
    Ok(x)
}
