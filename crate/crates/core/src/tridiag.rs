use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Thomas elimination for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. A zero or non-finite pivot is
/// reported with its row instead of producing garbage.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = diag[i] - lower[i] * c[i - 1];
        }
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i, pivot });
        }
        c[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        let carried = if i > 0 { lower[i] * d[i - 1] } else { 0.0 };
        d[i] = (rhs[i] - carried) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
