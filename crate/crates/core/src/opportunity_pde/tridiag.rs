use crate::error::{Error, Result};

/// Tridiagonal system `sub[j]·x[j−1] + diag[j]·x[j] + sup[j]·x[j+1] = rhs[j]`
/// (`sub[0]` and `sup[n−1]` are ignored), solved by the Thomas algorithm.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::IllPosed("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for j in 1..n {
        denom = diag[j] - sub[j] * c[j - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::IllPosed("zero pivot in tridiagonal solve".into()));
        }
        c[j] = if j + 1 < n { sup[j] / denom } else { 0.0 };
        d[j] = (rhs[j] - sub[j] * d[j - 1]) / denom;
    }
    let mut x = d;
    for j in (0..n - 1).rev() {
        x[j] -= c[j] * x[j + 1];
    }
    Ok(x)
}
