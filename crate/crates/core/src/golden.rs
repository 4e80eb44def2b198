//! Golden-section search for unimodal scalar functions on a closed interval.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Minimizes `f` on `[a, b]` until the bracket is shorter than `tol`.
///
/// The returned point is the best of the two interior probes and the
/// endpoints, so a monotone `f` is handled exactly.
pub fn minimize<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let f_lo = f(lo);
    let f_hi = f(hi);
    let mut best = if f_hi < f_lo { (hi, f_hi) } else { (lo, f_lo) };
    if hi - lo <= tol {
        return Ok(Minimum {
            x: best.0,
            fx: best.1,
            iterations: 0,
        });
    }

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut it = 0;
    while hi - lo > tol {
        if it >= max_iter {
            return Err(Error::NonConvergence {
                what: "golden-section search",
                iterations: it,
                last_change: hi - lo,
            });
        }
        it += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx < best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    Ok(Minimum {
        x: best.0,
        fx: best.1,
        iterations: it,
    })
}

/// Maximizes `f` on `[a, b]`; see [`minimize`].
pub fn maximize<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    let m = minimize(|x| -f(x), a, b, tol, max_iter)?;
    Ok(Minimum { fx: -m.fx, ..m })
}

/// Scans `n` equispaced points, then refines inside the bracket around the
/// best one. Returns the refined optimum or the best scanned point, whichever
/// is lower.
pub fn scan_then_minimize<F>(mut f: F, a: f64, b: f64, n: usize, tol: f64, max_iter: usize) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    let mut k_best = 0;
    let mut f_best = f64::INFINITY;
    for k in 0..n {
        let x = if k + 1 == n { b } else { a + h * k as f64 };
        let fx = f(x);
        if fx < f_best {
            f_best = fx;
            k_best = k;
        }
    }
    let x_best = if k_best + 1 == n { b } else { a + h * k_best as f64 };
    let lo = if k_best == 0 { a } else { a + h * (k_best - 1) as f64 };
    let hi = if k_best + 2 >= n {
        b
    } else {
        a + h * (k_best + 1) as f64
    };
    let m = minimize(&mut f, lo, hi, tol, max_iter)?;
    if m.fx <= f_best {
        Ok(m)
    } else {
        Ok(Minimum {
            x: x_best,
            fx: f_best,
            iterations: m.iterations,
        })
    }
}
