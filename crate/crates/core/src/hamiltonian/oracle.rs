//! Brute-force references for the saddle value.
//!
//! For a fixed portfolio the Hamiltonian is affine in the measure, so its
//! infimum over measures equals its infimum over Dirac masses. The pointwise
//! oracle therefore needs only `sup_π min_{x_b, u} H_dirac`, which involves no
//! measures at all and shares no code path with the saddle search.

use serde::Serialize;

use super::{AssetTerms, HamiltonianInputs, MomentPoint, TwoPointMeasure};
use crate::error::Result;
use crate::golden;
use crate::model_config::{Interval, MarketSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub pi_points: usize,
    pub b_points: usize,
    /// Weights per atom pair in the inf-sup pass of [`grid_minimax`].
    pub weights: usize,
    pub pi_tol: f64,
    pub max_iter: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            pi_points: 101,
            b_points: 61,
            weights: 11,
            pi_tol: 1e-10,
            max_iter: 200,
        }
    }
}

fn linspace(iv: Interval, n: usize) -> Vec<f64> {
    if iv.is_singleton() || n < 2 {
        return vec![iv.lo];
    }
    let h = iv.width() / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|k| iv.lo + h * k as f64).collect();
    v[n - 1] = iv.hi;
    v
}

fn dirac_min(t: &AssetTerms, pi: f64, b_grid: &[f64], u_grid: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for &b in b_grid {
        for &u in u_grid {
            best = best.min(t.h(pi, b, MomentPoint::dirac(u)));
        }
    }
    best
}

/// `sup_π min_{x_b, u} H_dirac`, with the supremum located on a grid and then
/// refined by golden section (the inner minimum is concave in `π`).
pub fn saddle_value_pointwise_oracle(spec: &MarketSpec, inp: &HamiltonianInputs, opts: &OracleOptions) -> Result<f64> {
    inp.check(spec)?;
    let mut total = inp.common(spec.kappa_rra, spec.r);
    for i in 0..spec.n_assets {
        let t = AssetTerms::new(spec, inp, i);
        let b_grid = linspace(spec.u_b[i], opts.b_points);
        let u_grid = spec.u_sigma[i].points();
        let phi = |pi: f64| -dirac_min(&t, pi, &b_grid, u_grid);
        let bx = spec.pi_box[i];
        let m = golden::scan_then_minimize(phi, bx.lo, bx.hi, opts.pi_points, opts.pi_tol, opts.max_iter)?;
        total += -m.fx;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMinimax {
    pub sup_inf: f64,
    pub inf_sup: f64,
}

impl GridMinimax {
    pub fn gap(&self) -> f64 {
        (self.inf_sup - self.sup_inf).abs()
    }
}

/// Max over the equispaced grid of a concave quadratic in `π`: only the two
/// grid points around the clamped continuous maximizer can win.
fn grid_sup(t: &AssetTerms, pi_grid: &[f64], x_b: f64, m: MomentPoint) -> f64 {
    let n = pi_grid.len();
    if n == 1 {
        return t.h(pi_grid[0], x_b, m);
    }
    let num = t.num(x_b, m.m1);
    let s = t.s(m.m2);
    let lo = pi_grid[0];
    let h = pi_grid[1] - pi_grid[0];
    let target = if s > 0.0 {
        (num / ((1.0 - t.kappa) * s)).clamp(lo, pi_grid[n - 1])
    } else if num >= 0.0 {
        pi_grid[n - 1]
    } else {
        lo
    };
    let k = (((target - lo) / h).floor() as usize).min(n - 1);
    pi_grid[k.saturating_sub(1)..=(k + 1).min(n - 1)]
        .iter()
        .fold(f64::NEG_INFINITY, |best, &p| best.max(t.h(p, x_b, m)))
}

/// Sup-inf over (π grid) × (drift grid × Dirac grid) against inf-sup over
/// (drift grid × atom pairs × weights) × (π grid).
pub fn grid_minimax(spec: &MarketSpec, inp: &HamiltonianInputs, opts: &OracleOptions) -> Result<GridMinimax> {
    inp.check(spec)?;
    let common = inp.common(spec.kappa_rra, spec.r);
    let mut sup_inf = common;
    let mut inf_sup = common;
    for i in 0..spec.n_assets {
        let t = AssetTerms::new(spec, inp, i);
        let pi_grid = linspace(spec.pi_box[i], opts.pi_points);
        let b_grid = linspace(spec.u_b[i], opts.b_points);
        let u = spec.u_sigma[i].points();

        sup_inf += pi_grid
            .iter()
            .map(|&pi| dirac_min(&t, pi, &b_grid, u))
            .fold(f64::NEG_INFINITY, f64::max);

        let weights = linspace(Interval::new(0.0, 1.0), opts.weights.max(2));
        let mut best = f64::INFINITY;
        for &b in &b_grid {
            for j in 0..u.len() {
                best = best.min(grid_sup(&t, &pi_grid, b, MomentPoint::dirac(u[j])));
                for k in j + 1..u.len() {
                    for &w in &weights {
                        let m = TwoPointMeasure {
                            u_lo: u[j],
                            u_hi: u[k],
                            w,
                        }
                        .moments();
                        best = best.min(grid_sup(&t, &pi_grid, b, m));
                    }
                }
            }
        }
        inf_sup += best;
    }
    Ok(GridMinimax { sup_inf, inf_sup })
}
