//! Per-asset minimization of the plugged Hamiltonian over drift and measure.
//!
//! For a fixed drift, the plugged value `F(x_b, m1, m2)` is a supremum of
//! functions affine in `(m1, m2)` whose `m2` coefficient is `−½κ(1−κ)π² ≤ 0`.
//! So `F` is convex and non-increasing in `m2`, and the minimum over the
//! moment body sits on its upper boundary: the chord between the smallest and
//! largest grid points. [`PairSearch::UpperChord`] uses only that pair;
//! [`PairSearch::Exhaustive`] tries every pair of grid points and exists to
//! cross-check the reduction.
//!
//! Along any pair, `num` and `s` are affine in the weight, so `F` is either
//! `½κ num²/((1−κ)s)` (box inactive) or affine (box active). Its minimum is
//! therefore at an endpoint, at a switch between the two regimes, or at a
//! stationary point of `num²/s`; all are available in closed form.

use serde::Serialize;

use super::oracle::{saddle_value_pointwise_oracle, OracleOptions};
use super::{AssetTerms, HamiltonianInputs, MomentPoint, TwoPointMeasure};
use crate::error::Result;
use crate::golden;
use crate::model_config::{MarketSpec, UGrid};

/// Relative tolerance under which two candidate values count as tied.
const TIE_RTOL: f64 = 1e-13;
const BISECT_STEPS: usize = 64;
/// Relative move below which a tie-break is discarded, so strict minima are
/// reported exactly. Also the probe distance for flagging flat minima.
const SNAP: f64 = 1e-7;
/// Asset values below this are treated as a possibly inexact zero numerator.
const ZERO_VALUE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PairSearch {
    Exhaustive,
    #[default]
    UpperChord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleOptions {
    pub pairs: PairSearch,
    /// Run the pointwise oracle and report the gap.
    pub verify: bool,
    /// Points in the coarse drift scan that brackets the golden-section search.
    pub b_scan: usize,
    pub b_tol: f64,
    pub max_iter: usize,
    pub oracle: OracleOptions,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self {
            pairs: PairSearch::UpperChord,
            verify: true,
            b_scan: 61,
            b_tol: 1e-9,
            max_iter: 200,
            oracle: OracleOptions::default(),
        }
    }
}

impl SaddleOptions {
    /// Settings for inner loops of the solvers: no oracle pass.
    pub fn fast() -> Self {
        Self {
            verify: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssetSaddle {
    pub x_pi_star: f64,
    pub x_b_star: f64,
    pub x_m_star: TwoPointMeasure,
    /// This asset's share of the saddle value.
    pub value: f64,
    /// The reported minimizer was picked among several within tie tolerance.
    pub near_tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub assets: Vec<AssetSaddle>,
    pub h_star: f64,
    /// `|oracle − h_star|`; absent when verification was skipped.
    pub duality_gap: Option<f64>,
    pub near_ties: usize,
}

impl SaddleSolution {
    pub fn x_pi_star(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.x_pi_star).collect()
    }

    pub fn x_b_star(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.x_b_star).collect()
    }

    pub fn x_m_star(&self) -> Vec<TwoPointMeasure> {
        self.assets.iter().map(|a| a.x_m_star).collect()
    }
}

pub fn saddle(spec: &MarketSpec, inp: &HamiltonianInputs) -> Result<SaddleSolution> {
    saddle_with(spec, inp, &SaddleOptions::default())
}

pub fn saddle_with(spec: &MarketSpec, inp: &HamiltonianInputs, opts: &SaddleOptions) -> Result<SaddleSolution> {
    inp.check(spec)?;
    let mut assets = Vec::with_capacity(spec.n_assets);
    let mut h_star = inp.common(spec.kappa_rra, spec.r);
    for i in 0..spec.n_assets {
        let a = solve_asset(spec, inp, i, opts)?;
        h_star += a.value;
        assets.push(a);
    }
    let duality_gap = if opts.verify {
        Some((saddle_value_pointwise_oracle(spec, inp, &opts.oracle)? - h_star).abs())
    } else {
        None
    };
    let near_ties = assets.iter().filter(|a| a.near_tie).count();
    Ok(SaddleSolution {
        assets,
        h_star,
        duality_gap,
        near_ties,
    })
}

/// Minimum of the plugged value along one pair, with the largest minimizing
/// weight (smallest moments) among ties.
#[derive(Debug, Clone, Copy)]
struct PairMin {
    value: f64,
    w: f64,
}

fn on_pair(t: &AssetTerms, x_b: f64, lo: f64, hi: f64, w: f64) -> f64 {
    t.plugged(x_b, TwoPointMeasure { u_lo: lo, u_hi: hi, w }.moments())
}

fn pair_min(t: &AssetTerms, x_b: f64, lo: f64, hi: f64) -> PairMin {
    if lo == hi {
        return PairMin {
            value: t.plugged(x_b, MomentPoint::dirac(lo)),
            w: 1.0,
        };
    }
    // num = a + b w, s = c + d w
    let a = t.num(x_b, hi);
    let b = t.rho * t.z * (lo - hi);
    let c = t.s(hi * hi);
    let d = lo * lo - hi * hi;
    let k1 = 1.0 - t.kappa;
    let mut cands = [f64::NAN; 7];
    cands[0] = 0.0;
    cands[1] = 1.0;
    for (slot, p) in [(2, t.pi_box.lo), (3, t.pi_box.hi)] {
        let den = b - p * k1 * d;
        if den != 0.0 {
            cands[slot] = (p * k1 * c - a) / den;
        }
    }
    if b != 0.0 {
        cands[4] = -a / b;
        if d != 0.0 {
            cands[5] = (a * d - 2.0 * b * c) / (b * d);
        }
    }
    let mut best = PairMin {
        value: f64::INFINITY,
        w: 1.0,
    };
    for &w in cands.iter().filter(|w| w.is_finite() && (0.0..=1.0).contains(*w)) {
        let v = on_pair(t, x_b, lo, hi, w);
        if v < best.value || (v == best.value && w > best.w) {
            best = PairMin { value: v, w };
        }
    }
    best
}

fn tie_tol(v: f64) -> f64 {
    TIE_RTOL * (1.0 + v.abs())
}

/// Largest `w` in `[w0, 1]` whose value stays within tie tolerance of the
/// minimum found at `w0`. Valid because the value is convex in `w`.
fn widen_weight(t: &AssetTerms, x_b: f64, lo: f64, hi: f64, best: PairMin) -> PairMin {
    let thr = best.value + tie_tol(best.value);
    if best.w >= 1.0 {
        return best;
    }
    let f = |w: f64| on_pair(t, x_b, lo, hi, w);
    let w = if f(1.0) <= thr {
        1.0
    } else {
        let (mut good, mut bad) = (best.w, 1.0);
        for _ in 0..BISECT_STEPS {
            let mid = 0.5 * (good + bad);
            if f(mid) <= thr {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    if w - best.w < SNAP {
        return best;
    }
    PairMin { value: f(w), w }
}

/// Whether the value at `w` is tied with a point slightly below it.
fn flat_at(t: &AssetTerms, x_b: f64, lo: f64, hi: f64, pm: PairMin) -> bool {
    lo != hi && pm.w >= SNAP && on_pair(t, x_b, lo, hi, pm.w - SNAP) <= pm.value + tie_tol(pm.value)
}

fn pairs_of(grid: &UGrid, mode: PairSearch) -> Vec<(f64, f64)> {
    let p = grid.points();
    match mode {
        PairSearch::UpperChord => vec![(grid.min(), grid.max())],
        PairSearch::Exhaustive => {
            let mut out = Vec::with_capacity(p.len() * (p.len() + 1) / 2);
            for j in 0..p.len() {
                for k in j..p.len() {
                    out.push((p[j], p[k]));
                }
            }
            out
        }
    }
}

fn inner_value(t: &AssetTerms, x_b: f64, pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .map(|&(lo, hi)| pair_min(t, x_b, lo, hi).value)
        .fold(f64::INFINITY, f64::min)
}

fn solve_asset(spec: &MarketSpec, inp: &HamiltonianInputs, i: usize, opts: &SaddleOptions) -> Result<AssetSaddle> {
    let t = AssetTerms::new(spec, inp, i);
    let ub = spec.u_b[i];
    let pairs = pairs_of(&spec.u_sigma[i], opts.pairs);
    let g = |x: f64| inner_value(&t, x, &pairs);

    let x_b = if ub.is_singleton() {
        ub.lo
    } else {
        let m = golden::scan_then_minimize(g, ub.lo, ub.hi, opts.b_scan, opts.b_tol, opts.max_iter)?;
        let thr = m.fx + tie_tol(m.fx);
        if m.x == ub.lo || g(ub.lo) <= thr {
            ub.lo
        } else {
            let (mut bad, mut good) = (ub.lo, m.x);
            for _ in 0..BISECT_STEPS {
                let mid = 0.5 * (bad + good);
                if g(mid) <= thr {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            if m.x - good < SNAP * ub.width() {
                m.x
            } else {
                good
            }
        }
    };
    let mut near_tie = if ub.is_singleton() {
        false
    } else {
        let probe = (x_b + SNAP * ub.width()).min(ub.hi);
        let gx = g(x_b);
        g(probe) <= gx + tie_tol(gx)
    };

    // Among pairs tied at the minimum, prefer the smallest m1, then m2.
    let per_pair: Vec<(f64, f64, PairMin)> = pairs
        .iter()
        .map(|&(lo, hi)| (lo, hi, pair_min(&t, x_b, lo, hi)))
        .collect();
    let v_min = per_pair.iter().map(|p| p.2.value).fold(f64::INFINITY, f64::min);
    let thr = v_min + tie_tol(v_min);
    let mut chosen: Option<(TwoPointMeasure, MomentPoint)> = None;
    let mut tied = 0;
    for &(lo, hi, pm) in per_pair.iter().filter(|p| p.2.value <= thr) {
        tied += 1;
        let wide = widen_weight(&t, x_b, lo, hi, pm);
        near_tie |= flat_at(&t, x_b, lo, hi, wide);
        let meas = TwoPointMeasure::new(lo, hi, wide.w);
        let mom = meas.moments();
        let better = match chosen {
            None => true,
            Some((_, c)) => mom.m1 < c.m1 || (mom.m1 == c.m1 && mom.m2 < c.m2),
        };
        if better {
            chosen = Some((meas, mom));
        }
    }
    let (x_m, mom) = chosen.expect("at least one pair attains the minimum");
    if tied > 1 {
        let distinct = per_pair
            .iter()
            .filter(|p| p.2.value <= thr)
            .any(|p| TwoPointMeasure::new(p.0, p.1, p.2.w).moments() != mom);
        near_tie |= distinct;
    }

    // The value is quadratic in the numerator around zero, so the search only
    // gets within about √tol of a zero numerator and leaves a small nonzero
    // π*. Any point with a zero numerator has value 0, the least possible
    // since the box contains 0, so snapping to one keeps a minimizer and makes
    // π* = 0 exact. The weight is moved first to keep the tie-broken drift.
    let (mut x_b, mut x_m, mut mom) = (x_b, x_m, mom);
    let n0 = t.num(x_b, mom.m1);
    if n0 != 0.0 && t.plugged(x_b, mom) <= ZERO_VALUE && t.best_pi(x_b, mom, i)? != 0.0 {
        let slope = t.rho * t.z;
        let w = if slope != 0.0 && x_m.u_lo < x_m.u_hi {
            (x_m.u_hi - (mom.m1 - n0 / slope)) / (x_m.u_hi - x_m.u_lo)
        } else {
            f64::NAN
        };
        if (0.0..=1.0).contains(&w) {
            x_m = TwoPointMeasure::new(x_m.u_lo, x_m.u_hi, w);
            mom = x_m.moments();
        } else if ub.contains(x_b - n0) {
            x_b -= n0;
        }
    }

    let x_pi = t.best_pi(x_b, mom, i)?;
    Ok(AssetSaddle {
        x_pi_star: x_pi,
        x_b_star: x_b,
        x_m_star: x_m,
        value: t.plugged(x_b, mom),
        near_tie,
    })
}
