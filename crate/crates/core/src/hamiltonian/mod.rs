//! Randomized and Dirac Hamiltonians and their saddle point.
//!
//! The randomized Hamiltonian depends on a measure on the volatility grid
//! only through its first two moments `(m1, m2)`, and it is affine in them.
//! Everything below is therefore written per asset in terms of
//!
//! ```text
//! num = x_b − r + ρ z m1 + σ̄ z̄        s = m2 + σ̄²
//! h(π) = κ π num − ½ κ (1−κ) π² s
//! ```
//!
//! plus the asset-independent part `½(|z|² + z̄²) + κ r`.

mod moment;
mod oracle;
mod saddle;

pub use moment::{moment_body, MomentBody, MomentPoint, TwoPointMeasure};
pub use oracle::{grid_minimax, saddle_value_pointwise_oracle, GridMinimax, OracleOptions};
pub use saddle::{saddle, saddle_with, AssetSaddle, PairSearch, SaddleOptions, SaddleSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_config::{Interval, MarketSpec};

/// The BSDE controls and systematic volatilities at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianInputs {
    pub z: Vec<f64>,
    pub z_bar: f64,
    pub sigma_bar_t: Vec<f64>,
}

impl HamiltonianInputs {
    pub fn new(z: Vec<f64>, z_bar: f64, sigma_bar_t: Vec<f64>) -> Self {
        Self { z, z_bar, sigma_bar_t }
    }

    /// Inputs at factor value `v`; the systematic volatilities come from the spec.
    pub fn at_factor(spec: &MarketSpec, v: f64, z: Vec<f64>, z_bar: f64) -> Self {
        Self::new(z, z_bar, spec.factor.sigma_bar_at(v))
    }

    pub fn check(&self, spec: &MarketSpec) -> Result<()> {
        let n = spec.n_assets;
        if self.z.len() != n || self.sigma_bar_t.len() != n {
            return Err(Error::Domain(format!(
                "expected {n} entries in z and sigma_bar_t, found {} and {}",
                self.z.len(),
                self.sigma_bar_t.len()
            )));
        }
        if !self.z_bar.is_finite() || self.z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("z and z_bar must be finite".into()));
        }
        if self.sigma_bar_t.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Domain("sigma_bar_t must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn common(&self, kappa: f64, r: f64) -> f64 {
        let zz: f64 = self.z.iter().map(|z| z * z).sum();
        0.5 * (zz + self.z_bar * self.z_bar) + kappa * r
    }
}

/// The coefficients of one asset's share of the Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AssetTerms {
    pub kappa: f64,
    pub r: f64,
    pub rho: f64,
    pub z: f64,
    pub z_bar: f64,
    pub sigma_bar: f64,
    pub pi_box: Interval,
}

impl AssetTerms {
    pub fn new(spec: &MarketSpec, inp: &HamiltonianInputs, i: usize) -> Self {
        Self {
            kappa: spec.kappa_rra,
            r: spec.r,
            rho: spec.corr[i],
            z: inp.z[i],
            z_bar: inp.z_bar,
            sigma_bar: inp.sigma_bar_t[i],
            pi_box: spec.pi_box[i],
        }
    }

    pub fn num(&self, x_b: f64, m1: f64) -> f64 {
        x_b - self.r + self.rho * self.z * m1 + self.sigma_bar * self.z_bar
    }

    pub fn s(&self, m2: f64) -> f64 {
        m2 + self.sigma_bar * self.sigma_bar
    }

    pub fn h(&self, pi: f64, x_b: f64, m: MomentPoint) -> f64 {
        let k = self.kappa;
        k * pi * self.num(x_b, m.m1) - 0.5 * k * (1.0 - k) * pi * pi * self.s(m.m2)
    }

    /// `sup_{π ∈ box} h(π)` for given `num` and `s`.
    ///
    /// When the unconstrained maximizer is clamped the value is evaluated
    /// directly at the endpoint, which equals the distance-penalty form but
    /// avoids its cancellation.
    pub fn sup_pi(&self, num: f64, s: f64) -> f64 {
        let k = self.kappa;
        if s <= 0.0 {
            return k * (self.pi_box.lo * num).max(self.pi_box.hi * num);
        }
        let q = num / ((1.0 - k) * s);
        let p = project_box(self.pi_box, q);
        if p == q {
            0.5 * k * num * num / ((1.0 - k) * s)
        } else {
            k * p * num - 0.5 * k * (1.0 - k) * p * p * s
        }
    }

    pub fn plugged(&self, x_b: f64, m: MomentPoint) -> f64 {
        self.sup_pi(self.num(x_b, m.m1), self.s(m.m2))
    }

    pub fn best_pi(&self, x_b: f64, m: MomentPoint, asset: usize) -> Result<f64> {
        let num = self.num(x_b, m.m1);
        let s = self.s(m.m2);
        if s == 0.0 {
            if num != 0.0 {
                return Err(Error::Singular { asset });
            }
            return Ok(0.0);
        }
        Ok(project_box(self.pi_box, num / ((1.0 - self.kappa) * s)))
    }
}

pub fn project_box(interval: Interval, a: f64) -> f64 {
    a.clamp(interval.lo, interval.hi)
}

pub fn dist_box(interval: Interval, a: f64) -> f64 {
    (a - project_box(interval, a)).abs()
}

fn check_controls(spec: &MarketSpec, inp: &HamiltonianInputs, x_pi: Option<&[f64]>, x_b: &[f64]) -> Result<()> {
    inp.check(spec)?;
    let n = spec.n_assets;
    if x_b.len() != n {
        return Err(Error::Domain(format!("x_b has {} entries, expected {n}", x_b.len())));
    }
    for (i, b) in x_b.iter().enumerate() {
        if !spec.u_b[i].contains(*b) {
            return Err(Error::Domain(format!("x_b[{i}] = {b} outside U_b")));
        }
    }
    if let Some(x_pi) = x_pi {
        if x_pi.len() != n {
            return Err(Error::Domain(format!("x_pi has {} entries, expected {n}", x_pi.len())));
        }
        for (i, p) in x_pi.iter().enumerate() {
            if !spec.pi_box[i].contains(*p) {
                return Err(Error::Domain(format!("x_pi[{i}] = {p} outside the constraint box")));
            }
        }
    }
    Ok(())
}

fn check_measures(spec: &MarketSpec, x_m: &[TwoPointMeasure]) -> Result<()> {
    if x_m.len() != spec.n_assets {
        return Err(Error::Domain(format!(
            "x_m has {} entries, expected {}",
            x_m.len(),
            spec.n_assets
        )));
    }
    for (i, m) in x_m.iter().enumerate() {
        if !m.atoms_in(&spec.u_sigma[i]) {
            return Err(Error::Domain(format!(
                "x_m[{i}] = {m:?} is not a measure on the volatility grid"
            )));
        }
    }
    Ok(())
}

/// Hamiltonian for a measure given only by its moments. No set-membership
/// checks; used by the solvers on points they construct themselves.
pub fn eval_h_moments(spec: &MarketSpec, inp: &HamiltonianInputs, x_pi: &[f64], x_b: &[f64], m: &[MomentPoint]) -> f64 {
    let mut acc = inp.common(spec.kappa_rra, spec.r);
    for i in 0..spec.n_assets {
        acc += AssetTerms::new(spec, inp, i).h(x_pi[i], x_b[i], m[i]);
    }
    acc
}

pub fn eval_h_randomized(
    spec: &MarketSpec,
    inp: &HamiltonianInputs,
    x_pi: &[f64],
    x_b: &[f64],
    x_m: &[TwoPointMeasure],
) -> Result<f64> {
    check_controls(spec, inp, Some(x_pi), x_b)?;
    check_measures(spec, x_m)?;
    let m: Vec<MomentPoint> = x_m.iter().map(TwoPointMeasure::moments).collect();
    Ok(eval_h_moments(spec, inp, x_pi, x_b, &m))
}

pub fn eval_h_dirac(
    spec: &MarketSpec,
    inp: &HamiltonianInputs,
    x_pi: &[f64],
    x_b: &[f64],
    x_sigma: &[f64],
) -> Result<f64> {
    let x_m: Vec<TwoPointMeasure> = x_sigma.iter().map(|&u| TwoPointMeasure::dirac(u)).collect();
    eval_h_randomized(spec, inp, x_pi, x_b, &x_m)
}

pub fn best_response_pi(
    spec: &MarketSpec,
    inp: &HamiltonianInputs,
    x_b: &[f64],
    x_m: &[TwoPointMeasure],
) -> Result<Vec<f64>> {
    check_controls(spec, inp, None, x_b)?;
    check_measures(spec, x_m)?;
    (0..spec.n_assets)
        .map(|i| AssetTerms::new(spec, inp, i).best_pi(x_b[i], x_m[i].moments(), i))
        .collect()
}

/// The Hamiltonian maximized over the constraint box, in closed form.
pub fn eval_h_plugged(spec: &MarketSpec, inp: &HamiltonianInputs, x_b: &[f64], x_m: &[TwoPointMeasure]) -> Result<f64> {
    check_controls(spec, inp, None, x_b)?;
    check_measures(spec, x_m)?;
    let mut acc = inp.common(spec.kappa_rra, spec.r);
    for i in 0..spec.n_assets {
        let t = AssetTerms::new(spec, inp, i);
        let m = x_m[i].moments();
        let (num, s) = (t.num(x_b[i], m.m1), t.s(m.m2));
        if s == 0.0 && num != 0.0 {
            return Err(Error::Singular { asset: i });
        }
        acc += t.sup_pi(num, s);
    }
    Ok(acc)
}

/// The distance-penalty expression for one asset, kept separate from
/// [`AssetTerms::sup_pi`] so tests can compare the two forms.
pub fn plugged_distance_form(kappa: f64, pi_box: Interval, num: f64, s: f64) -> f64 {
    let q = num / ((1.0 - kappa) * s);
    let d = dist_box(pi_box, q);
    -0.5 * kappa * (1.0 - kappa) * s * d * d + 0.5 * kappa / (1.0 - kappa) * num * num / s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_config::presets;

    fn merton(pi: Interval) -> MarketSpec {
        presets::singleton(0.0, 0.04, 0.2, 0.0, 0.5, pi)
    }

    fn zero_inputs(n: usize) -> HamiltonianInputs {
        HamiltonianInputs::new(vec![0.0; n], 0.0, vec![0.0; n])
    }

    #[test]
    fn no_investment_gives_kappa_r() {
        let mut s = merton(Interval::new(0.0, 1.0));
        s.r = 0.02;
        s.u_b = vec![Interval::new(0.0, 0.1)];
        let v = eval_h_dirac(&s, &zero_inputs(1), &[0.0], &[0.04], &[0.2]).unwrap();
        assert!((v - 0.01).abs() < 1e-16);
    }

    #[test]
    fn quadratic_z_terms_only() {
        let s = merton(Interval::new(0.0, 1.0));
        let inp = HamiltonianInputs::new(vec![1.0], 2.0, vec![0.0]);
        let v = eval_h_dirac(&s, &inp, &[0.0], &[0.04], &[0.2]).unwrap();
        assert_eq!(v, 2.5);
    }

    #[test]
    fn direct_substitution() {
        let s = merton(Interval::new(0.0, 1.0));
        let inp = zero_inputs(1);
        let v = eval_h_randomized(&s, &inp, &[1.0], &[0.04], &[TwoPointMeasure::dirac(0.2)]).unwrap();
        assert!((v - 0.015).abs() < 1e-16);
        let d = eval_h_dirac(&s, &inp, &[1.0], &[0.04], &[0.2]).unwrap();
        assert_eq!(v, d);
        let degenerate = TwoPointMeasure {
            u_lo: 0.2,
            u_hi: 0.2,
            w: 0.37,
        };
        let v2 = eval_h_randomized(&s, &inp, &[1.0], &[0.04], &[degenerate]).unwrap();
        assert!((v2 - d).abs() < 1e-16);
    }

    #[test]
    fn expectation_identity_small_cases() {
        let mut s = presets::ou();
        s.r = 0.01;
        let inp = HamiltonianInputs::new(vec![0.3], -0.2, vec![0.17]);
        let g = s.u_sigma[0].points().to_vec();
        let (lo, hi) = (g[3], g[30]);
        for w in [0.0, 0.25, 0.5, 1.0] {
            let m = TwoPointMeasure { u_lo: lo, u_hi: hi, w };
            let r = eval_h_randomized(&s, &inp, &[0.7], &[0.05], &[m]).unwrap();
            let a = eval_h_dirac(&s, &inp, &[0.7], &[0.05], &[lo]).unwrap();
            let b = eval_h_dirac(&s, &inp, &[0.7], &[0.05], &[hi]).unwrap();
            assert!((r - (w * a + (1.0 - w) * b)).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_set_arguments_are_domain_errors() {
        let s = merton(Interval::new(0.0, 1.0));
        let inp = zero_inputs(1);
        let e = eval_h_dirac(&s, &inp, &[2.0], &[0.04], &[0.2]).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
        let e = eval_h_dirac(&s, &inp, &[0.5], &[0.05], &[0.2]).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
        let e = eval_h_dirac(&s, &inp, &[0.5], &[0.04], &[0.25]).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn projection_examples() {
        let b = Interval::new(-1.0, 1.0);
        assert_eq!((project_box(b, 2.0), dist_box(b, 2.0)), (1.0, 1.0));
        assert_eq!((project_box(b, 0.3), dist_box(b, 0.3)), (0.3, 0.0));
        let z = Interval::point(0.0);
        assert_eq!((project_box(z, -5.0), dist_box(z, -5.0)), (0.0, 5.0));
    }

    #[test]
    fn best_response_examples() {
        let inp = zero_inputs(1);
        let m = [TwoPointMeasure::dirac(0.2)];
        let s = merton(Interval::new(-10.0, 10.0));
        assert!((best_response_pi(&s, &inp, &[0.04], &m).unwrap()[0] - 2.0).abs() < 1e-14);
        let s = merton(Interval::new(0.0, 1.0));
        assert_eq!(best_response_pi(&s, &inp, &[0.04], &m).unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_variance_is_singular_unless_numerator_vanishes() {
        let mut s = merton(Interval::new(-1.0, 1.0));
        s.u_sigma = vec![crate::model_config::UGrid::from_points(vec![0.0])];
        let inp = zero_inputs(1);
        let m = [TwoPointMeasure::dirac(0.0)];
        let e = best_response_pi(&s, &inp, &[0.04], &m).unwrap_err();
        assert!(matches!(e, Error::Singular { asset: 0 }));
        let e = eval_h_plugged(&s, &inp, &[0.04], &m).unwrap_err();
        assert!(matches!(e, Error::Singular { asset: 0 }));
        s.u_b = vec![Interval::point(0.0)];
        assert_eq!(best_response_pi(&s, &inp, &[0.0], &m).unwrap(), vec![0.0]);
    }

    #[test]
    fn best_response_beats_the_pi_grid() {
        let s = presets::ou();
        let inp = HamiltonianInputs::new(vec![0.4], 0.1, vec![0.18]);
        let m = [TwoPointMeasure {
            u_lo: 0.1,
            u_hi: 0.3,
            w: 0.4,
        }];
        for x_b in [0.02, 0.035, 0.06] {
            let p = best_response_pi(&s, &inp, &[x_b], &m).unwrap();
            let best = eval_h_randomized(&s, &inp, &p, &[x_b], &m).unwrap();
            for k in 0..=100 {
                let pi = k as f64 / 100.0;
                let v = eval_h_randomized(&s, &inp, &[pi], &[x_b], &m).unwrap();
                assert!(v <= best + 1e-15);
            }
        }
    }

    #[test]
    fn plugged_examples() {
        let inp = zero_inputs(1);
        let m = [TwoPointMeasure::dirac(0.2)];
        let s = merton(Interval::new(-10.0, 10.0));
        let v = eval_h_plugged(&s, &inp, &[0.04], &m).unwrap();
        assert!((v - 0.5 * 0.5 / 0.5 * 0.04 * 0.04 / 0.04).abs() < 1e-16);
        let mut s = merton(Interval::new(0.0, 1.0));
        s.r = 0.03;
        s.u_b = vec![Interval::new(0.0, 0.1)];
        let v = eval_h_plugged(&s, &inp, &[0.03], &m).unwrap();
        assert!((v - 0.5 * 0.03).abs() < 1e-16);
    }
}
