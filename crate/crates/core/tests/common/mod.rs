//! Instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_forward::hamiltonian::{HamiltonianInputs, TwoPointMeasure};
use robust_forward::model_config::{presets, Interval, MarketSpec, ScalarFn, UGrid};

/// A random one-asset instance with a 41-point volatility grid, plus saddle
/// inputs at `v = 0`.
pub fn random_instance(seed: u64) -> (MarketSpec, HamiltonianInputs) {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    let r = g.random_range(0.0..0.05);
    let kappa = g.random_range(0.1..0.9);
    let pi_lo = -g.random_range(0.0..2.0);
    let pi_hi = g.random_range(0.2..3.0);
    let b_lo = r + g.random_range(-0.02..0.06);
    let b_hi = b_lo + g.random_range(0.0..0.08);
    let s_lo = g.random_range(0.05..0.2);
    let s_hi = s_lo + g.random_range(0.05..0.3);
    let sigma_bar = g.random_range(0.0..0.2);

    let mut spec = presets::singleton(r, b_lo, s_lo, sigma_bar, kappa, Interval::new(pi_lo, pi_hi));
    spec.corr = vec![g.random_range(-0.95..0.95)];
    spec.u_b = vec![Interval::new(b_lo, b_hi)];
    spec.u_sigma = vec![UGrid::linspace(s_lo, s_hi, 41)];
    spec.factor.sigma_bar = vec![ScalarFn::Constant { value: sigma_bar }];
    spec.validate().expect("generated instance is valid");

    let z = g.random_range(-0.5..0.5);
    let z_bar = g.random_range(-0.2..0.2);
    let inp = HamiltonianInputs::new(vec![z], z_bar, vec![sigma_bar]);
    (spec, inp)
}

/// A random two-atom measure on the first asset's grid.
pub fn random_measure<R: Rng>(spec: &MarketSpec, g: &mut R) -> TwoPointMeasure {
    let p = spec.u_sigma[0].points();
    let i = g.random_range(0..p.len());
    let j = g.random_range(0..p.len());
    let (a, b) = if p[i] <= p[j] { (p[i], p[j]) } else { (p[j], p[i]) };
    TwoPointMeasure::new(a, b, g.random_range(0.0..=1.0))
}

pub fn uniform_in<R: Rng>(iv: Interval, g: &mut R) -> f64 {
    if iv.is_singleton() {
        iv.lo
    } else {
        g.random_range(iv.lo..=iv.hi)
    }
}
