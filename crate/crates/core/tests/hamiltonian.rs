mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robust_forward::hamiltonian::{
    best_response_pi, eval_h_dirac, eval_h_moments, eval_h_plugged, eval_h_randomized, moment_body,
    plugged_distance_form, saddle, saddle_with, HamiltonianInputs, PairSearch, SaddleOptions, TwoPointMeasure,
};
use robust_forward::model_config::{presets, Interval, MarketSpec, UGrid};

use common::{random_instance, random_measure, uniform_in};

/// Brute-force robust value: the clamp-based best response written out
/// directly, minimized over a drift grid and every pair of grid points with
/// a weight grid. Restricting the minimization can only raise the value.
fn brute_force_value(spec: &MarketSpec, inp: &HamiltonianInputs) -> f64 {
    let k = spec.kappa_rra;
    let bx = spec.pi_box[0];
    let (rho, z, zb, sb) = (spec.corr[0], inp.z[0], inp.z_bar, inp.sigma_bar_t[0]);
    let common = 0.5 * (z * z + zb * zb) + k * spec.r;
    let pts = spec.u_sigma[0].points();
    let ub = spec.u_b[0];
    let nb = 401;
    let mut best = f64::INFINITY;
    for j in 0..pts.len() {
        for l in j..pts.len() {
            for wi in 0..=20 {
                let w = wi as f64 / 20.0;
                let m1 = w * pts[j] + (1.0 - w) * pts[l];
                let m2 = w * pts[j] * pts[j] + (1.0 - w) * pts[l] * pts[l];
                let s = m2 + sb * sb;
                for bi in 0..nb {
                    let b = ub.lo + ub.width() * bi as f64 / (nb - 1) as f64;
                    let num = b - spec.r + rho * z * m1 + sb * zb;
                    let p = (num / ((1.0 - k) * s)).clamp(bx.lo, bx.hi);
                    best = best.min(k * p * num - 0.5 * k * (1.0 - k) * p * p * s);
                }
            }
        }
    }
    common + best
}

#[test]
fn saddle_matches_brute_force() {
    for seed in 0..4 {
        let (spec, inp) = random_instance(100 + seed);
        let h = saddle(&spec, &inp).unwrap().h_star;
        let brute = brute_force_value(&spec, &inp);
        assert!(h <= brute + 1e-12, "seed {seed}: {h} above brute force {brute}");
        assert!(brute - h <= 1e-5 * (1.0 + h.abs()), "seed {seed}: {h} vs {brute}");
    }
}

#[test]
fn ou_worst_case_is_lowest_drift_and_largest_volatility() {
    let spec = presets::ou();
    for v in [-1.0, -0.3, 0.0, 0.4, 1.0] {
        let inp = HamiltonianInputs::at_factor(&spec, v, vec![0.0], 0.0);
        let s = saddle(&spec, &inp).unwrap();
        assert_eq!(s.x_b_star()[0], 0.02);
        let m = s.x_m_star()[0].moments();
        assert!((m.m1 - 0.3).abs() < 1e-12 && (m.m2 - 0.09).abs() < 1e-12);
        assert!((brute_force_value(&spec, &inp) - s.h_star).abs() < 1e-12);
    }
}

#[test]
fn moment_body_contains_two_atom_moments() {
    let (spec, _) = random_instance(5);
    let body = moment_body(&spec.u_sigma[0]);
    let mut g = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let m = random_measure(&spec, &mut g).moments();
        assert!(m.satisfies_jensen());
        assert!(body.contains(m));
    }
}

#[test]
fn dirac_reduction_on_enumeration() {
    let (spec, inp) = random_instance(9);
    let mut g = ChaCha8Rng::seed_from_u64(9);
    let pts = spec.u_sigma[0].points();
    for _ in 0..20 {
        let pi = [uniform_in(spec.pi_box[0], &mut g)];
        let b = [uniform_in(spec.u_b[0], &mut g)];
        let dirac_min = pts
            .iter()
            .map(|&u| eval_h_dirac(&spec, &inp, &pi, &b, &[u]).unwrap())
            .fold(f64::INFINITY, f64::min);
        let mut pair_min = f64::INFINITY;
        for j in 0..pts.len() {
            for l in j..pts.len() {
                for w in [0.0, 0.3, 0.7, 1.0] {
                    let m = TwoPointMeasure::new(pts[j], pts[l], w);
                    pair_min = pair_min.min(eval_h_randomized(&spec, &inp, &pi, &b, &[m]).unwrap());
                }
            }
        }
        assert_eq!(pair_min, dirac_min);
    }
}

fn with_u_b(spec: &MarketSpec, ub: Interval) -> MarketSpec {
    let mut s = spec.clone();
    s.u_b = vec![ub];
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn randomized_is_the_expectation_of_dirac(seed in 0u64..10_000, draw in 0u64..u64::MAX) {
        let (spec, inp) = random_instance(seed);
        let mut g = ChaCha8Rng::seed_from_u64(draw);
        let pi = [uniform_in(spec.pi_box[0], &mut g)];
        let b = [uniform_in(spec.u_b[0], &mut g)];
        let m = random_measure(&spec, &mut g);
        let h = eval_h_randomized(&spec, &inp, &pi, &b, &[m]).unwrap();
        let lo = eval_h_dirac(&spec, &inp, &pi, &b, &[m.u_lo]).unwrap();
        let hi = eval_h_dirac(&spec, &inp, &pi, &b, &[m.u_hi]).unwrap();
        prop_assert!((h - (m.w * lo + (1.0 - m.w) * hi)).abs() <= 1e-12);
    }

    #[test]
    fn mixing_measures_mixes_values(seed in 0u64..10_000, draw in 0u64..u64::MAX, theta in 0.0f64..=1.0) {
        let (spec, inp) = random_instance(seed);
        let mut g = ChaCha8Rng::seed_from_u64(draw);
        let pi = [uniform_in(spec.pi_box[0], &mut g)];
        let b = [uniform_in(spec.u_b[0], &mut g)];
        let (p, q) = (random_measure(&spec, &mut g), random_measure(&spec, &mut g));
        let (mp, mq) = (p.moments(), q.moments());
        let mut mix = mp;
        mix.m1 = theta * mp.m1 + (1.0 - theta) * mq.m1;
        mix.m2 = theta * mp.m2 + (1.0 - theta) * mq.m2;
        let h = eval_h_moments(&spec, &inp, &pi, &b, &[mix]);
        let hp = eval_h_randomized(&spec, &inp, &pi, &b, &[p]).unwrap();
        let hq = eval_h_randomized(&spec, &inp, &pi, &b, &[q]).unwrap();
        prop_assert!((h - (theta * hp + (1.0 - theta) * hq)).abs() <= 1e-12);
    }

    #[test]
    fn plugged_equals_hamiltonian_at_best_response(seed in 0u64..10_000, draw in 0u64..u64::MAX) {
        let (spec, inp) = random_instance(seed);
        let mut g = ChaCha8Rng::seed_from_u64(draw);
        let b = [uniform_in(spec.u_b[0], &mut g)];
        let m = [random_measure(&spec, &mut g)];
        let plugged = eval_h_plugged(&spec, &inp, &b, &m).unwrap();
        let pi = best_response_pi(&spec, &inp, &b, &m).unwrap();
        prop_assert!(spec.pi_box[0].contains(pi[0]));
        let at_best = eval_h_randomized(&spec, &inp, &pi, &b, &m).unwrap();
        prop_assert!((plugged - at_best).abs() <= 1e-10 * (1.0 + plugged.abs()));
        for _ in 0..10 {
            let other = [uniform_in(spec.pi_box[0], &mut g)];
            prop_assert!(eval_h_randomized(&spec, &inp, &other, &b, &m).unwrap() <= plugged + 1e-14);
        }
    }

    #[test]
    fn plugged_matches_distance_form(
        kappa in 0.05f64..0.95,
        lo in -3.0f64..0.0,
        width in 0.0f64..4.0,
        num in -0.5f64..0.5,
        s in 1e-3f64..0.5,
    ) {
        let spec = presets::singleton(0.0, 0.0, 0.2, 0.0, kappa, Interval::new(lo, lo + width));
        let inp = HamiltonianInputs::new(vec![0.0], 0.0, vec![0.0]);
        // With r = 0, z = 0 and σ̄ = 0 the numerator is the drift and s is σ².
        let mut spec = spec;
        spec.u_b = vec![Interval::point(num)];
        spec.u_sigma = vec![UGrid::from_points(vec![s.sqrt()])];
        let m = [TwoPointMeasure::dirac(s.sqrt())];
        let direct = eval_h_plugged(&spec, &inp, &[num], &m).unwrap();
        let dist = plugged_distance_form(kappa, spec.pi_box[0], num, m[0].moments().m2);
        prop_assert!((direct - dist).abs() <= 1e-10 * (1.0 + direct.abs()));
    }

    #[test]
    fn upper_chord_matches_exhaustive(seed in 0u64..10_000) {
        let (spec, inp) = random_instance(seed);
        let fast = saddle_with(&spec, &inp, &SaddleOptions::fast()).unwrap();
        let full = saddle_with(&spec, &inp, &SaddleOptions { pairs: PairSearch::Exhaustive, ..SaddleOptions::fast() }).unwrap();
        prop_assert!((fast.h_star - full.h_star).abs() <= 1e-10 * (1.0 + fast.h_star.abs()));
    }

    #[test]
    fn value_is_monotone_in_the_sets(seed in 0u64..10_000, grow in 0.0f64..0.05, widen in 0.0f64..1.0) {
        let (spec, inp) = random_instance(seed);
        let base = saddle_with(&spec, &inp, &SaddleOptions::fast()).unwrap().h_star;
        let ub = spec.u_b[0];
        let more_drift = with_u_b(&spec, Interval::new(ub.lo - grow, ub.hi + grow));
        let h_b = saddle_with(&more_drift, &inp, &SaddleOptions::fast()).unwrap().h_star;
        prop_assert!(h_b <= base + 1e-12 * (1.0 + base.abs()));
        let mut more_pi = spec.clone();
        let bx = spec.pi_box[0];
        more_pi.pi_box = vec![Interval::new(bx.lo - widen, bx.hi + widen)];
        let h_pi = saddle_with(&more_pi, &inp, &SaddleOptions::fast()).unwrap().h_star;
        prop_assert!(h_pi >= base - 1e-12 * (1.0 + base.abs()));
        let mut more_sigma = spec.clone();
        let mut pts = spec.u_sigma[0].points().to_vec();
        pts.push(spec.u_sigma[0].max() + grow);
        pts.push(0.5 * spec.u_sigma[0].min());
        more_sigma.u_sigma = vec![UGrid::from_points(pts)];
        let h_s = saddle_with(&more_sigma, &inp, &SaddleOptions::fast()).unwrap().h_star;
        prop_assert!(h_s <= base + 1e-12 * (1.0 + base.abs()));
    }

    #[test]
    fn singleton_sets_reduce_to_dirac(
        r in 0.0f64..0.05,
        b in 0.0f64..0.1,
        sigma in 0.05f64..0.5,
        sigma_bar in 0.0f64..0.2,
        kappa in 0.1f64..0.9,
        z in -0.5f64..0.5,
        zb in -0.2f64..0.2,
    ) {
        let spec = presets::singleton(r, b, sigma, sigma_bar, kappa, Interval::new(-2.0, 2.0));
        let inp = HamiltonianInputs::new(vec![z], zb, vec![sigma_bar]);
        let s = saddle(&spec, &inp).unwrap();
        let pi = s.x_pi_star();
        prop_assert_eq!(s.x_b_star()[0], b);
        prop_assert!(s.x_m_star()[0].is_degenerate());
        let dirac = eval_h_dirac(&spec, &inp, &pi, &[b], &[sigma]).unwrap();
        prop_assert!((s.h_star - dirac).abs() <= 1e-12 * (1.0 + dirac.abs()));
    }

    #[test]
    fn saddle_inequalities_hold(seed in 0u64..10_000, draw in 0u64..u64::MAX) {
        let (spec, inp) = random_instance(seed);
        let s = saddle(&spec, &inp).unwrap();
        let (pi, b, m) = (s.x_pi_star(), s.x_b_star(), s.x_m_star());
        let mm = m[0].moments();
        prop_assert!(mm.m1 <= mm.m2.sqrt() * (1.0 + 1e-15));
        let plugged = eval_h_plugged(&spec, &inp, &b, &m).unwrap();
        prop_assert!((plugged - s.h_star).abs() <= 1e-12 * (1.0 + s.h_star.abs()));
        let mut g = ChaCha8Rng::seed_from_u64(draw);
        for _ in 0..20 {
            let dev_pi = [uniform_in(spec.pi_box[0], &mut g)];
            prop_assert!(eval_h_randomized(&spec, &inp, &dev_pi, &b, &m).unwrap() <= s.h_star + 1e-8);
            let dev_b = [uniform_in(spec.u_b[0], &mut g)];
            let dev_m = [random_measure(&spec, &mut g)];
            prop_assert!(eval_h_randomized(&spec, &inp, &pi, &dev_b, &dev_m).unwrap() >= s.h_star - 1e-8);
        }
    }
}
