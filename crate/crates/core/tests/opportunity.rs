use robust_forward::consumption_ode::{solve_g, GParams};
use robust_forward::model_config::{presets, Interval, ScalarFn};
use robust_forward::opportunity_pde::{solve_pde, PdeOptions};
use robust_forward::par::Execution;
use robust_forward::strategy::strategy_at;
use robust_forward::Error;

// Frozen outputs for the OU preset at 201 nodes.
const Y_AT_ZERO: f64 = 1.776_803_279_699_081_1e-3;
const Y_LEFT: f64 = 1.843_018_256_800_704_7e-3;
const Y_RIGHT: f64 = 1.708_497_917_869_005_9e-3;
const PI_AT_ZERO: f64 = 3.554_725_305_976_530_5e-1;
const H_AT_ZERO: f64 = 1.776_947_928_054_935_7e-3;

/// Explicit pseudo-time marching on the same stencil, with the OU saddle
/// value in closed form: lowest drift, all mass on the largest volatility and
/// an interior fraction.
fn explicit_ou_oracle(n: usize) -> Vec<f64> {
    let (k, rho, corr, b, s2) = (0.5, 1.0, 0.5, 0.02, 0.09);
    let (kap, kap_bar) = (0.3, 0.1);
    let h = 2.0 / (n - 1) as f64;
    let v: Vec<f64> = (0..n).map(|j| -1.0 + h * j as f64).collect();
    let d = 0.5 * (kap * kap + kap_bar * kap_bar);
    let hstar = |x: f64, yp: f64| {
        let (z, zb) = (yp * kap, yp * kap_bar);
        let sb = 0.15 + 0.05 * x.tanh();
        let num = b + corr * z * 0.3 + sb * zb;
        let s = s2 + sb * sb;
        0.5 * (z * z + zb * zb) + 0.5 * k * num * num / ((1.0 - k) * s)
    };
    let tau = 0.4 * h * h / d;
    let mut y = vec![0.0; n];
    for _ in 0..200_000 {
        let mut next = y.clone();
        let mut change: f64 = 0.0;
        for j in 0..n {
            let (l, r) = if j == 0 {
                (y[1], y[1])
            } else if j == n - 1 {
                (y[n - 2], y[n - 2])
            } else {
                (y[j - 1], y[j + 1])
            };
            let yp = if j == 0 || j == n - 1 { 0.0 } else { (r - l) / (2.0 * h) };
            let eta = -2.0 * v[j];
            let lhs = d * (l - 2.0 * y[j] + r) / (h * h) + eta * yp - rho * y[j] + hstar(v[j], yp);
            next[j] = y[j] + tau * lhs;
            change = change.max((next[j] - y[j]).abs());
        }
        y = next;
        if change < 1e-17 {
            break;
        }
    }
    y
}

#[test]
fn ou_matches_explicit_oracle() {
    let n = 101;
    let oracle = explicit_ou_oracle(n);
    let sol = solve_pde(&presets::ou(), &PdeOptions::with_grid(n, 1e-13)).unwrap();
    assert_eq!(sol.upwind_nodes, 0);
    let err = sol.y.iter().zip(&oracle).fold(0.0f64, |a, (x, o)| a.max((x - o).abs()));
    assert!(err < 1e-11, "max deviation from oracle {err:e}");
}

#[test]
fn ou_golden_values() {
    let spec = presets::ou();
    let sol = solve_pde(&spec, &PdeOptions::with_grid(201, 1e-12)).unwrap();
    assert!((sol.y_at(0.0) - Y_AT_ZERO).abs() < 1e-11);
    assert!((sol.y[0] - Y_LEFT).abs() < 1e-11);
    assert!((sol.y[200] - Y_RIGHT).abs() < 1e-11);

    let curve = solve_g(|_| sol.y_at(0.0), &GParams::from(&spec), 1.0, 1e-3).unwrap();
    let s = strategy_at(&spec, &sol, &curve, 0.0, 0.0).unwrap();
    assert!((s.pi_star[0] - PI_AT_ZERO).abs() < 1e-10);
    assert!((s.h_star - H_AT_ZERO).abs() < 1e-10);
    assert_eq!(s.b_star[0], 0.02);
    assert_eq!(s.c_star, 0.0);
}

#[test]
fn solution_respects_uniform_bound_and_is_decreasing() {
    let sol = solve_pde(&presets::ou(), &PdeOptions::with_grid(201, 1e-12)).unwrap();
    assert!(sol.y_inf_norm() <= sol.uniform_bound());
    assert!(sol.y.windows(2).all(|w| w[1] < w[0]));
    assert!(sol.residual_inf_norm < 1e-12);
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let spec = presets::ou();
    let par = solve_pde(&spec, &PdeOptions::with_grid(101, 1e-12)).unwrap();
    let seq = solve_pde(
        &spec,
        &PdeOptions {
            execution: Execution::Sequential,
            ..PdeOptions::with_grid(101, 1e-12)
        },
    )
    .unwrap();
    assert_eq!(par, seq);
}

#[test]
fn doubling_the_domain_barely_moves_the_centre() {
    let spec = presets::ou();
    let mut wide = spec.clone();
    wide.factor.v_domain = Interval::new(-2.0, 2.0);
    let a = solve_pde(&spec, &PdeOptions::with_grid(201, 1e-12)).unwrap();
    let b = solve_pde(&wide, &PdeOptions::with_grid(401, 1e-12)).unwrap();
    let rel = (a.y_at(0.0) - b.y_at(0.0)).abs() / b.y_at(0.0).abs();
    assert!(rel < 1e-3, "relative shift {rel:e}");
}

#[test]
fn heavier_discounting_shrinks_the_solution() {
    let spec = presets::ou();
    let base = solve_pde(&spec, &PdeOptions::with_grid(101, 1e-12)).unwrap();
    for rho in [1.5, 3.0] {
        let mut s = spec.clone();
        s.rho_discount = rho;
        let sol = solve_pde(&s, &PdeOptions::with_grid(101, 1e-12)).unwrap();
        assert!(sol.y.iter().zip(&base.y).all(|(a, b)| a.abs() <= b.abs()));
    }
}

#[test]
fn partial_degeneracy_is_ill_posed() {
    let mut spec = presets::ou();
    spec.factor.kap = ScalarFn::Affine { a: 0.0, b: 1.0 };
    spec.factor.kap_bar = ScalarFn::Constant { value: 0.0 };
    let err = solve_pde(&spec, &PdeOptions::with_grid(101, 1e-10)).unwrap_err();
    assert!(matches!(err, Error::IllPosed(_)), "{err}");
}
