use robust_forward::consumption_ode::{solve_g, ConsumptionCurve, GParams};
use robust_forward::model_config::{presets, Interval, LambdaSpec, MarketSpec};
use robust_forward::opportunity_pde::{solve_pde, OpportunitySolution, PdeOptions};
use robust_forward::par::Execution;
use robust_forward::simulator::{simulate, verify_martingale, AdversePolicy, Market, Scenario, SimConfig, Verdict};
use robust_forward::Error;

fn setup(spec: &MarketSpec, grid_n: usize) -> (OpportunitySolution, ConsumptionCurve) {
    let sol = solve_pde(spec, &PdeOptions::with_grid(grid_n, 1e-12)).unwrap();
    let y0 = sol.y_at(0.0);
    let curve = solve_g(|_| y0, &GParams::from(spec), 1.0, 1e-3).unwrap();
    (sol, curve)
}

fn cfg(scenario: Scenario, n_paths: usize) -> SimConfig {
    SimConfig {
        n_paths,
        dt: 1e-2,
        scenario,
        suboptimal_scale: 0.25,
        ..SimConfig::default()
    }
}

#[test]
fn ou_drift_signs() {
    let spec = presets::ou();
    let (sol, curve) = setup(&spec, 101);
    let (mart, _) = verify_martingale(&spec, &sol, &curve, &cfg(Scenario::Martingale, 6000)).unwrap();
    assert!(mart.drift.abs() < 3.0 * mart.stderr, "{mart:?}");
    let (sup, _) = verify_martingale(&spec, &sol, &curve, &cfg(Scenario::Supermartingale, 6000)).unwrap();
    assert_eq!(sup.verdict, Verdict::Pass, "{sup:?}");
    assert!(sup.drift < 0.0);
    let (sub, _) = verify_martingale(&spec, &sol, &curve, &cfg(Scenario::Submartingale, 6000)).unwrap();
    assert_eq!(sub.verdict, Verdict::Pass, "{sub:?}");
    assert!(sub.drift > 0.0);
}

#[test]
fn quadratic_variation_matches_the_model() {
    let spec = presets::ou();
    let (sol, curve) = setup(&spec, 101);
    let b = simulate(&spec, &sol, &curve, &cfg(Scenario::Martingale, 2000)).unwrap();
    assert!((b.qv_b_ratio - 1.0).abs() < 0.02, "ratio {}", b.qv_b_ratio);
    assert!(!b.domain_warning);
}

#[test]
fn seeds_sequential_and_parallel() {
    let spec = presets::ou();
    let (sol, curve) = setup(&spec, 101);
    let base = cfg(Scenario::Submartingale, 300);
    let a = simulate(&spec, &sol, &curve, &base).unwrap();
    let b = simulate(&spec, &sol, &curve, &base).unwrap();
    assert_eq!(a, b);
    let seq = simulate(
        &spec,
        &sol,
        &curve,
        &SimConfig {
            execution: Execution::Sequential,
            ..base.clone()
        },
    )
    .unwrap();
    assert_eq!(a, seq);
    let other = simulate(&spec, &sol, &curve, &SimConfig { seed: 43, ..base }).unwrap();
    assert_ne!(a.mean_r_t, other.mean_r_t);
}

#[test]
fn auxiliary_and_physical_agree_on_dirac_worst_case() {
    let spec = presets::ou();
    let (sol, curve) = setup(&spec, 101);
    let sigma = spec.u_sigma[0].points()[20];
    for scenario in [Scenario::Martingale, Scenario::Submartingale] {
        let aux = SimConfig {
            adverse: AdversePolicy::Constant {
                b: vec![0.05],
                sigma: vec![sigma],
            },
            ..cfg(scenario, 200)
        };
        let phys = SimConfig {
            market: Market::Physical,
            ..aux.clone()
        };
        let a = simulate(&spec, &sol, &curve, &aux).unwrap();
        let p = simulate(&spec, &sol, &curve, &phys).unwrap();
        assert_eq!(a.paths, p.paths);
    }
}

#[test]
fn physical_market_rejects_mixtures() {
    let spec = presets::ou();
    let (sol, curve) = setup(&spec, 101);
    let sim = SimConfig {
        market: Market::Physical,
        adverse: AdversePolicy::TwoPoint {
            b: vec![0.05],
            measures: vec![robust_forward::hamiltonian::TwoPointMeasure::new(0.1, 0.3, 0.5)],
        },
        ..cfg(Scenario::Submartingale, 200)
    };
    assert!(matches!(
        simulate(&spec, &sol, &curve, &sim),
        Err(Error::Validation { .. })
    ));
}

#[test]
fn adverse_policy_must_lie_in_the_sets() {
    let spec = presets::ou();
    let (sol, curve) = setup(&spec, 101);
    let sim = SimConfig {
        adverse: AdversePolicy::Constant {
            b: vec![0.1],
            sigma: vec![spec.u_sigma[0].max()],
        },
        ..cfg(Scenario::Submartingale, 200)
    };
    assert!(simulate(&spec, &sol, &curve, &sim).is_err());
}

#[test]
fn inadmissible_curve_is_refused() {
    let mut spec = presets::singleton(0.0, 0.04, 0.2, 0.0, 0.5, Interval::new(-1.0, 1.0));
    spec.lambda = LambdaSpec::Constant { value: 5.0 };
    let sol = solve_pde(&spec, &PdeOptions::with_grid(51, 1e-12)).unwrap();
    let curve = solve_g(|_| sol.y[0], &GParams::from(&spec), 1.0, 1e-3).unwrap();
    let err = simulate(&spec, &sol, &curve, &cfg(Scenario::Martingale, 200)).unwrap_err();
    assert!(matches!(err, Error::InadmissibleLambda { .. }), "{err}");
}
