//! Monte Carlo paths of the factor, wealth and value process
//!
//! ```text
//! R_t = X_t^κ/κ · e^{Y_t − g_t} + ∫₀ᵗ (c_s X_s)^κ/κ · λ_s ds
//! ```
//!
//! and drift tests of its super/sub/martingale classification.
//!
//! The factor takes Euler steps driven by the randomized noise
//! `B^m = ρ^m W + √(1 − (ρ^m)²) W'` and is reflected at the domain ends. Log
//! wealth takes exact steps with coefficients frozen over each step, so
//! wealth stays positive. Policies come from the saddle at the solution nodes,
//! linearly interpolated in `v`; only the moments `(m1, m2)` of a measure
//! enter the dynamics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consumption_ode::{c_star, ConsumptionCurve, GIntegrator, GParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{saddle_with, MomentPoint, SaddleOptions, TwoPointMeasure};
use crate::model_config::{step_count, MarketSpec};
use crate::opportunity_pde::OpportunitySolution;
use crate::par::{self, normal, Execution};

/// Largest log-wealth magnitude before a path is declared blown up.
const LOG_WEALTH_CAP: f64 = 700.0;
/// Share of paths with a domain exit above which a run is flagged.
const EXIT_WARN_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Optimal strategy against the worst case.
    #[serde(rename = "optimal-vs-worst", alias = "martingale")]
    Martingale,
    /// Scaled-down strategy against the worst case.
    #[serde(rename = "suboptimal-vs-worst", alias = "supermartingale")]
    Supermartingale,
    /// Optimal strategy against an adverse policy.
    #[serde(rename = "optimal-vs-adverse", alias = "submartingale")]
    Submartingale,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal-vs-worst" | "martingale" => Ok(Self::Martingale),
            "suboptimal-vs-worst" | "supermartingale" => Ok(Self::Supermartingale),
            "optimal-vs-adverse" | "submartingale" => Ok(Self::Submartingale),
            _ => Err(Error::Usage(format!("unknown scenario {s:?}"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Martingale => "optimal-vs-worst",
            Self::Supermartingale => "suboptimal-vs-worst",
            Self::Submartingale => "optimal-vs-adverse",
        })
    }
}

/// Market coefficients played against the optimal strategy in the
/// submartingale scenario. Constant in time and in the factor.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversePolicy {
    /// Largest drift and a Dirac mass at the largest volatility.
    #[default]
    Boundary,
    Constant {
        b: Vec<f64>,
        sigma: Vec<f64>,
    },
    TwoPoint {
        b: Vec<f64>,
        measures: Vec<TwoPointMeasure>,
    },
}

impl AdversePolicy {
    fn resolve(&self, spec: &MarketSpec) -> Result<(Vec<f64>, Vec<MomentPoint>)> {
        let n = spec.n_assets;
        let (b, m): (Vec<f64>, Vec<TwoPointMeasure>) = match self {
            Self::Boundary => (
                spec.u_b.iter().map(|i| i.hi).collect(),
                spec.u_sigma.iter().map(|g| TwoPointMeasure::dirac(g.max())).collect(),
            ),
            Self::Constant { b, sigma } => (b.clone(), sigma.iter().map(|&s| TwoPointMeasure::dirac(s)).collect()),
            Self::TwoPoint { b, measures } => (b.clone(), measures.clone()),
        };
        if b.len() != n || m.len() != n {
            return Err(Error::validation("adverse", format!("need {n} entries per field")));
        }
        for i in 0..n {
            if !spec.u_b[i].contains(b[i]) {
                return Err(Error::validation(format!("adverse.b[{i}]"), "must lie in u_b"));
            }
            if !m[i].atoms_in(&spec.u_sigma[i]) {
                return Err(Error::validation(
                    format!("adverse.sigma[{i}]"),
                    "atoms must lie on the u_sigma grid",
                ));
            }
        }
        Ok((b, m.iter().map(|x| x.moments()).collect()))
    }
}

/// Which wealth equation is stepped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Market {
    /// Measure-valued volatility `√m2` and randomized factor noise.
    #[default]
    Auxiliary,
    /// Volatility is the atom of a Dirac measure; the factor noise is `B`.
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub scenario: Scenario,
    pub adverse: AdversePolicy,
    /// Multiplier on `π*` in the supermartingale scenario.
    pub suboptimal_scale: f64,
    pub x0: f64,
    /// Factor start; the domain midpoint by default.
    pub v0: Option<f64>,
    /// Tolerance on the drift, relative to `R_0`.
    pub tolerance_rel: f64,
    /// Number of leading paths whose full trajectories are kept.
    pub record_paths: usize,
    pub market: Market,
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            dt: 1e-3,
            horizon: 1.0,
            seed: 42,
            scenario: Scenario::Martingale,
            adverse: AdversePolicy::Boundary,
            suboptimal_scale: 0.5,
            x0: 1.0,
            v0: None,
            tolerance_rel: 1e-4,
            record_paths: 4,
            market: Market::Auxiliary,
            execution: Execution::Parallel,
        }
    }
}

impl SimConfig {
    fn check(&self, spec: &MarketSpec) -> Result<usize> {
        if self.n_paths < 100 {
            return Err(Error::validation("n_paths", "need at least 100 paths"));
        }
        let n = step_count(self.horizon, self.dt)?;
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(Error::validation("x0", "initial wealth must be positive"));
        }
        if !self.suboptimal_scale.is_finite() {
            return Err(Error::validation("suboptimal_scale", "must be finite"));
        }
        if let Some(v) = self.v0 {
            if !spec.factor.v_domain.contains(v) {
                return Err(Error::validation("v0", "must lie in the factor domain"));
            }
        }
        Ok(n)
    }

    fn v_start(&self, spec: &MarketSpec) -> f64 {
        let d = spec.factor.v_domain;
        self.v0.unwrap_or(0.5 * (d.lo + d.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSummary {
    pub path_id: usize,
    pub r0: f64,
    pub r_t: f64,
    pub x_t: f64,
    pub v_t: f64,
    pub exits: usize,
    /// `Σ (ΔB^m)²` over the horizon.
    pub qv_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathTrajectory {
    pub path_id: usize,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBundle {
    pub scenario: Scenario,
    pub paths: Vec<PathSummary>,
    pub trajectories: Vec<PathTrajectory>,
    pub r0: f64,
    pub mean_r_t: f64,
    pub stderr_r_t: f64,
    pub exits: usize,
    /// Share of paths reflected at least once.
    pub exit_fraction: f64,
    pub domain_warning: bool,
    /// Mean realized quadratic variation of the factor noise divided by the horizon.
    pub qv_b_ratio: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub horizon: f64,
}

/// Worst-case policy and optimal fraction at each solution node.
#[derive(Debug, Clone)]
struct PolicyTable {
    v_lo: f64,
    h: f64,
    n_assets: usize,
    /// Node-major: `[π*, b*, m1, m2]` per asset.
    rows: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct AssetPolicy {
    pi: f64,
    b: f64,
    m: MomentPoint,
}

impl PolicyTable {
    fn build(spec: &MarketSpec, sol: &OpportunitySolution, exec: Execution) -> Result<Self> {
        let n = spec.n_assets;
        let opts = SaddleOptions::fast();
        let per_node = par::try_map_indexed(sol.v_grid.len(), exec, |j| {
            let s = saddle_with(spec, &sol.inputs_at(spec, sol.v_grid[j]), &opts)?;
            let mut row = Vec::with_capacity(4 * n);
            for a in &s.assets {
                let m = a.x_m_star.moments();
                row.extend_from_slice(&[a.x_pi_star, a.x_b_star, m.m1, m.m2]);
            }
            Ok::<_, Error>(row)
        })?;
        Ok(Self {
            v_lo: sol.v_grid[0],
            h: sol.h(),
            n_assets: n,
            rows: per_node.concat(),
        })
    }

    fn eval(&self, v: f64, out: &mut [AssetPolicy]) {
        let w = 4 * self.n_assets;
        let nodes = self.rows.len() / w;
        let x = ((v - self.v_lo) / self.h).clamp(0.0, (nodes - 1) as f64);
        let j = (x.floor() as usize).min(nodes - 2);
        let t = x - j as f64;
        let (a, b) = (&self.rows[j * w..(j + 1) * w], &self.rows[(j + 1) * w..(j + 2) * w]);
        let lerp = |k: usize| a[k] + t * (b[k] - a[k]);
        for (i, o) in out.iter_mut().enumerate() {
            let k = 4 * i;
            *o = AssetPolicy {
                pi: lerp(k),
                b: lerp(k + 1),
                m: MomentPoint {
                    m1: lerp(k + 2),
                    m2: lerp(k + 3),
                },
            };
        }
    }
}

fn value_term(log_x: f64, y: f64, g: f64, kappa: f64) -> f64 {
    (kappa * log_x + y - g).exp() / kappa
}

fn consumption_rate(c: f64, log_x: f64, lambda: f64, kappa: f64) -> f64 {
    if c == 0.0 || lambda == 0.0 {
        0.0
    } else {
        (kappa * (c.ln() + log_x)).exp() / kappa * lambda
    }
}

struct PathOutput {
    summary: PathSummary,
    trajectory: Option<PathTrajectory>,
}

pub fn simulate(
    spec: &MarketSpec,
    sol: &OpportunitySolution,
    curve: &ConsumptionCurve,
    sim: &SimConfig,
) -> Result<PathBundle> {
    let n_steps = sim.check(spec)?;
    curve.ensure_admissible()?;
    if curve.t_max() + 1e-12 < sim.horizon {
        return Err(Error::validation("horizon", "extends past the consumption curve"));
    }
    let table = PolicyTable::build(spec, sol, sim.execution)?;
    let adverse = match sim.scenario {
        Scenario::Submartingale => Some(sim.adverse.resolve(spec)?),
        _ => None,
    };

    let outputs = par::try_map_indexed(sim.n_paths, sim.execution, |p| {
        run_path(spec, sol, &table, adverse.as_ref(), sim, n_steps, p)
    })?;

    let r_t: Vec<f64> = outputs.iter().map(|o| o.summary.r_t).collect();
    let (mean_r_t, stderr_r_t) = par::mean_and_stderr(&r_t);
    let qv: Vec<f64> = outputs.iter().map(|o| o.summary.qv_b).collect();
    let exited = outputs.iter().filter(|o| o.summary.exits > 0).count();
    let exit_fraction = exited as f64 / sim.n_paths as f64;
    Ok(PathBundle {
        scenario: sim.scenario,
        r0: outputs[0].summary.r0,
        mean_r_t,
        stderr_r_t,
        exits: outputs.iter().map(|o| o.summary.exits).sum(),
        exit_fraction,
        domain_warning: exit_fraction > EXIT_WARN_FRACTION,
        qv_b_ratio: par::pairwise_sum(&qv) / sim.n_paths as f64 / sim.horizon,
        trajectories: outputs.iter().filter_map(|o| o.trajectory.clone()).collect(),
        paths: outputs.into_iter().map(|o| o.summary).collect(),
        n_steps,
        dt: sim.dt,
        horizon: sim.horizon,
    })
}

fn run_path(
    spec: &MarketSpec,
    sol: &OpportunitySolution,
    table: &PolicyTable,
    adverse: Option<&(Vec<f64>, Vec<MomentPoint>)>,
    sim: &SimConfig,
    n_steps: usize,
    path: usize,
) -> Result<PathOutput> {
    let n = spec.n_assets;
    let f = &spec.factor;
    let kappa = spec.kappa_rra;
    let dt = sim.dt;
    let sq = dt.sqrt();
    let dom = f.v_domain;
    let gp = GParams::from(spec);
    let mut rng = par::path_rng(sim.seed, path);
    let mut gi = GIntegrator::new(&gp);

    let mut pol = vec![AssetPolicy::default(); n];
    let mut dw = vec![0.0; n];
    let mut dw_perp = vec![0.0; n];

    let mut v = sim.v_start(spec);
    let mut log_x = sim.x0.ln();
    let mut y = sol.y_at(v);
    let mut lam = spec.lambda_at(0.0);
    let mut g = gi.push(y, lam, dt).g;
    let mut c = c_star(y, g, lam, kappa);
    let r0 = value_term(log_x, y, g, kappa);
    let mut cons_int = 0.0;
    let mut u_prev = consumption_rate(c, log_x, lam, kappa);
    let mut exits = 0;
    let mut qv_b = 0.0;

    let mut traj = (path < sim.record_paths).then(|| PathTrajectory {
        path_id: path,
        v: Vec::with_capacity(n_steps + 1),
        x: Vec::with_capacity(n_steps + 1),
        r: Vec::with_capacity(n_steps + 1),
    });
    if let Some(tr) = traj.as_mut() {
        tr.v.push(v);
        tr.x.push(log_x.exp());
        tr.r.push(r0);
    }

    let mut r = r0;
    for k in 0..n_steps {
        table.eval(v, &mut pol);
        match sim.scenario {
            Scenario::Martingale => {}
            Scenario::Supermartingale => pol.iter_mut().for_each(|p| p.pi *= sim.suboptimal_scale),
            Scenario::Submartingale => {
                let (b, m) = adverse.expect("adverse policy resolved for this scenario");
                for i in 0..n {
                    pol[i].b = b[i];
                    pol[i].m = m[i];
                }
            }
        }

        for d in dw.iter_mut() {
            *d = sq * normal(&mut rng);
        }
        let dw_bar = sq * normal(&mut rng);
        for d in dw_perp.iter_mut() {
            *d = sq * normal(&mut rng);
        }

        let sb = f.sigma_bar_at(v);
        let mut drift = spec.r - c;
        let mut var = 0.0;
        let mut noise = 0.0;
        let mut sys = 0.0;
        let mut rho_m = spec.corr[0];
        for i in 0..n {
            let p = &pol[i];
            let (vol, rho_i) = match sim.market {
                Market::Auxiliary => (p.m.m2.sqrt(), spec.rho_eff(i, p.m.m1, p.m.m2)),
                Market::Physical => {
                    if p.m.m2 != p.m.m1 * p.m.m1 {
                        return Err(Error::validation(
                            "market",
                            "the physical market needs Dirac volatility",
                        ));
                    }
                    (p.m.m1, spec.corr[i])
                }
            };
            if i == 0 {
                rho_m = rho_i;
            }
            drift += p.pi * (p.b - spec.r);
            var += p.pi * p.pi * vol * vol;
            noise += p.pi * vol * dw[i];
            sys += p.pi * sb[i];
        }
        var += sys * sys;
        log_x += (drift - 0.5 * var) * dt + noise + sys * dw_bar;
        let t = (k + 1) as f64 * dt;
        if !(log_x.abs() < LOG_WEALTH_CAP) {
            return Err(Error::BlowUp { path, t });
        }

        let db = rho_m * dw[0] + (1.0 - rho_m * rho_m).max(0.0).sqrt() * dw_perp[0];
        qv_b += db * db;
        v += f.eta.eval(v) * dt + f.kap.eval(v) * db + f.kap_bar.eval(v) * dw_bar;
        if crate::opportunity_pde::reflect(&mut v, dom.lo, dom.hi) {
            exits += 1;
        }

        y = sol.y_at(v);
        lam = spec.lambda_at(t);
        let st = gi.push(y, lam, dt);
        if !(st.margin > 0.0) {
            return Err(Error::InadmissibleLambda { t, margin: st.margin });
        }
        g = st.g;
        c = c_star(y, g, lam, kappa);
        let u = consumption_rate(c, log_x, lam, kappa);
        cons_int += 0.5 * dt * (u_prev + u);
        u_prev = u;
        r = value_term(log_x, y, g, kappa) + cons_int;

        if let Some(tr) = traj.as_mut() {
            tr.v.push(v);
            tr.x.push(log_x.exp());
            tr.r.push(r);
        }
    }

    Ok(PathOutput {
        summary: PathSummary {
            path_id: path,
            r0,
            r_t: r,
            x_t: log_x.exp(),
            v_t: v,
            exits,
            qv_b,
        },
        trajectory: traj,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub scenario: Scenario,
    /// `(mean R_T − R_0) / horizon`.
    pub drift: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub tolerance: f64,
    pub r0: f64,
    pub mean_r_t: f64,
    pub n_paths: usize,
    pub verdict: Verdict,
    /// Path count expected to settle an inconclusive test.
    pub suggested_paths: Option<usize>,
    pub exit_fraction: f64,
    pub domain_warning: bool,
}

impl VerdictReport {
    pub fn from_bundle(b: &PathBundle, tolerance_rel: f64) -> Self {
        let drift = (b.mean_r_t - b.r0) / b.horizon;
        let se = b.stderr_r_t / b.horizon;
        let tol = tolerance_rel * b.r0.abs();
        let n = b.paths.len();
        let z = match b.scenario {
            Scenario::Martingale => 3.0,
            _ => 1.96,
        };
        let (ci_lo, ci_hi) = (drift - z * se, drift + z * se);
        let suggest = |gap: f64| {
            let k = (z * se / gap.abs().max(f64::MIN_POSITIVE)).powi(2);
            Some((n as f64 * k * 1.1).ceil().min(usize::MAX as f64) as usize)
        };
        let (verdict, suggested_paths) = match b.scenario {
            Scenario::Martingale if ci_lo <= 0.0 && 0.0 <= ci_hi => (Verdict::Pass, None),
            Scenario::Martingale => (Verdict::Fail, None),
            Scenario::Supermartingale if ci_hi <= tol => (Verdict::Pass, None),
            Scenario::Supermartingale if ci_lo > tol => (Verdict::Fail, None),
            Scenario::Supermartingale => (Verdict::Inconclusive, suggest(tol - drift)),
            Scenario::Submartingale if ci_lo >= -tol => (Verdict::Pass, None),
            Scenario::Submartingale if ci_hi < -tol => (Verdict::Fail, None),
            Scenario::Submartingale => (Verdict::Inconclusive, suggest(drift + tol)),
        };
        Self {
            scenario: b.scenario,
            drift,
            stderr: se,
            ci_lo,
            ci_hi,
            tolerance: tol,
            r0: b.r0,
            mean_r_t: b.mean_r_t,
            n_paths: n,
            verdict,
            suggested_paths,
            exit_fraction: b.exit_fraction,
            domain_warning: b.domain_warning,
        }
    }

    /// Turns an inconclusive verdict into an error; passes the rest through.
    pub fn into_result(self) -> Result<Self> {
        match self.verdict {
            Verdict::Inconclusive => Err(Error::Inconclusive {
                half_width: 0.5 * (self.ci_hi - self.ci_lo),
                suggested_paths: self.suggested_paths.unwrap_or(self.n_paths),
            }),
            _ => Ok(self),
        }
    }
}

pub fn verify_martingale(
    spec: &MarketSpec,
    sol: &OpportunitySolution,
    curve: &ConsumptionCurve,
    sim: &SimConfig,
) -> Result<(VerdictReport, PathBundle)> {
    let b = simulate(spec, sol, curve, sim)?;
    Ok((VerdictReport::from_bundle(&b, sim.tolerance_rel), b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consumption_ode::solve_g;
    use crate::model_config::{presets, Interval, LambdaSpec};
    use crate::opportunity_pde::{solve_pde, PdeOptions};

    fn singleton_setup(lambda: LambdaSpec) -> (MarketSpec, OpportunitySolution, ConsumptionCurve) {
        let mut s = presets::singleton(0.01, 0.05, 0.2, 0.0, 0.5, Interval::new(-1.0, 1.0));
        s.lambda = lambda;
        let sol = solve_pde(&s, &PdeOptions::with_grid(51, 1e-12)).unwrap();
        let y = sol.y[0];
        let curve = solve_g(|_| y, &GParams::from(&s), 1.0, 1e-3).unwrap();
        (s, sol, curve)
    }

    fn small(scenario: Scenario) -> SimConfig {
        SimConfig {
            n_paths: 200,
            dt: 1e-2,
            scenario,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_strategy_is_deterministic() {
        let (s, sol, curve) = singleton_setup(LambdaSpec::Zero);
        let cfg = SimConfig {
            suboptimal_scale: 0.0,
            x0: 2.0,
            ..small(Scenario::Supermartingale)
        };
        let b = simulate(&s, &sol, &curve, &cfg).unwrap();
        let y = sol.y[0];
        let k = s.kappa_rra;
        let tr = &b.trajectories[0];
        for (j, (x, r)) in tr.x.iter().zip(&tr.r).enumerate() {
            let t = j as f64 * cfg.dt;
            let xe = 2.0 * (s.r * t).exp();
            assert!((x / xe - 1.0).abs() < 1e-12);
            let re = xe.powf(k) / k * (y * (1.0 - s.rho_discount * t)).exp();
            assert!((r / re - 1.0).abs() < 1e-12, "t {t}: {r} vs {re}");
        }
        assert!(b.stderr_r_t < 1e-14);
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let (s, sol, curve) = singleton_setup(LambdaSpec::Zero);
        let cfg = small(Scenario::Martingale);
        let a = simulate(&s, &sol, &curve, &cfg).unwrap();
        let b = simulate(&s, &sol, &curve, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate(&s, &sol, &curve, &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.mean_r_t, c.mean_r_t);
    }

    #[test]
    fn config_checks() {
        let (s, sol, curve) = singleton_setup(LambdaSpec::Zero);
        let bad = SimConfig {
            n_paths: 50,
            ..small(Scenario::Martingale)
        };
        assert!(matches!(
            simulate(&s, &sol, &curve, &bad),
            Err(Error::Validation { .. })
        ));
        let bad = SimConfig {
            horizon: 2.0,
            ..small(Scenario::Martingale)
        };
        assert!(matches!(
            simulate(&s, &sol, &curve, &bad),
            Err(Error::Validation { .. })
        ));
        let bad = SimConfig {
            adverse: AdversePolicy::Constant {
                b: vec![0.07],
                sigma: vec![0.2],
            },
            ..small(Scenario::Submartingale)
        };
        assert!(matches!(
            simulate(&s, &sol, &curve, &bad),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn inconclusive_maps_to_error() {
        let b = PathBundle {
            scenario: Scenario::Supermartingale,
            paths: vec![],
            trajectories: vec![],
            r0: 1.0,
            mean_r_t: 1.0,
            stderr_r_t: 1e-3,
            exits: 0,
            exit_fraction: 0.0,
            domain_warning: false,
            qv_b_ratio: 1.0,
            n_steps: 1,
            dt: 1.0,
            horizon: 1.0,
        };
        let r = VerdictReport::from_bundle(&b, 1e-4);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(matches!(r.into_result(), Err(Error::Inconclusive { .. })));
    }
}
