//! Optimal and robust strategies, worst-case coefficients, and the special
//! cases with singleton uncertainty sets or without consumption.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::consumption_ode::{solve_g, ConsumptionCurve, GParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{saddle_with, HamiltonianInputs, SaddleOptions, SaddleSolution, TwoPointMeasure};
use crate::model_config::{merton_reference, MarketSpec, MertonReference};
use crate::opportunity_pde::{solve_pde, OpportunitySolution, PdeOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySlice {
    pub t: f64,
    pub v: f64,
    pub pi_star: Vec<f64>,
    pub c_star: f64,
    pub b_star: Vec<f64>,
    pub m_star: Vec<TwoPointMeasure>,
    /// Correlation of each asset noise with the randomized factor noise.
    pub rho_eff: Vec<f64>,
    pub h_star: f64,
    /// Unclamped best-response ratio at the worst case, per asset.
    pub pi_unprojected: Vec<f64>,
}

pub fn strategy_at(
    spec: &MarketSpec,
    sol: &OpportunitySolution,
    curve: &ConsumptionCurve,
    t: f64,
    v: f64,
) -> Result<StrategySlice> {
    strategy_at_with(spec, sol, curve, t, v, &SaddleOptions::default())
}

pub fn strategy_at_with(
    spec: &MarketSpec,
    sol: &OpportunitySolution,
    curve: &ConsumptionCurve,
    t: f64,
    v: f64,
    opts: &SaddleOptions,
) -> Result<StrategySlice> {
    if !spec.factor.v_domain.contains(v) {
        return Err(Error::Domain(format!("v = {v} is outside the factor domain")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t = {t} must be non-negative")));
    }
    if t > curve.t_max() * (1.0 + 1e-12) {
        curve.ensure_admissible()?;
        return Err(Error::Domain(format!(
            "t = {t} is past the consumption curve end {}",
            curve.t_max()
        )));
    }
    let inp = sol.inputs_at(spec, v);
    let sad = saddle_with(spec, &inp, opts)?;
    let y = sol.y_at(v);
    let c = crate::consumption_ode::c_star(y, curve.g_at(t), curve.lambda_at(t), spec.kappa_rra);
    Ok(slice_from_saddle(spec, &inp, &sad, t, v, c))
}

pub(crate) fn slice_from_saddle(
    spec: &MarketSpec,
    inp: &HamiltonianInputs,
    sad: &SaddleSolution,
    t: f64,
    v: f64,
    c_star: f64,
) -> StrategySlice {
    let m_star = sad.x_m_star();
    let rho_eff = m_star
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mm = m.moments();
            spec.rho_eff(i, mm.m1, mm.m2)
        })
        .collect();
    let pi_unprojected = sad
        .assets
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mm = a.x_m_star.moments();
            let sb = inp.sigma_bar_t[i];
            let num = a.x_b_star - spec.r + spec.corr[i] * inp.z[i] * mm.m1 + sb * inp.z_bar;
            num / ((1.0 - spec.kappa_rra) * (mm.m2 + sb * sb))
        })
        .collect();
    StrategySlice {
        t,
        v,
        pi_star: sad.x_pi_star(),
        c_star,
        b_star: sad.x_b_star(),
        m_star,
        rho_eff,
        h_star: sad.h_star,
        pi_unprojected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorollaryCase {
    NoConsumptionSingleton,
    ConsumptionSingleton,
    NoConsumptionRobust,
}

impl FromStr for CorollaryCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-consumption-singleton" => Ok(Self::NoConsumptionSingleton),
            "consumption-singleton" => Ok(Self::ConsumptionSingleton),
            "no-consumption-robust" => Ok(Self::NoConsumptionRobust),
            _ => Err(Error::Usage(format!("unknown case {s:?}"))),
        }
    }
}

impl fmt::Display for CorollaryCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoConsumptionSingleton => "no-consumption-singleton",
            Self::ConsumptionSingleton => "consumption-singleton",
            Self::NoConsumptionRobust => "no-consumption-robust",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryOptions {
    pub pde: PdeOptions,
    pub t_max: f64,
    pub dt: f64,
    /// Factor value the exponent is reported along; the domain midpoint by default.
    pub v0: Option<f64>,
}

impl Default for CorollaryOptions {
    fn default() -> Self {
        Self {
            pde: PdeOptions::default(),
            t_max: 1.0,
            dt: 1e-3,
            v0: None,
        }
    }
}

/// Preference parameters of one special case, along the path with the factor
/// frozen at `v0`: `U(x, t) = x^κ/κ · exp(exponent_t)` and, with consumption,
/// `U^c(C, t) = C^κ/κ · λ_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceDescription {
    pub case: CorollaryCase,
    pub v0: f64,
    pub y0: f64,
    pub h_star_zero: f64,
    /// Closed-form fraction and growth rate; singleton cases only.
    pub merton: Option<MertonReference>,
    pub t_grid: Vec<f64>,
    /// `Y − g` at each time.
    pub exponent: Vec<f64>,
    pub g: Vec<f64>,
    pub lambda: Vec<f64>,
    pub c_star: Vec<f64>,
    #[serde(skip)]
    pub solution: OpportunitySolution,
}

fn is_singleton(spec: &MarketSpec) -> bool {
    spec.u_b.iter().all(|b| b.is_singleton()) && spec.u_sigma.iter().all(|g| g.len() == 1)
}

pub fn corollary_cases(
    spec: &MarketSpec,
    case: CorollaryCase,
    opts: &CorollaryOptions,
) -> Result<PreferenceDescription> {
    let singleton = is_singleton(spec);
    let no_consumption = spec.lambda.is_zero();
    match case {
        CorollaryCase::NoConsumptionSingleton | CorollaryCase::ConsumptionSingleton if !singleton => {
            return Err(Error::ConfigMismatch(format!("{case} needs singleton u_b and u_sigma")));
        }
        CorollaryCase::NoConsumptionSingleton | CorollaryCase::NoConsumptionRobust if !no_consumption => {
            return Err(Error::ConfigMismatch(format!("{case} needs lambda form = \"zero\"")));
        }
        CorollaryCase::ConsumptionSingleton if no_consumption => {
            return Err(Error::ConfigMismatch(format!("{case} needs a nonzero lambda")));
        }
        _ => {}
    }
    let dom = spec.factor.v_domain;
    let v0 = opts.v0.unwrap_or(0.5 * (dom.lo + dom.hi));
    if !dom.contains(v0) {
        return Err(Error::validation("v0", "must lie in the factor domain"));
    }

    let sol = solve_pde(spec, &opts.pde)?;
    let y0 = sol.y_at(v0);
    let zero = HamiltonianInputs::at_factor(spec, v0, vec![0.0; spec.n_assets], 0.0);
    let h_star_zero = saddle_with(spec, &zero, &SaddleOptions::fast())?.h_star;
    let merton = if singleton && spec.n_assets == 1 {
        Some(merton_reference(
            spec,
            spec.u_b[0].lo,
            spec.u_sigma[0].min(),
            spec.factor.sigma_bar[0].eval(v0),
        )?)
    } else {
        None
    };
    let curve = solve_g(|_| y0, &GParams::from(spec), opts.t_max, opts.dt)?;
    curve.ensure_admissible()?;
    Ok(PreferenceDescription {
        case,
        v0,
        y0,
        h_star_zero,
        merton,
        exponent: curve.y.iter().zip(&curve.g).map(|(y, g)| y - g).collect(),
        t_grid: curve.t_grid,
        g: curve.g,
        lambda: curve.lambda_vals,
        c_star: curve.c_star,
        solution: sol,
    })
}
