//! Problem instance: market constants, uncertainty sets, the admissible
//! portfolio box and the one-factor model.
//!
//! Configs are TOML. Intervals are written as two-element arrays, scalar
//! functions of the factor as tables tagged by `kind`, and each volatility
//! grid either as an explicit point list or as `{ lo, hi, n }`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGMA_POINTS: usize = 41;
pub const DEFAULT_KAPPA_EPS: f64 = 1e-3;

/// Number of nodes used to check that factor functions are finite and have
/// the right sign on the domain.
const VALIDATION_SAMPLES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    fn check(&self, field: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::validation(field, "interval endpoints must be finite"));
        }
        if self.lo > self.hi {
            return Err(Error::validation(
                field,
                format!("lower endpoint {} exceeds upper endpoint {}", self.lo, self.hi),
            ));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Scalar coefficient of the factor model, `v ↦ f(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Constant {
        value: f64,
    },
    /// `a + b·v`
    Affine {
        a: f64,
        b: f64,
    },
    /// `theta·(mu − v)`
    MeanReverting {
        theta: f64,
        mu: f64,
    },
    /// `base + amp·tanh(scale·v)`
    Tanh {
        base: f64,
        amp: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ScalarFn {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            ScalarFn::Constant { value } => value,
            ScalarFn::Affine { a, b } => a + b * v,
            ScalarFn::MeanReverting { theta, mu } => theta * (mu - v),
            ScalarFn::Tanh { base, amp, scale } => base + amp * (scale * v).tanh(),
        }
    }

    pub fn derivative(&self, v: f64) -> f64 {
        match *self {
            ScalarFn::Constant { .. } => 0.0,
            ScalarFn::Affine { b, .. } => b,
            ScalarFn::MeanReverting { theta, .. } => -theta,
            ScalarFn::Tanh { amp, scale, .. } => {
                let t = (scale * v).tanh();
                amp * scale * (1.0 - t * t)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            ScalarFn::Constant { .. } => true,
            ScalarFn::Affine { b, .. } => b == 0.0,
            ScalarFn::MeanReverting { theta, .. } => theta == 0.0,
            ScalarFn::Tanh { amp, scale, .. } => amp == 0.0 || scale == 0.0,
        }
    }

    fn params_finite(&self) -> bool {
        match *self {
            ScalarFn::Constant { value } => value.is_finite(),
            ScalarFn::Affine { a, b } => a.is_finite() && b.is_finite(),
            ScalarFn::MeanReverting { theta, mu } => theta.is_finite() && mu.is_finite(),
            ScalarFn::Tanh { base, amp, scale } => base.is_finite() && amp.is_finite() && scale.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub v_domain: Interval,
    pub eta: ScalarFn,
    pub kap: ScalarFn,
    pub kap_bar: ScalarFn,
    pub sigma_bar: Vec<ScalarFn>,
}

impl FactorSpec {
    pub fn sigma_bar_at(&self, v: f64) -> Vec<f64> {
        self.sigma_bar.iter().map(|f| f.eval(v)).collect()
    }

    /// Half the total factor variance, `½(κ(v)² + κ̄(v)²)`.
    pub fn diffusion(&self, v: f64) -> f64 {
        let k = self.kap.eval(v);
        let kb = self.kap_bar.eval(v);
        0.5 * (k * k + kb * kb)
    }

    fn sample_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let d = self.v_domain;
        (0..VALIDATION_SAMPLES).map(move |k| d.lo + d.width() * k as f64 / (VALIDATION_SAMPLES - 1) as f64)
    }
}

/// Deterministic consumption weight `t ↦ λ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum LambdaSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `ᾱ·exp(−(ρ·D̲ + β̲)·t)`
    Discounted {
        alpha_bar: f64,
        beta_lo: f64,
        d_lo: f64,
    },
}

impl LambdaSpec {
    pub fn value(&self, t: f64, rho_discount: f64) -> f64 {
        match *self {
            LambdaSpec::Zero => 0.0,
            LambdaSpec::Constant { value } => value,
            LambdaSpec::Discounted {
                alpha_bar,
                beta_lo,
                d_lo,
            } => alpha_bar * (-(rho_discount * d_lo + beta_lo) * t).exp(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            LambdaSpec::Zero => true,
            LambdaSpec::Constant { value } => value == 0.0,
            LambdaSpec::Discounted { alpha_bar, .. } => alpha_bar == 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::validation("lambda", m));
        match *self {
            LambdaSpec::Zero => Ok(()),
            LambdaSpec::Constant { value } => {
                if !(value.is_finite() && value >= 0.0) {
                    return bad("constant value must be finite and non-negative");
                }
                Ok(())
            }
            LambdaSpec::Discounted {
                alpha_bar,
                beta_lo,
                d_lo,
            } => {
                if !(alpha_bar.is_finite() && alpha_bar >= 0.0) {
                    return bad("alpha_bar must be finite and non-negative");
                }
                if !(beta_lo.is_finite() && beta_lo > 0.0) {
                    return bad("beta_lo must be positive");
                }
                if !(d_lo.is_finite() && d_lo > 0.0) {
                    return bad("d_lo must be positive");
                }
                Ok(())
            }
        }
    }
}

/// A finite volatility grid, sorted ascending without duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridInput", into = "Vec<f64>")]
pub struct UGrid(Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum GridInput {
    Points(Vec<f64>),
    Range {
        lo: f64,
        hi: f64,
        #[serde(default = "default_points")]
        n: usize,
    },
}

fn default_points() -> usize {
    DEFAULT_SIGMA_POINTS
}

impl TryFrom<GridInput> for UGrid {
    type Error = String;

    fn try_from(g: GridInput) -> std::result::Result<Self, String> {
        match g {
            GridInput::Points(p) => Ok(UGrid::from_points(p)),
            GridInput::Range { lo, hi, n } => {
                if n == 0 {
                    return Err("grid resolution n must be positive".into());
                }
                if !(lo <= hi) {
                    return Err(format!("grid range lo {lo} exceeds hi {hi}"));
                }
                Ok(UGrid::linspace(lo, hi, n))
            }
        }
    }
}

impl From<UGrid> for Vec<f64> {
    fn from(g: UGrid) -> Self {
        g.0
    }
}

impl UGrid {
    pub fn from_points(mut p: Vec<f64>) -> Self {
        p.sort_by(f64::total_cmp);
        p.dedup();
        UGrid(p)
    }

    pub fn linspace(lo: f64, hi: f64, n: usize) -> Self {
        if n <= 1 || lo == hi {
            return UGrid(vec![lo]);
        }
        let h = (hi - lo) / (n - 1) as f64;
        let mut p: Vec<f64> = (0..n).map(|k| lo + h * k as f64).collect();
        p[n - 1] = hi;
        UGrid::from_points(p)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0[0]
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, u: f64) -> bool {
        self.0.binary_search_by(|p| p.total_cmp(&u)).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub n_assets: usize,
    pub r: f64,
    pub kappa_rra: f64,
    pub rho_discount: f64,
    pub corr: Vec<f64>,
    pub pi_box: Vec<Interval>,
    pub u_b: Vec<Interval>,
    pub u_sigma: Vec<UGrid>,
    #[serde(default)]
    pub g0: f64,
    #[serde(default = "default_kappa_eps")]
    pub kappa_eps: f64,
    pub factor: FactorSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
}

fn default_kappa_eps() -> f64 {
    DEFAULT_KAPPA_EPS
}

impl MarketSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: MarketSpec = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Canonical JSON text (keys sorted), used for config hashing.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("spec is always representable as JSON");
        v.to_string()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_assets;
        if n == 0 {
            return Err(Error::validation("n_assets", "must be positive"));
        }
        let lens = [
            ("corr", self.corr.len()),
            ("pi_box", self.pi_box.len()),
            ("u_b", self.u_b.len()),
            ("u_sigma", self.u_sigma.len()),
            ("factor.sigma_bar", self.factor.sigma_bar.len()),
        ];
        for (field, len) in lens {
            if len != n {
                return Err(Error::validation(field, format!("expected {n} entries, found {len}")));
            }
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::validation("r", "must be finite and non-negative"));
        }
        if !(self.kappa_eps > 0.0 && self.kappa_eps < 0.5) {
            return Err(Error::validation("kappa_eps", "must lie in (0, 0.5)"));
        }
        let eps = self.kappa_eps;
        if !(self.kappa_rra > eps && self.kappa_rra < 1.0 - eps) {
            return Err(Error::validation(
                "kappa_rra",
                format!("must lie strictly inside ({eps}, {})", 1.0 - eps),
            ));
        }
        if !(self.rho_discount.is_finite() && self.rho_discount > 0.0) {
            return Err(Error::validation("rho_discount", "must be positive"));
        }
        if !self.g0.is_finite() {
            return Err(Error::validation("g0", "must be finite"));
        }
        for (i, c) in self.corr.iter().enumerate() {
            if !(-1.0..=1.0).contains(c) {
                return Err(Error::validation(format!("corr[{i}]"), "must lie in [-1, 1]"));
            }
        }
        for (i, p) in self.pi_box.iter().enumerate() {
            p.check(&format!("pi_box[{i}]"))?;
            if !p.contains(0.0) {
                return Err(Error::validation(
                    format!("pi_box[{i}]"),
                    "constraint box must contain 0",
                ));
            }
        }
        for (i, b) in self.u_b.iter().enumerate() {
            b.check(&format!("u_b[{i}]"))?;
        }
        for (i, g) in self.u_sigma.iter().enumerate() {
            let field = format!("u_sigma[{i}]");
            if g.is_empty() {
                return Err(Error::validation(field, "grid must be non-empty"));
            }
            if g.points().iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
                return Err(Error::validation(field, "grid values must be finite and >= 0"));
            }
        }
        self.validate_factor()?;
        self.lambda.check()
    }

    fn validate_factor(&self) -> Result<()> {
        let f = &self.factor;
        f.v_domain.check("factor.v_domain")?;
        if f.v_domain.is_singleton() {
            return Err(Error::validation("factor.v_domain", "domain must have positive width"));
        }
        let named = [
            ("factor.eta", &f.eta),
            ("factor.kap", &f.kap),
            ("factor.kap_bar", &f.kap_bar),
        ];
        for (field, func) in named {
            if !func.params_finite() {
                return Err(Error::validation(field, "parameters must be finite"));
            }
        }
        for (i, func) in f.sigma_bar.iter().enumerate() {
            if !func.params_finite() {
                return Err(Error::validation(
                    format!("factor.sigma_bar[{i}]"),
                    "parameters must be finite",
                ));
            }
        }
        for v in f.sample_nodes() {
            for (field, func) in named {
                if !func.eval(v).is_finite() {
                    return Err(Error::validation(field, format!("not finite at v = {v}")));
                }
            }
            if f.kap.eval(v) < 0.0 {
                return Err(Error::validation("factor.kap", format!("negative at v = {v}")));
            }
            for (i, func) in f.sigma_bar.iter().enumerate() {
                let s = func.eval(v);
                let field = format!("factor.sigma_bar[{i}]");
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::validation(field, format!("must be >= 0 at v = {v}")));
                }
                if s == 0.0 && self.u_sigma[i].contains(0.0) {
                    return Err(Error::validation(
                        format!("u_sigma[{i}]"),
                        format!("grid contains 0 while sigma_bar vanishes at v = {v}; total variance can be zero"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        self.lambda.value(t, self.rho_discount)
    }

    /// `ρ^i` rescaled for a measure with moments `(m1, m2)`.
    pub fn rho_eff(&self, i: usize, m1: f64, m2: f64) -> f64 {
        if m2 > 0.0 {
            (m1 / m2.sqrt()) * self.corr[i]
        } else {
            self.corr[i]
        }
    }
}

/// Whole number of steps in `horizon`, or a validation error.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::validation("dt", "dt and horizon must be positive"));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon || n < 1.0 {
        return Err(Error::validation("horizon", "must be a whole multiple of dt"));
    }
    Ok(n as usize)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<MarketSpec> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    MarketSpec::from_toml_str(&text)
}

pub fn save_spec(spec: &MarketSpec, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, spec.to_toml_string()?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MertonReference {
    pub fraction: f64,
    pub growth_rate: f64,
    /// True when the unconstrained fraction fell outside the box and was
    /// clamped; the growth rate then carries the distance penalty.
    pub projected: bool,
}

impl MertonReference {
    /// Rejects clamped references instead of reporting them.
    pub fn unconstrained(self, bx: Interval) -> Result<Self> {
        if self.projected {
            let raw = self.fraction;
            return Err(Error::Constraint {
                fraction: raw,
                lo: bx.lo,
                hi: bx.hi,
            });
        }
        Ok(self)
    }
}

/// Constant-coefficient, no-uncertainty optimum for a single asset with drift
/// `b`, idiosyncratic volatility `sigma` and systematic volatility
/// `sigma_bar`, at `z = z̄ = 0`.
pub fn merton_reference(spec: &MarketSpec, b: f64, sigma: f64, sigma_bar: f64) -> Result<MertonReference> {
    if spec.n_assets != 1 {
        return Err(Error::ConfigMismatch(format!(
            "closed-form reference needs a single asset, spec has {}",
            spec.n_assets
        )));
    }
    let k = spec.kappa_rra;
    let r = spec.r;
    let bx = spec.pi_box[0];
    let num = b - r;
    let s = sigma * sigma + sigma_bar * sigma_bar;
    if s == 0.0 {
        if num != 0.0 {
            return Err(Error::Singular { asset: 0 });
        }
        return Ok(MertonReference {
            fraction: 0.0,
            growth_rate: k * r,
            projected: false,
        });
    }
    let q = num / ((1.0 - k) * s);
    let p = q.clamp(bx.lo, bx.hi);
    let d = q - p;
    let growth_rate = -0.5 * k * (1.0 - k) * s * d * d + 0.5 * k / (1.0 - k) * num * num / s + k * r;
    Ok(MertonReference {
        fraction: p,
        growth_rate,
        projected: p != q,
    })
}

/// Ready-made instances used by tests, benches and the README.
pub mod presets {
    use super::*;

    /// One asset, singleton uncertainty sets, constant coefficients.
    pub fn singleton(r: f64, b: f64, sigma: f64, sigma_bar: f64, kappa_rra: f64, pi_box: Interval) -> MarketSpec {
        MarketSpec {
            n_assets: 1,
            r,
            kappa_rra,
            rho_discount: 1.0,
            corr: vec![0.5],
            pi_box: vec![pi_box],
            u_b: vec![Interval::point(b)],
            u_sigma: vec![UGrid::from_points(vec![sigma])],
            g0: 0.0,
            kappa_eps: DEFAULT_KAPPA_EPS,
            factor: FactorSpec {
                v_domain: Interval::new(-1.0, 1.0),
                eta: ScalarFn::Constant { value: 0.0 },
                kap: ScalarFn::Constant { value: 0.0 },
                kap_bar: ScalarFn::Constant { value: 0.0 },
                sigma_bar: vec![ScalarFn::Constant { value: sigma_bar }],
            },
            lambda: LambdaSpec::Zero,
        }
    }

    /// One asset with a mean-reverting factor driving the systematic
    /// volatility.
    pub fn ou() -> MarketSpec {
        MarketSpec {
            n_assets: 1,
            r: 0.0,
            kappa_rra: 0.5,
            rho_discount: 1.0,
            corr: vec![0.5],
            pi_box: vec![Interval::new(0.0, 1.0)],
            u_b: vec![Interval::new(0.02, 0.06)],
            u_sigma: vec![UGrid::linspace(0.1, 0.3, DEFAULT_SIGMA_POINTS)],
            g0: 0.0,
            kappa_eps: DEFAULT_KAPPA_EPS,
            factor: FactorSpec {
                v_domain: Interval::new(-1.0, 1.0),
                eta: ScalarFn::MeanReverting { theta: 2.0, mu: 0.0 },
                kap: ScalarFn::Constant { value: 0.3 },
                kap_bar: ScalarFn::Constant { value: 0.1 },
                sigma_bar: vec![ScalarFn::Tanh {
                    base: 0.15,
                    amp: 0.05,
                    scale: 1.0,
                }],
            },
            lambda: LambdaSpec::Zero,
        }
    }
}
