//! Opportunity function `y(v)` of the one-factor model.
//!
//! Solves
//!
//! ```text
//! D(v) y'' + η(v) y' − ρ y + H*(v, y' κ(v), y' κ̄(v)) = 0,   D = ½(κ² + κ̄²)
//! ```
//!
//! on a truncated interval with zero-Neumann ends. The nonlinearity sits only
//! in the saddle value, so each sweep freezes `H*` at the current slope,
//! solves the linear tridiagonal problem and relaxes towards it.
//!
//! The convection term is centered wherever the cell Péclet number allows a
//! monotone stencil and upwinded elsewhere; `upwind_nodes` reports how often
//! the fallback fired. With `n_assets > 1` the factor loads on the first
//! asset's Brownian motion only, so `z = (y'κ, 0, …, 0)`.

mod residual;
mod tridiag;

pub use residual::{bsde_residual, reflect, ResidualConfig, ResidualStats};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{saddle_with, HamiltonianInputs, SaddleOptions};
use crate::model_config::MarketSpec;
use crate::par::{self, Execution};

pub const MIN_GRID: usize = 51;
/// Below this, `κ² + κ̄²` counts as zero.
pub const EPS_DIFFUSION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeOptions {
    pub grid_n: usize,
    pub tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub execution: Execution,
}

impl Default for PdeOptions {
    fn default() -> Self {
        Self {
            grid_n: 201,
            tol: 1e-10,
            damping: 0.5,
            max_iter: 5_000,
            execution: Execution::Parallel,
        }
    }
}

impl PdeOptions {
    pub fn with_grid(grid_n: usize, tol: f64) -> Self {
        Self {
            grid_n,
            tol,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.grid_n < MIN_GRID {
            return Err(Error::validation("grid_n", format!("need at least {MIN_GRID} nodes")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::validation("tol", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::validation("damping", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpportunitySolution {
    pub v_grid: Vec<f64>,
    pub y: Vec<f64>,
    pub y_prime: Vec<f64>,
    pub y_second: Vec<f64>,
    pub z_of_v: Vec<f64>,
    pub zbar_of_v: Vec<f64>,
    pub hstar: Vec<f64>,
    pub residual: Vec<f64>,
    pub residual_inf_norm: f64,
    pub iterations: usize,
    pub tol: f64,
    pub upwind_nodes: usize,
    /// `max_v |H*(v, 0, 0)|`, the numerator of the uniform bound on `y`.
    pub hstar_zero_max: f64,
    pub rho_discount: f64,
}

/// Linear interpolants of the nodal fields at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSample {
    pub y: f64,
    pub y_prime: f64,
    pub y_second: f64,
    pub hstar: f64,
}

impl OpportunitySolution {
    pub fn h(&self) -> f64 {
        self.v_grid[1] - self.v_grid[0]
    }

    fn locate(&self, v: f64) -> (usize, f64) {
        let n = self.v_grid.len();
        let lo = self.v_grid[0];
        let x = ((v - lo) / self.h()).clamp(0.0, (n - 1) as f64);
        let j = (x.floor() as usize).min(n - 2);
        (j, x - j as f64)
    }

    fn lerp(vals: &[f64], j: usize, t: f64) -> f64 {
        vals[j] + t * (vals[j + 1] - vals[j])
    }

    pub fn sample(&self, v: f64) -> NodeSample {
        let (j, t) = self.locate(v);
        NodeSample {
            y: Self::lerp(&self.y, j, t),
            y_prime: Self::lerp(&self.y_prime, j, t),
            y_second: Self::lerp(&self.y_second, j, t),
            hstar: Self::lerp(&self.hstar, j, t),
        }
    }

    pub fn y_at(&self, v: f64) -> f64 {
        let (j, t) = self.locate(v);
        Self::lerp(&self.y, j, t)
    }

    pub fn y_prime_at(&self, v: f64) -> f64 {
        let (j, t) = self.locate(v);
        Self::lerp(&self.y_prime, j, t)
    }

    /// Saddle inputs `(Z, Z̄)` at `v` from the interpolated slope.
    pub fn inputs_at(&self, spec: &MarketSpec, v: f64) -> HamiltonianInputs {
        let yp = self.y_prime_at(v);
        let mut z = vec![0.0; spec.n_assets];
        z[0] = yp * spec.factor.kap.eval(v);
        HamiltonianInputs::at_factor(spec, v, z, yp * spec.factor.kap_bar.eval(v))
    }

    pub fn uniform_bound(&self) -> f64 {
        self.hstar_zero_max / self.rho_discount
    }

    pub fn y_inf_norm(&self) -> f64 {
        self.y.iter().fold(0.0, |m, y| m.max(y.abs()))
    }
}

/// Saddle value at a node for the given slope.
fn node_hstar(spec: &MarketSpec, v: f64, y_prime: f64, opts: &SaddleOptions) -> Result<f64> {
    let mut z = vec![0.0; spec.n_assets];
    z[0] = y_prime * spec.factor.kap.eval(v);
    let inp = HamiltonianInputs::at_factor(spec, v, z, y_prime * spec.factor.kap_bar.eval(v));
    Ok(saddle_with(spec, &inp, opts)?.h_star)
}

/// The linear part `D y'' + η y' − ρ y` as three diagonals.
struct Operator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    upwind_nodes: usize,
}

impl Operator {
    fn build(spec: &MarketSpec, v: &[f64], h: f64) -> Result<Self> {
        let n = v.len();
        let rho = spec.rho_discount;
        let d: Vec<f64> = v.iter().map(|&x| spec.factor.diffusion(x)).collect();
        let degenerate = d.iter().filter(|&&x| x < 0.5 * EPS_DIFFUSION).count();
        if degenerate > 0 && degenerate < n {
            return Err(Error::IllPosed(format!(
                "factor diffusion vanishes on {degenerate} of {n} nodes but not everywhere"
            )));
        }
        let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut upwind_nodes = 0;
        let h2 = h * h;
        for j in 0..n {
            let dj = d[j] / h2;
            if j == 0 || j == n - 1 {
                // Ghost node mirrors the neighbour, so y' = 0 and η drops out.
                diag[j] = -2.0 * dj - rho;
                if j == 0 {
                    sup[j] = 2.0 * dj;
                } else {
                    sub[j] = 2.0 * dj;
                }
                continue;
            }
            let eta = spec.factor.eta.eval(v[j]);
            if d[j] >= 0.5 * eta.abs() * h {
                sub[j] = dj - eta / (2.0 * h);
                sup[j] = dj + eta / (2.0 * h);
                diag[j] = -2.0 * dj - rho;
            } else {
                upwind_nodes += 1;
                let a = eta.abs() / h;
                if eta > 0.0 {
                    sub[j] = dj;
                    sup[j] = dj + a;
                } else {
                    sub[j] = dj + a;
                    sup[j] = dj;
                }
                diag[j] = -2.0 * dj - a - rho;
            }
        }
        Ok(Self {
            sub,
            diag,
            sup,
            upwind_nodes,
        })
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        (0..n)
            .map(|j| {
                let mut acc = self.diag[j] * y[j];
                if j > 0 {
                    acc += self.sub[j] * y[j - 1];
                }
                if j + 1 < n {
                    acc += self.sup[j] * y[j + 1];
                }
                acc
            })
            .collect()
    }
}

fn centered_first(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|j| {
            if j == 0 || j == n - 1 {
                0.0
            } else {
                (y[j + 1] - y[j - 1]) / (2.0 * h)
            }
        })
        .collect()
}

fn centered_second(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let h2 = h * h;
    (0..n)
        .map(|j| match j {
            0 => 2.0 * (y[1] - y[0]) / h2,
            _ if j == n - 1 => 2.0 * (y[n - 2] - y[n - 1]) / h2,
            _ => (y[j - 1] - 2.0 * y[j] + y[j + 1]) / h2,
        })
        .collect()
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn solve_pde(spec: &MarketSpec, opts: &PdeOptions) -> Result<OpportunitySolution> {
    opts.check()?;
    let n = opts.grid_n;
    let dom = spec.factor.v_domain;
    let h = dom.width() / (n - 1) as f64;
    let v: Vec<f64> = (0..n)
        .map(|j| if j + 1 == n { dom.hi } else { dom.lo + h * j as f64 })
        .collect();
    let op = Operator::build(spec, &v, h)?;
    let sopts = SaddleOptions::fast();
    let hstar_at = |slopes: &[f64]| -> Result<Vec<f64>> {
        par::try_map_indexed(n, opts.execution, |j| node_hstar(spec, v[j], slopes[j], &sopts))
    };

    let h0 = hstar_at(&vec![0.0; n])?;
    let hstar_zero_max = sup_norm(&h0);
    let mut y: Vec<f64> = h0.iter().map(|x| x / spec.rho_discount).collect();
    let mut last_update = f64::INFINITY;
    let theta = opts.damping;

    for it in 0..opts.max_iter {
        let yp = centered_first(&y, h);
        let hs = hstar_at(&yp)?;
        let ly = op.apply(&y);
        let residual: Vec<f64> = ly.iter().zip(&hs).map(|(a, b)| a + b).collect();
        let res = sup_norm(&residual);
        if last_update < opts.tol && res < opts.tol {
            let ypp = centered_second(&y, h);
            let z_of_v = v.iter().zip(&yp).map(|(&x, d)| d * spec.factor.kap.eval(x)).collect();
            let zbar_of_v = v
                .iter()
                .zip(&yp)
                .map(|(&x, d)| d * spec.factor.kap_bar.eval(x))
                .collect();
            return Ok(OpportunitySolution {
                v_grid: v,
                y,
                y_prime: yp,
                y_second: ypp,
                z_of_v,
                zbar_of_v,
                hstar: hs,
                residual,
                residual_inf_norm: res,
                iterations: it,
                tol: opts.tol,
                upwind_nodes: op.upwind_nodes,
                hstar_zero_max,
                rho_discount: spec.rho_discount,
            });
        }
        let rhs: Vec<f64> = hs.iter().map(|x| -x).collect();
        let target = tridiag::solve(&op.sub, &op.diag, &op.sup, &rhs)?;
        let next: Vec<f64> = y
            .iter()
            .zip(&target)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        last_update = y.iter().zip(&next).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        if !last_update.is_finite() {
            return Err(Error::NonConvergence {
                what: "opportunity PDE fixed point",
                iterations: it + 1,
                last_change: last_update,
            });
        }
        y = next;
    }
    Err(Error::NonConvergence {
        what: "opportunity PDE fixed point",
        iterations: opts.max_iter,
        last_change: last_update,
    })
}
