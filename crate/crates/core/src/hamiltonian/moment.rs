use serde::{Deserialize, Serialize};

use crate::model_config::UGrid;

/// First two moments of a probability measure on a volatility grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentPoint {
    pub m1: f64,
    pub m2: f64,
}

impl MomentPoint {
    pub fn dirac(u: f64) -> Self {
        Self { m1: u, m2: u * u }
    }

    /// `m1 ≥ 0` and `m1² ≤ m2`, up to rounding.
    pub fn satisfies_jensen(&self) -> bool {
        self.m1 >= 0.0 && self.m1 * self.m1 <= self.m2 * (1.0 + 4.0 * f64::EPSILON)
    }
}

/// A measure with at most two atoms, `w·δ(u_lo) + (1 − w)·δ(u_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointMeasure {
    pub u_lo: f64,
    pub u_hi: f64,
    pub w: f64,
}

impl TwoPointMeasure {
    pub fn dirac(u: f64) -> Self {
        Self {
            u_lo: u,
            u_hi: u,
            w: 1.0,
        }
    }

    /// Builds the measure, collapsing to a Dirac mass when one weight vanishes.
    pub fn new(u_lo: f64, u_hi: f64, w: f64) -> Self {
        if u_lo == u_hi || w >= 1.0 {
            Self::dirac(u_lo)
        } else if w <= 0.0 {
            Self::dirac(u_hi)
        } else {
            Self { u_lo, u_hi, w }
        }
    }

    pub fn moments(&self) -> MomentPoint {
        let v = 1.0 - self.w;
        MomentPoint {
            m1: self.w * self.u_lo + v * self.u_hi,
            m2: self.w * self.u_lo * self.u_lo + v * self.u_hi * self.u_hi,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.u_lo == self.u_hi || self.w == 0.0 || self.w == 1.0
    }

    pub fn atoms_in(&self, grid: &UGrid) -> bool {
        self.u_lo <= self.u_hi && (0.0..=1.0).contains(&self.w) && grid.contains(self.u_lo) && grid.contains(self.u_hi)
    }
}

/// Convex hull of `{(u, u²) : u in grid}`.
///
/// The points lie on a convex parabola, so every grid point is a vertex: the
/// lower boundary is the polyline through consecutive points and the upper
/// boundary is the chord from the smallest to the largest point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentBody {
    pub vertices: Vec<MomentPoint>,
}

impl MomentBody {
    pub fn lower_m2(&self, m1: f64) -> Option<f64> {
        let v = &self.vertices;
        if m1 < v[0].m1 || m1 > v[v.len() - 1].m1 {
            return None;
        }
        let k = v.partition_point(|p| p.m1 < m1);
        if k == 0 || v[k].m1 == m1 {
            return Some(v[k].m2);
        }
        let (a, b) = (v[k - 1], v[k]);
        let t = (m1 - a.m1) / (b.m1 - a.m1);
        Some(a.m2 + t * (b.m2 - a.m2))
    }

    pub fn upper_m2(&self, m1: f64) -> Option<f64> {
        let v = &self.vertices;
        let (a, b) = (v[0], v[v.len() - 1]);
        if m1 < a.m1 || m1 > b.m1 {
            return None;
        }
        if a.m1 == b.m1 {
            return Some(a.m2);
        }
        let t = (m1 - a.m1) / (b.m1 - a.m1);
        Some(a.m2 + t * (b.m2 - a.m2))
    }

    /// Membership with a relative slack for rounding in the caller's moments.
    pub fn contains(&self, p: MomentPoint) -> bool {
        let tol = 1e-12 * (1.0 + p.m2.abs());
        match (self.lower_m2(p.m1), self.upper_m2(p.m1)) {
            (Some(lo), Some(hi)) => lo - tol <= p.m2 && p.m2 <= hi + tol,
            _ => false,
        }
    }
}

pub fn moment_body(grid: &UGrid) -> MomentBody {
    MomentBody {
        vertices: grid.points().iter().map(|&u| MomentPoint::dirac(u)).collect(),
    }
}
