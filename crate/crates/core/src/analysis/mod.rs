//! Fixed points of `g_m`, their stability, the iteration `pi_{t+1} = g_m(pi_t)`
//! and the critical `p(m)` of the equal-technology regime.

mod closed_form;
mod dynamics;
mod fixed_points;
mod threshold;

use serde::{Deserialize, Serialize};

use crate::policy::ModelParams;

pub use closed_form::m3_pb1_closed_form;
pub use dynamics::{iterate_dynamics, predict_limit, Trajectory, DEFAULT_MAX_STEPS};
pub use fixed_points::{classify_stability, find_fixed_points, DEFAULT_TOL};
pub use threshold::{solve_threshold, ThresholdResult};

/// Band around `|g'| = 1` inside which a fixed point is called neutral.
pub const STABILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attractive,
    Repulsive,
    Neutral,
}

impl Stability {
    pub fn from_slope(slope: f64) -> Self {
        let s = slope.abs();
        if s < 1.0 - STABILITY_TOL {
            Stability::Attractive
        } else if s > 1.0 + STABILITY_TOL {
            Stability::Repulsive
        } else {
            Stability::Neutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub value: f64,
    pub stability: Stability,
    /// The graph touches the diagonal here without crossing it.
    pub tangent: bool,
    /// `|g(value) - value|`
    pub residual: f64,
}

/// Fixed points in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub points: Vec<FixedPoint>,
    pub params: ModelParams,
}

impl FixedPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// The fixed point closest to `x`, if any.
    pub fn nearest(&self, x: f64) -> Option<&FixedPoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.value - x).abs().total_cmp(&(b.value - x).abs()))
    }
}
