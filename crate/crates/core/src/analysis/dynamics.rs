use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::gmap::UpdateMap;
use crate::policy::ModelParams;

use super::fixed_points::{find_fixed_points, DEFAULT_TOL};

pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

const MONOTONE_SCAN: usize = 1_000;
const AT_FIXED_POINT: f64 = 1e-12;

/// The orbit `pi_0, g(pi_0), g(g(pi_0)), ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub pi_0: f64,
    pub values: Vec<f64>,
    pub converged: bool,
    /// Nearest fixed point, when the orbit settled within `100 * conv_tol` of one.
    pub limit: Option<f64>,
}

impl Trajectory {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory holds pi_0")
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Iterate `g_m` from `pi_0` until successive values differ by less than
/// `conv_tol` or `max_steps` updates have been applied.
pub fn iterate_dynamics(
    params: &ModelParams,
    pi_0: f64,
    max_steps: usize,
    conv_tol: f64,
) -> Result<Trajectory> {
    check_probability("pi_0", pi_0)?;
    if conv_tol.is_nan() || conv_tol <= 0.0 {
        return Err(Error::out_of_range("conv_tol", conv_tol, "(0, inf)"));
    }
    let map = UpdateMap::new(*params);
    let mut values = vec![pi_0];
    let mut x = pi_0;
    let mut converged = false;
    for _ in 0..max_steps {
        let next = map.eval_unchecked(x);
        values.push(next);
        let step = (next - x).abs();
        x = next;
        if step < conv_tol {
            converged = true;
            break;
        }
    }

    let limit = if !converged {
        None
    } else {
        match find_fixed_points(params, DEFAULT_TOL) {
            Ok(set) => set
                .nearest(x)
                .filter(|fp| (fp.value - x).abs() <= 100.0 * conv_tol)
                .map(|fp| fp.value),
            Err(Error::EveryPointFixed) => Some(x),
            Err(e) => return Err(e),
        }
    };

    Ok(Trajectory {
        pi_0,
        values,
        converged,
        limit,
    })
}

/// `lim pi_t` from the position of `pi_0` relative to the fixed points.
///
/// For a nondecreasing continuous map the orbit is monotone: it climbs to the
/// first fixed point above `pi_0` when `g(pi_0) > pi_0` and descends to the
/// last one below when `g(pi_0) < pi_0`. Regimes where `g` is not monotone or
/// has more than three fixed points are refused.
pub fn predict_limit(params: &ModelParams, pi_0: f64) -> Result<f64> {
    check_probability("pi_0", pi_0)?;
    let map = UpdateMap::new(*params);

    let decreasing_at = (0..=MONOTONE_SCAN)
        .map(|i| i as f64 / MONOTONE_SCAN as f64)
        .find(|&x| map.prime_unchecked(x) < -1e-12);
    if let Some(x) = decreasing_at {
        return Err(Error::UnsupportedRegime(format!(
            "g is decreasing near x = {x}; the monotone-orbit argument does not apply"
        )));
    }

    let set = match find_fixed_points(params, DEFAULT_TOL) {
        Ok(set) => set,
        Err(Error::EveryPointFixed) => return Ok(pi_0),
        Err(e) => return Err(e),
    };
    if set.len() > 3 {
        return Err(Error::UnsupportedRegime(format!(
            "{} fixed points; only up to three are covered",
            set.len()
        )));
    }
    let values = set.values();
    if let Some(&v) = values.iter().find(|&&v| (v - pi_0).abs() <= AT_FIXED_POINT) {
        return Ok(v);
    }

    let drift = map.eval_unchecked(pi_0) - pi_0;
    let target = if drift > 0.0 {
        values.iter().copied().find(|&v| v > pi_0)
    } else if drift < 0.0 {
        values.iter().rev().copied().find(|&v| v < pi_0)
    } else {
        Some(pi_0)
    };
    target.ok_or_else(|| Error::Solver {
        message: format!("no fixed point in the direction of drift from {pi_0}"),
        lo: 0.0,
        hi: 1.0,
    })
}
