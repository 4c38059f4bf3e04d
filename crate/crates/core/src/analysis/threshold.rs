use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmap::g_prime_at_half;
use crate::policy::{ModelParams, MAX_M};

const BRACKET: (f64, f64) = (1e-6, 1.0 - 1e-6);
/// Bisection always runs at least this far, whatever the caller asks for.
const MIN_WIDTH: f64 = 1e-11;
pub const MIN_TOL: f64 = 1e-12;

/// The critical `p(m)` where `g'_m(1/2) = 1` along `p_B = p_R = p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub m: usize,
    pub p_threshold: f64,
    pub bracket_width: f64,
    pub evaluations: usize,
    /// For m = 2 the slope `2p - p^2` reaches 1 only at the boundary `p = 1`.
    pub boundary: bool,
}

/// Bisection on `p -> g'_m(1/2) - 1`, which is strictly increasing in `p`.
pub fn solve_threshold(m: usize, tol: f64) -> Result<ThresholdResult> {
    if !(2..=MAX_M).contains(&m) {
        return Err(Error::InvalidParams(format!("m = {m} outside 2..={MAX_M}")));
    }
    if tol.is_nan() || tol < MIN_TOL {
        return Err(Error::out_of_range("tol", tol, format!(">= {MIN_TOL:e}")));
    }
    if m == 2 {
        return Ok(ThresholdResult {
            m,
            p_threshold: 1.0,
            bracket_width: 0.0,
            evaluations: 0,
            boundary: true,
        });
    }

    let excess = |p: f64| -> Result<f64> { Ok(g_prime_at_half(&ModelParams::symmetric(m, p)?)? - 1.0) };
    let (mut lo, mut hi) = BRACKET;
    let mut evaluations = 2;
    if excess(lo)? >= 0.0 || excess(hi)? <= 0.0 {
        return Err(Error::Solver {
            message: format!("slope at 1/2 does not cross 1 inside the bracket for m = {m}"),
            lo,
            hi,
        });
    }
    let target = tol.min(MIN_WIDTH);
    while hi - lo > target {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        let e = excess(mid)?;
        if e == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if e < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        m,
        p_threshold: 0.5 * (lo + hi),
        bracket_width: hi - lo,
        evaluations,
        boundary: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m3_matches_cubic_root() {
        let r = solve_threshold(3, 1e-12).unwrap();
        let exact = (2.0 + 2f64.powf(1.0 / 3.0) - 2f64.powf(2.0 / 3.0)) / 3.0;
        assert!((r.p_threshold - exact).abs() < 1e-10);
        assert!(!r.boundary);
        assert!(r.bracket_width <= 1e-12);
    }

    #[test]
    fn m4_matches_quartic_root() {
        let r = solve_threshold(4, 1e-12).unwrap();
        assert!((r.p_threshold - 0.42842).abs() < 1e-4);
        // the quartic 4p - 6p^2 + 6p^3 - 5p^4/2 - 1 vanishes there
        let p = r.p_threshold;
        assert!((4.0 * p - 6.0 * p * p + 6.0 * p.powi(3) - 2.5 * p.powi(4) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn m8_regression_baseline() {
        let r = solve_threshold(8, 1e-12).unwrap();
        assert!(r.p_threshold > 0.0 && r.p_threshold < 0.42842);
        assert!((r.p_threshold - 0.222_499_693_780_762_56).abs() < 1e-9);
    }

    #[test]
    fn slope_is_one_at_threshold() {
        for m in 3..=20 {
            let r = solve_threshold(m, 1e-12).unwrap();
            let s = g_prime_at_half(&ModelParams::symmetric(m, r.p_threshold).unwrap()).unwrap();
            assert!((s - 1.0).abs() <= 1e-9, "m={m}");
        }
    }

    #[test]
    fn m2_is_a_boundary_report() {
        let r = solve_threshold(2, 1e-12).unwrap();
        assert!(r.boundary);
        assert_eq!(r.p_threshold, 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_threshold(1, 1e-12).is_err());
        assert!(solve_threshold(65, 1e-12).is_err());
        assert!(solve_threshold(3, 1e-13).is_err());
    }
}
