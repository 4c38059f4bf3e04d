use crate::error::{Error, Result};
use crate::gmap::UpdateMap;
use crate::policy::ModelParams;

use super::{FixedPoint, FixedPointSet, Stability};

/// Default and smallest accepted residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-13;

const GRID: usize = 10_000;
/// `|g(x) - x|` below which a touching point counts as a fixed point.
const TANGENT_BAND: f64 = 1e-7;
/// `|g'(x) - 1|` below which a touching point counts as tangent.
const TANGENT_SLOPE: f64 = 1e-4;
/// Roots closer than this are one fixed point.
const MERGE_GAP: f64 = 1e-7;
const CROSSING_PROBE: f64 = 1e-5;
const MAX_POLISH: usize = 200;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    tangent: bool,
    endpoint: bool,
}

/// Every solution of `g_m(x) = x` on [0, 1].
///
/// Sign changes of `h(x) = g(x) - x` on a uniform grid are bisected to machine
/// precision. Grid-local minima of `|h|` without a sign change are polished to
/// the critical point of `h`; if the graph touches the diagonal there the
/// point is reported as tangent, and if it dips through, both crossings are
/// bisected.
pub fn find_fixed_points(params: &ModelParams, tol: f64) -> Result<FixedPointSet> {
    if tol.is_nan() || tol < DEFAULT_TOL {
        return Err(Error::out_of_range("tol", tol, format!(">= {DEFAULT_TOL:e}")));
    }
    let map = UpdateMap::new(*params);
    if map.is_identity() {
        return Err(Error::EveryPointFixed);
    }
    let h = |x: f64| map.eval_unchecked(x) - x;
    let dh = |x: f64| map.prime_unchecked(x) - 1.0;
    let ddh = |x: f64| map.double_prime_unchecked(x);

    let xs: Vec<f64> = (0..=GRID).map(|i| i as f64 / GRID as f64).collect();
    let hs: Vec<f64> = xs.iter().map(|&x| h(x)).collect();

    let mut candidates = Vec::new();
    let mut push = |value: f64, tangent: bool, endpoint: bool| {
        candidates.push(Candidate {
            value,
            tangent,
            endpoint,
        })
    };

    if hs[0].abs() <= tol {
        push(0.0, false, true);
    }
    if hs[GRID].abs() <= tol {
        push(1.0, false, true);
    }

    for i in 0..GRID {
        let (a, b) = (hs[i], hs[i + 1]);
        if i > 0 && a == 0.0 {
            push(xs[i], crosses_not(&h, xs[i]), false);
        }
        if a * b < 0.0 {
            push(bisect(&h, xs[i], xs[i + 1]), false, false);
        }
    }

    for i in 1..GRID {
        let (l, c, r) = (hs[i - 1], hs[i], hs[i + 1]);
        let same_sign = (l > 0.0 && c > 0.0 && r > 0.0) || (l < 0.0 && c < 0.0 && r < 0.0);
        if !same_sign || c.abs() > l.abs() || c.abs() > r.abs() {
            continue;
        }
        let Some(x) = critical_point(&dh, &ddh, xs[i - 1], xs[i + 1], xs[i])? else {
            continue;
        };
        let hx = h(x);
        if hx.abs() < TANGENT_BAND && dh(x).abs() < TANGENT_SLOPE {
            push(x, true, false);
        } else if hx * c < 0.0 {
            push(bisect(&h, xs[i - 1], x), false, false);
            push(bisect(&h, x, xs[i + 1]), false, false);
        }
    }

    candidates.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut groups: Vec<Vec<Candidate>> = Vec::new();
    for cand in candidates {
        match groups.last_mut() {
            Some(g) if cand.value - g.last().unwrap().value < MERGE_GAP => g.push(cand),
            _ => groups.push(vec![cand]),
        }
    }

    let mut points = Vec::with_capacity(groups.len());
    for group in groups {
        let rep = group
            .iter()
            .find(|c| c.endpoint)
            .or_else(|| group.iter().find(|c| c.tangent))
            .copied()
            .unwrap_or_else(|| {
                *group
                    .iter()
                    .min_by(|a, b| h(a.value).abs().total_cmp(&h(b.value).abs()))
                    .unwrap()
            });
        let tangent = if rep.endpoint {
            false
        } else {
            group.iter().any(|c| c.tangent) || (group.len() > 1 && crosses_not(&h, rep.value))
        };
        let residual = h(rep.value).abs();
        if !tangent && residual > tol {
            return Err(Error::Solver {
                message: format!("residual {residual:e} above tolerance {tol:e}"),
                lo: rep.value,
                hi: rep.value,
            });
        }
        points.push(FixedPoint {
            value: rep.value,
            stability: Stability::from_slope(map.prime_unchecked(rep.value)),
            tangent,
            residual,
        });
    }

    Ok(FixedPointSet {
        points,
        params: *params,
    })
}

/// Attractive, repulsive or neutral from `|g'(x_star)|`.
pub fn classify_stability(map: &UpdateMap, x_star: f64) -> Result<Stability> {
    let gx = map.eval(x_star)?;
    if (gx - x_star).abs() > super::STABILITY_TOL {
        return Err(Error::Precondition(format!(
            "{x_star} is not a fixed point (|g(x) - x| = {:e})",
            (gx - x_star).abs()
        )));
    }
    Ok(Stability::from_slope(map.prime_unchecked(x_star)))
}

/// Same nonzero sign of `h` on both sides of `x`.
fn crosses_not(h: &impl Fn(f64) -> f64, x: f64) -> bool {
    let lo = h((x - CROSSING_PROBE).max(0.0));
    let hi = h((x + CROSSING_PROBE).min(1.0));
    lo * hi > 0.0
}

/// Bisection down to adjacent floats; `h(lo)` and `h(hi)` must differ in sign.
fn bisect(h: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut h_lo = h(lo);
    let mut h_hi = h(hi);
    if h_lo == 0.0 {
        return lo;
    }
    if h_hi == 0.0 {
        return hi;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = h(mid);
        if h_mid == 0.0 {
            return mid;
        }
        if (h_mid < 0.0) == (h_lo < 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
            h_hi = h_mid;
        }
    }
    if h_lo.abs() <= h_hi.abs() {
        lo
    } else {
        hi
    }
}

/// Zero of `h'` in `[lo, hi]` by Newton steps, falling back to bisection
/// whenever a step leaves the bracket. `None` when `h'` keeps its sign.
fn critical_point(
    dh: &impl Fn(f64) -> f64,
    ddh: &impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> Result<Option<f64>> {
    let d_lo = dh(lo);
    let d_hi = dh(hi);
    if d_lo == 0.0 {
        return Ok(Some(lo));
    }
    if d_hi == 0.0 {
        return Ok(Some(hi));
    }
    if d_lo * d_hi > 0.0 {
        return Ok(None);
    }
    let lo_negative = d_lo < 0.0;
    let mut x = start;
    for _ in 0..MAX_POLISH {
        let d = dh(x);
        if d == 0.0 {
            return Ok(Some(x));
        }
        if (d < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let curvature = ddh(x);
        let newton = x - d / curvature;
        let next = if curvature != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 || hi - lo <= 1e-15 {
            return Ok(Some(next));
        }
        x = next;
    }
    Err(Error::Solver {
        message: "tangency polish did not converge".into(),
        lo,
        hi,
    })
}
