use crate::error::{check_probability, Result};
use crate::gmap::UpdateMap;
use crate::policy::ModelParams;

use super::{FixedPoint, FixedPointSet, Stability};

/// Fixed points of `g_3` with `p_B = 1`, from the factorization
///
/// ```text
/// g_3(x) - x = (1 - x) r(x),   r(x) = a x^2 + b x + c
/// a = q^3/2 - 3q + 2,  b = -q^3 + 3q - 1,  c = q^3/2,  q = 1 - p_R
/// b^2 - 4ac = (2 p_R - 1)(p_R + 1 + sqrt 3)(p_R - (sqrt 3 - 1))
/// ```
///
/// The root 1 is always present; `r` contributes its roots in [0, 1).
pub fn m3_pb1_closed_form(p_r: f64) -> Result<FixedPointSet> {
    check_probability("p_R", p_r)?;
    let params = ModelParams::new(3, 1.0, p_r)?;
    let q = 1.0 - p_r;
    let q3 = q * q * q;
    let a = 0.5 * q3 - 3.0 * q + 2.0;
    let b = -q3 + 3.0 * q - 1.0;
    let c = 0.5 * q3;
    let sqrt3 = 3f64.sqrt();
    let disc = (2.0 * p_r - 1.0) * (p_r + 1.0 + sqrt3) * (p_r - (sqrt3 - 1.0));

    // (value, tangent)
    let mut roots: Vec<(f64, bool)> = Vec::new();
    if a == 0.0 {
        roots.push((-c / b, false));
    } else if disc == 0.0 {
        roots.push((-b / (2.0 * a), true));
    } else if disc > 0.0 {
        // cancellation-free pair
        let s = -0.5 * (b + b.signum() * disc.sqrt());
        roots.push((s / a, false));
        if s != 0.0 {
            roots.push((c / s, false));
        }
    }
    roots.retain(|&(x, _)| (0.0..1.0).contains(&x));
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));
    roots.push((1.0, false));

    let map = UpdateMap::new(params);
    let points = roots
        .into_iter()
        .map(|(value, tangent)| FixedPoint {
            value,
            stability: if tangent {
                Stability::Neutral
            } else {
                Stability::from_slope(map.prime_unchecked(value))
            },
            tangent,
            residual: (map.eval_unchecked(value) - value).abs(),
        })
        .collect();
    Ok(FixedPointSet { points, params })
}
