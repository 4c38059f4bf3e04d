//! The one-step update map `g_m`.
//!
//! `g_m(x) = sum_k f_m(k) C(m,k) x^k (1-x)^(m-k)` is a Bernstein polynomial
//! whose coefficients are the policy table. The Bernstein basis at `x` is the
//! `Binomial(m, x)` mass vector, so evaluation reuses the pmf recurrence, and
//! derivatives are Bernstein forms of the forward differences of the table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{binomial_mass, policy_table, ModelParams, PolicyTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateMap {
    params: ModelParams,
    coeffs: PolicyTable,
}

fn check_x(x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::out_of_range("x", x, "[0, 1]"))
    }
}

/// Summed relative to the first coefficient so a constant table comes back
/// exactly, whatever the basis rounding.
fn bernstein(coeffs: &[f64], x: f64) -> f64 {
    let degree = coeffs.len() - 1;
    let base = coeffs[0];
    base + binomial_mass(degree, x)
        .iter()
        .zip(coeffs)
        .map(|(basis, c)| basis * (c - base))
        .sum::<f64>()
}

impl UpdateMap {
    pub fn new(params: ModelParams) -> Self {
        Self {
            coeffs: policy_table(&params),
            params,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn coeffs(&self) -> &PolicyTable {
        &self.coeffs
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_x(x).map(|x| self.eval_unchecked(x))
    }

    pub fn prime(&self, x: f64) -> Result<f64> {
        check_x(x).map(|x| self.prime_unchecked(x))
    }

    pub fn double_prime(&self, x: f64) -> Result<f64> {
        check_x(x).map(|x| self.double_prime_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        bernstein(self.coeffs.values(), x).clamp(0.0, 1.0)
    }

    /// `m * sum_l (c_{l+1} - c_l) B_{l,m-1}(x)`
    pub(crate) fn prime_unchecked(&self, x: f64) -> f64 {
        let c = self.coeffs.values();
        let diffs: Vec<f64> = c.windows(2).map(|w| w[1] - w[0]).collect();
        self.m() as f64 * bernstein(&diffs, x)
    }

    /// `m (m-1) sum_l (c_{l+2} - 2 c_{l+1} + c_l) B_{l,m-2}(x)`
    pub(crate) fn double_prime_unchecked(&self, x: f64) -> f64 {
        let m = self.m();
        let c = self.coeffs.values();
        let second: Vec<f64> = c.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        (m * (m - 1)) as f64 * bernstein(&second, x)
    }

    /// True when `g_m(x) = x` identically, i.e. the coefficients are `k/m`.
    pub fn is_identity(&self) -> bool {
        let m = self.m() as f64;
        self.coeffs
            .values()
            .iter()
            .enumerate()
            .all(|(k, &c)| (c - k as f64 / m).abs() <= 1e-14)
    }
}

pub fn g_eval(map: &UpdateMap, x: f64) -> Result<f64> {
    map.eval(x)
}

pub fn g_prime(map: &UpdateMap, x: f64) -> Result<f64> {
    map.prime(x)
}

pub fn g_double_prime(map: &UpdateMap, x: f64) -> Result<f64> {
    map.double_prime(x)
}

fn require_symmetric(params: &ModelParams) -> Result<()> {
    if params.is_symmetric() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "requires p_B = p_R (got p_B = {}, p_R = {})",
            params.p_b(),
            params.p_r()
        )))
    }
}

/// Slope of `g_m` at 1/2 in the equal-technology regime.
pub fn g_prime_at_half(params: &ModelParams) -> Result<f64> {
    require_symmetric(params)?;
    Ok(UpdateMap::new(*params).prime_unchecked(0.5))
}

/// `g'_m(1/2)` folded with the symmetry `f_m(m-l) = 1 - f_m(l)`:
///
/// ```text
/// m / 2^(m-2) * [ sum_{l <= (m-1)/2} (m-1)! (2l - m) f_m(l) / (l! (m-l)!) + C(m-1, (m-1)/2) / 2 ]
/// ```
///
/// Only the lower half of the table enters. Used as an independent check on
/// [`g_prime_at_half`].
pub fn g_prime_at_half_reduced(params: &ModelParams) -> Result<f64> {
    require_symmetric(params)?;
    let m = params.m();
    let table = policy_table(params);
    let top = (m - 1) / 2;
    let mut sum = 0.0;
    for l in 0..=top {
        // (m-1)! / (l! (m-l)!) = C(m, l) / m
        let weight = binomial(m, l) / m as f64;
        sum += weight * (2.0 * l as f64 - m as f64) * table.values()[l];
    }
    sum += 0.5 * binomial(m - 1, top);
    Ok(m as f64 / 2f64.powi(m as i32 - 2) * sum)
}

/// `g'_m(1/2)` at `p = 1`, where every lower-half coefficient vanishes:
/// `m / 2^(m-1) * C(m-1, floor((m-1)/2))`.
pub fn slope_at_half_when_certain(m: usize) -> f64 {
    m as f64 / 2f64.powi(m as i32 - 1) * binomial(m - 1, (m - 1) / 2)
}

/// Derivative in `p` of `f_m(l)` along `p_B = p_R = p`, for `l <= (m-1)/2`:
///
/// ```text
/// -(m - 2l)/2 * sum_{i=0..=l} C(m-l, i) C(l, i) p^(2i) (1-p)^(m-1-2i)
/// ```
///
/// Endpoints `p = 0, 1` use the polynomial's continuous extension.
pub fn df_dp(m: usize, l: usize, p: f64) -> Result<f64> {
    if !(2..=crate::policy::MAX_M).contains(&m) {
        return Err(Error::InvalidParams(format!(
            "m = {m} outside 2..={}",
            crate::policy::MAX_M
        )));
    }
    let top = (m - 1) / 2;
    if l > top {
        return Err(Error::out_of_range("l", l as f64, format!("0..={top}")));
    }
    crate::error::check_probability("p", p)?;
    let sum: f64 = (0..=l)
        .map(|i| {
            binomial(m - l, i)
                * binomial(l, i)
                * p.powi(2 * i as i32)
                * (1.0 - p).powi((m - 1 - 2 * i) as i32)
        })
        .sum();
    Ok(-((m - 2 * l) as f64) / 2.0 * sum)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
