//! Binomial masses and the absolute-majority policy table.
//!
//! A parent whose `m` children contain exactly `k` agents in state B adopts B
//! with probability
//!
//! ```text
//! f_m(k) = P[A_k > B_{m-k}] + 1/2 P[A_k = B_{m-k}]
//! ```
//!
//! where `A_k ~ Binomial(k, p_B)` counts successful B experiments and
//! `B_{m-k} ~ Binomial(m-k, p_R)` counts successful R experiments. The half
//! weight on ties is the fair coin.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Largest branching factor accepted anywhere in the crate.
pub const MAX_M: usize = 64;

/// Branching factor and the two experiment success probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    m: usize,
    p_b: f64,
    p_r: f64,
}

impl ModelParams {
    pub fn new(m: usize, p_b: f64, p_r: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParams(format!("m = {m} must be at least 2")));
        }
        if m > MAX_M {
            return Err(Error::InvalidParams(format!(
                "m = {m} exceeds the supported maximum of {MAX_M}"
            )));
        }
        check_probability("p_B", p_b)?;
        check_probability("p_R", p_r)?;
        Ok(Self { m, p_b, p_r })
    }

    /// The equal-technology regime `p_B = p_R = p`.
    pub fn symmetric(m: usize, p: f64) -> Result<Self> {
        Self::new(m, p, p)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p_b(&self) -> f64 {
        self.p_b
    }

    pub fn p_r(&self) -> f64 {
        self.p_r
    }

    pub fn is_symmetric(&self) -> bool {
        self.p_b == self.p_r
    }
}

/// Probability mass function of `Binomial(n, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialPmf {
    n: usize,
    p: f64,
    mass: Vec<f64>,
}

impl BinomialPmf {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }
}

/// Exact binomial masses via the multiplicative recurrence.
pub fn binomial_pmf(n: usize, p: f64) -> Result<BinomialPmf> {
    check_probability("p", p)?;
    Ok(BinomialPmf {
        n,
        p,
        mass: binomial_mass(n, p),
    })
}

/// Unchecked kernel shared with the Bernstein evaluation; `p` must lie in [0, 1].
pub(crate) fn binomial_mass(n: usize, p: f64) -> Vec<f64> {
    let mut mass = vec![0.0; n + 1];
    if p == 0.0 {
        mass[0] = 1.0;
        return mass;
    }
    if p == 1.0 {
        mass[n] = 1.0;
        return mass;
    }
    // Run the recurrence from the heavier tail so the seed term cannot underflow.
    let (q, flip) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    let ratio = q / (1.0 - q);
    let mut term = (1.0 - q).powi(n as i32);
    for k in 0..=n {
        let idx = if flip { n - k } else { k };
        mass[idx] = term;
        if k < n {
            term *= (n - k) as f64 / (k + 1) as f64 * ratio;
        }
    }
    mass
}

/// `f_m(k)` for the given parameters.
pub fn policy_value(params: &ModelParams, k: usize) -> Result<f64> {
    let m = params.m();
    if k > m {
        return Err(Error::out_of_range("k", k as f64, format!("0..={m}")));
    }
    let successes_b = binomial_mass(k, params.p_b());
    let successes_r = binomial_mass(m - k, params.p_r());

    let mut win = 0.0;
    let mut tie = 0.0;
    for (i, &a) in successes_b.iter().enumerate() {
        for (j, &b) in successes_r.iter().enumerate() {
            if i > j {
                win += a * b;
            } else if i == j {
                tie += a * b;
            }
        }
    }
    Ok((win + 0.5 * tie).clamp(0.0, 1.0))
}

/// The full vector `f_m(0..=m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    m: usize,
    values: Vec<f64>,
}

impl PolicyTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }
}

pub fn policy_table(params: &ModelParams) -> PolicyTable {
    let values = (0..=params.m())
        .map(|k| policy_value(params, k).expect("k within 0..=m"))
        .collect();
    PolicyTable {
        m: params.m(),
        values,
    }
}
