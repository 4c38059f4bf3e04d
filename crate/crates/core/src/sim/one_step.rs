use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::policy::ModelParams;

use super::stream::replication_rng;

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneStepEstimate {
    pub estimate: f64,
    pub ci_half_width: f64,
    pub samples: u64,
}

/// Fraction of `samples` independent parents that adopt B when each of their
/// `m` children is B with probability `x`, straight from the update rule.
pub fn estimate_g_one_step(params: &ModelParams, x: f64, samples: u64, seed: u64) -> Result<OneStepEstimate> {
    check_probability("x", x)?;
    if samples == 0 {
        return Err(Error::out_of_range("samples", 0.0, ">= 1"));
    }
    let chunks = samples.div_ceil(CHUNK);
    let adopted: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let trials = CHUNK.min(samples - chunk * CHUNK);
            let mut rng = replication_rng(seed, chunk);
            (0..trials)
                .filter(|_| parent_adopts_b(params, x, &mut rng))
                .count() as u64
        })
        .sum();
    let estimate = adopted as f64 / samples as f64;
    Ok(OneStepEstimate {
        estimate,
        ci_half_width: super::binomial_half_width(estimate, samples),
        samples,
    })
}

fn parent_adopts_b(params: &ModelParams, x: f64, rng: &mut impl Rng) -> bool {
    let (mut b, mut r) = (0usize, 0usize);
    for _ in 0..params.m() {
        let is_b = rng.random::<f64>() < x;
        let success = rng.random::<f64>();
        if is_b {
            b += (success < params.p_b()) as usize;
        } else {
            r += (success < params.p_r()) as usize;
        }
    }
    let coin = rng.random::<f64>() < 0.5;
    b > r || (b == r && coin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmap::UpdateMap;

    #[test]
    fn all_b_all_succeed() {
        for m in 2..=6 {
            let p = ModelParams::new(m, 1.0, 0.3).unwrap();
            assert_eq!(estimate_g_one_step(&p, 1.0, 10_000, 3).unwrap().estimate, 1.0);
        }
    }

    #[test]
    fn all_r_all_fail_is_a_coin() {
        let p = ModelParams::new(4, 0.6, 0.0).unwrap();
        let e = estimate_g_one_step(&p, 0.0, 10_000, 5).unwrap();
        assert!((e.estimate - 0.5).abs() < 4.0 * (0.25f64 / 10_000.0).sqrt());
    }

    #[test]
    fn tracks_g() {
        let p = ModelParams::new(4, 0.7, 0.4).unwrap();
        let n = 1_000_000;
        let e = estimate_g_one_step(&p, 0.3, n, 1).unwrap();
        let g = UpdateMap::new(p).eval(0.3).unwrap();
        let se = (g * (1.0 - g) / n as f64).sqrt();
        assert!((e.estimate - g).abs() <= 4.0 * se, "{} vs {g}", e.estimate);
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let p = ModelParams::new(3, 0.55, 0.45).unwrap();
        let a = estimate_g_one_step(&p, 0.4, 300_000, 11).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_g_one_step(&p, 0.4, 300_000, 11).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ModelParams::new(3, 0.5, 0.5).unwrap();
        assert!(estimate_g_one_step(&p, 1.1, 10, 0).is_err());
        assert!(estimate_g_one_step(&p, 0.5, 0, 0).is_err());
    }
}
