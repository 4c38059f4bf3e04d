//! Synchronous simulation of the agent process on a depth-truncated m-ary tree.
//!
//! Vertices are stored level by level; the children of vertex `v` are
//! `m*v + 1 ..= m*v + m`. Leaves at depth `D` have no children in the
//! truncation and keep their initial state. A vertex at depth `d` carries the
//! infinite-tree law at time `t` only while `t <= D - d`, so the root is exact
//! up to `t = D`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::policy::ModelParams;

use super::stream::replication_rng;

/// Upper bound on `m^D`.
pub const MAX_LEAVES: u64 = 100_000_000;
const MIN_CORRELATION_REPLICATIONS: u64 = 100;
const DEFAULT_PAIRS: usize = 32;
/// Stream reserved for choosing which vertex pairs to watch.
const PAIR_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub depth: usize,
    pub horizon: usize,
    pub pi_0: f64,
    pub seed: u64,
    pub replications: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_probability("pi_0", self.pi_0)?;
        if self.depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if self.horizon > self.depth {
            return Err(Error::Config(format!(
                "horizon {} exceeds depth {}; the root law is exact only for t <= D",
                self.horizon, self.depth
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let leaves = (self.params.m() as u64).checked_pow(self.depth as u32);
        if leaves.is_none_or(|l| l > MAX_LEAVES) {
            return Err(Error::Config(format!(
                "m^D = {}^{} exceeds the {MAX_LEAVES} leaf limit",
                self.params.m(),
                self.depth
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Root B-frequency across replications, `t = 0..=T`.
    pub pi_hat: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    /// Max |correlation| over sampled same-level pairs at depth `D - T`
    /// at time `T`; absent when that level is the root or `R < 100`.
    pub pair_correlation: Option<f64>,
    pub replications_used: u64,
    /// `level_means[t][d]`: B-fraction over all vertices at depth `d` at time
    /// `t`, pooled over replications, for every `d <= D - t`.
    pub level_means: Vec<Vec<f64>>,
}

struct Layout {
    m: usize,
    depth: usize,
    /// First index of each level, plus the total at the end.
    offsets: Vec<usize>,
}

impl Layout {
    fn new(m: usize, depth: usize) -> Self {
        let mut offsets = vec![0];
        let mut width = 1;
        for _ in 0..=depth {
            offsets.push(offsets.last().unwrap() + width);
            width *= m;
        }
        Self { m, depth, offsets }
    }

    fn vertices(&self) -> usize {
        self.offsets[self.depth + 1]
    }

    fn level(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }

    fn internal(&self) -> usize {
        self.offsets[self.depth]
    }
}

struct Replication {
    root: Vec<bool>,
    level_counts: Vec<Vec<u64>>,
    watched: Vec<bool>,
}

fn run_replication(cfg: &SimConfig, layout: &Layout, rep: u64, watch: &[usize]) -> Replication {
    let n = layout.vertices();
    let m = layout.m;
    let (p_b, p_r) = (cfg.params.p_b(), cfg.params.p_r());
    let mut rng = replication_rng(cfg.seed, rep);

    let mut state = vec![false; n];
    for s in state.iter_mut() {
        *s = rng.random::<f64>() < cfg.pi_0;
        let _unused: f64 = rng.random();
    }

    let mut next = state.clone();
    let mut success = vec![false; n];
    let mut coin = vec![false; n];
    let mut root = Vec::with_capacity(cfg.horizon + 1);
    let mut level_counts = Vec::with_capacity(cfg.horizon + 1);

    let record = |state: &[bool], t: usize, root: &mut Vec<bool>, counts: &mut Vec<Vec<u64>>| {
        root.push(state[0]);
        counts.push(
            (0..=layout.depth - t)
                .map(|d| state[layout.level(d)].iter().filter(|&&b| b).count() as u64)
                .collect(),
        );
    };
    record(&state, 0, &mut root, &mut level_counts);

    for t in 0..cfg.horizon {
        for v in 0..n {
            let x = rng.random::<f64>();
            let y = rng.random::<f64>();
            success[v] = x < if state[v] { p_b } else { p_r };
            coin[v] = y < 0.5;
        }
        for v in 0..layout.internal() {
            let (mut b, mut r) = (0usize, 0usize);
            for c in m * v + 1..=m * v + m {
                if success[c] {
                    if state[c] {
                        b += 1;
                    } else {
                        r += 1;
                    }
                }
            }
            next[v] = b > r || (b == r && coin[v]);
        }
        next[layout.internal()..].copy_from_slice(&state[layout.internal()..]);
        std::mem::swap(&mut state, &mut next);
        record(&state, t + 1, &mut root, &mut level_counts);
    }

    Replication {
        root,
        level_counts,
        watched: watch.iter().map(|&v| state[v]).collect(),
    }
}

fn run_all(cfg: &SimConfig, layout: &Layout, watch: &[usize]) -> Vec<Replication> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, layout, rep, watch))
        .collect()
}

/// `pairs` index pairs of distinct vertices on level `d`.
fn sample_pairs(cfg: &SimConfig, layout: &Layout, d: usize, pairs: usize) -> Vec<(usize, usize)> {
    let range = layout.level(d);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(PAIR_STREAM);
    (0..pairs)
        .map(|_| {
            let a = rng.random_range(range.clone());
            let mut b = rng.random_range(range.clone());
            while b == a {
                b = rng.random_range(range.clone());
            }
            (a, b)
        })
        .collect()
}

fn max_abs_correlation(reps: &[Replication], pairs: usize) -> f64 {
    let n = reps.len() as f64;
    let mut worst: f64 = 0.0;
    for k in 0..pairs {
        let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
        for r in reps {
            let a = r.watched[2 * k] as u8 as f64;
            let b = r.watched[2 * k + 1] as u8 as f64;
            sa += a;
            sb += b;
            sab += a * b;
        }
        let (ma, mb) = (sa / n, sb / n);
        let (va, vb) = (ma * (1.0 - ma), mb * (1.0 - mb));
        if va <= 0.0 || vb <= 0.0 {
            continue;
        }
        let corr = (sab / n - ma * mb) / (va * vb).sqrt();
        worst = worst.max(corr.abs());
    }
    worst
}

pub fn simulate_tree(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let layout = Layout::new(cfg.params.m(), cfg.depth);
    let pair_level = cfg.depth - cfg.horizon;
    let pairs = if pair_level >= 1 && cfg.replications >= MIN_CORRELATION_REPLICATIONS {
        sample_pairs(cfg, &layout, pair_level, DEFAULT_PAIRS)
    } else {
        Vec::new()
    };
    let watch: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let reps = run_all(cfg, &layout, &watch);

    let r = cfg.replications;
    let pi_hat: Vec<f64> = (0..=cfg.horizon)
        .map(|t| reps.iter().filter(|rep| rep.root[t]).count() as f64 / r as f64)
        .collect();
    let ci_half_width = pi_hat.iter().map(|&p| super::binomial_half_width(p, r)).collect();
    let level_means = (0..=cfg.horizon)
        .map(|t| {
            (0..=cfg.depth - t)
                .map(|d| {
                    let total: u64 = reps.iter().map(|rep| rep.level_counts[t][d]).sum();
                    total as f64 / (r as f64 * layout.level(d).len() as f64)
                })
                .collect()
        })
        .collect();

    Ok(SimResult {
        pi_hat,
        ci_half_width,
        pair_correlation: (!pairs.is_empty()).then(|| max_abs_correlation(&reps, pairs.len())),
        replications_used: r,
        level_means,
    })
}

/// Largest absolute empirical correlation, across replications, between the
/// time-`T` states of `pairs` random distinct vertex pairs on `level`.
/// Pairs whose states never vary are skipped; if all are, the result is 0.
pub fn independence_check(cfg: &SimConfig, level: usize, pairs: usize) -> Result<f64> {
    cfg.validate()?;
    if level == 0 || level > cfg.depth {
        return Err(Error::Precondition(format!(
            "level {level} must lie in 1..={} to hold two distinct vertices",
            cfg.depth
        )));
    }
    if cfg.horizon > cfg.depth - level {
        return Err(Error::Precondition(format!(
            "time {} is outside the validity window t <= D - level = {}",
            cfg.horizon,
            cfg.depth - level
        )));
    }
    if cfg.replications < MIN_CORRELATION_REPLICATIONS {
        return Err(Error::Config(format!(
            "{} replications are too few for a correlation estimate (need {MIN_CORRELATION_REPLICATIONS})",
            cfg.replications
        )));
    }
    if pairs == 0 {
        return Err(Error::Config("pairs must be at least 1".into()));
    }
    let layout = Layout::new(cfg.params.m(), cfg.depth);
    let chosen = sample_pairs(cfg, &layout, level, pairs);
    let watch: Vec<usize> = chosen.iter().flat_map(|&(a, b)| [a, b]).collect();
    let reps = run_all(cfg, &layout, &watch);
    Ok(max_abs_correlation(&reps, pairs))
}
