//! Monte Carlo checks of the update map and of the tree process itself.
//!
//! All randomness comes from ChaCha8 keyed by the user seed. Each replication
//! (or chunk of one-step trials) owns its own stream, and inside a stream
//! every draw sits at a fixed word position determined by what it is for, so
//! results do not depend on thread count or scheduling.

mod one_step;
mod stream;
mod tree;

pub use one_step::{estimate_g_one_step, OneStepEstimate};
pub use stream::{keyed_uniform, DrawTag};
pub use tree::{independence_check, simulate_tree, SimConfig, SimResult, MAX_LEAVES};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// 95% half-width of a proportion estimated from `n` Bernoulli samples.
pub fn binomial_half_width(p_hat: f64, n: u64) -> f64 {
    Z95 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}
