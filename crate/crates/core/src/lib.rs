//! Absolute-majority social learning on rooted m-ary trees.
//!
//! Every vertex of an infinite rooted tree holds state B or R. At each epoch
//! each agent runs one experiment with its current technology (success
//! probability `p_B` or `p_R`), and every parent adopts whichever state has
//! strictly more successful experiments among its `m` children, flipping a
//! fair coin on ties. Starting from i.i.d. states with `P[B] = pi_0`, the
//! states stay i.i.d. and `pi_{t+1} = g_m(pi_t)`.
//!
//! * [`policy`]: binomial masses and the table `f_m(k)`.
//! * [`gmap`]: the Bernstein polynomial `g_m` and its derivatives.
//! * [`analysis`]: fixed points, stability, orbits, limits and `p(m)`.
//! * [`sim`]: Monte Carlo estimates from the raw update rule.
//! * [`cli`]: the `tree-majority` command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod gmap;
pub mod policy;
pub mod sim;

pub use analysis::{
    classify_stability, find_fixed_points, iterate_dynamics, m3_pb1_closed_form, predict_limit,
    solve_threshold, FixedPoint, FixedPointSet, Stability, ThresholdResult, Trajectory,
};
pub use error::{Error, Result};
pub use gmap::{df_dp, g_double_prime, g_eval, g_prime, g_prime_at_half, UpdateMap};
pub use policy::{binomial_pmf, policy_table, policy_value, BinomialPmf, ModelParams, PolicyTable};
pub use sim::{estimate_g_one_step, independence_check, simulate_tree, SimConfig, SimResult};
