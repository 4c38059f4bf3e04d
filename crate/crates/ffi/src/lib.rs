//! C ABI over `tree-majority`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`TmStatus`]; on failure `tm_last_error_message` describes the cause for
//! the calling thread. Results are written through out-pointers only on
//! success. The header `include/tree_majority.h` is generated at build time.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tree_majority::analysis::{self, FixedPointSet, Stability};
use tree_majority::sim::{self, SimConfig, SimResult};
use tree_majority::{gmap, policy, Error, ModelParams, UpdateMap};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Precondition = 3,
    UnsupportedRegime = 4,
    EveryPointFixed = 5,
    SolverFailure = 6,
    InvalidConfig = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmStability {
    Attractive = 0,
    Repulsive = 1,
    Neutral = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TmFixedPoint {
    pub value: f64,
    pub stability: TmStability,
    pub tangent: bool,
    pub residual: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TmThreshold {
    pub m: usize,
    pub p_threshold: f64,
    pub bracket_width: f64,
    pub evaluations: usize,
    pub boundary: bool,
}

/// Summary of an orbit; the full sequence stays on the Rust side.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TmTrajectory {
    pub last: f64,
    pub steps: usize,
    pub converged: bool,
    pub has_limit: bool,
    pub limit: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TmSimConfig {
    pub m: usize,
    pub p_b: f64,
    pub p_r: f64,
    pub depth: usize,
    pub horizon: usize,
    pub pi_0: f64,
    pub seed: u64,
    pub replications: u64,
}

/// Opaque: model parameters with their update map.
pub struct TmModel {
    map: UpdateMap,
}

/// Opaque: a fixed-point set.
pub struct TmFixedPoints {
    set: FixedPointSet,
}

/// Opaque: a tree simulation result.
pub struct TmSimResult {
    result: SimResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl Into<Vec<u8>>) {
    let msg = CString::new(message).unwrap_or_else(|_| c"error message contained NUL".into());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TmStatus {
    match err {
        Error::InvalidParams(_) | Error::OutOfRange { .. } => TmStatus::InvalidArgument,
        Error::Precondition(_) => TmStatus::Precondition,
        Error::UnsupportedRegime(_) => TmStatus::UnsupportedRegime,
        Error::EveryPointFixed => TmStatus::EveryPointFixed,
        Error::Solver { .. } => TmStatus::SolverFailure,
        Error::Config(_) => TmStatus::InvalidConfig,
    }
}

impl From<Error> for TmStatus {
    fn from(err: Error) -> Self {
        set_last_error(err.to_string());
        status_of(&err)
    }
}

fn stability(s: Stability) -> TmStability {
    match s {
        Stability::Attractive => TmStability::Attractive,
        Stability::Repulsive => TmStability::Repulsive,
        Stability::Neutral => TmStability::Neutral,
    }
}

/// Runs `body`, turning panics into `TmStatus::Panic`.
fn guard(body: impl FnOnce() -> Result<(), TmStatus>) -> TmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            TmStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("panic inside tree-majority");
            TmStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, TmStatus> {
    p.as_mut().ok_or_else(|| {
        set_last_error("null output pointer");
        TmStatus::NullPointer
    })
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, TmStatus> {
    p.as_ref().ok_or_else(|| {
        set_last_error("null handle");
        TmStatus::NullPointer
    })
}

unsafe fn write_slice(src: &[f64], dst: *mut f64, len: usize) -> Result<(), TmStatus> {
    if dst.is_null() {
        set_last_error("null output buffer");
        return Err(TmStatus::NullPointer);
    }
    if len < src.len() {
        set_last_error(format!("buffer holds {len} values, {} needed", src.len()));
        return Err(TmStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn tm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn tm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn tm_model_new(m: usize, p_b: f64, p_r: f64, model: *mut *mut TmModel) -> TmStatus {
    guard(|| {
        let slot = out(model)?;
        let params = ModelParams::new(m, p_b, p_r)?;
        *slot = Box::into_raw(Box::new(TmModel {
            map: UpdateMap::new(params),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_model_free(model: *mut TmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tm_model_m(model: *const TmModel) -> usize {
    model.as_ref().map_or(0, |h| h.map.m())
}

/// Copies `f_m(0..=m)` into `values`, which must hold `m + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn tm_model_policy(model: *const TmModel, values: *mut f64, len: usize) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        write_slice(h.map.coeffs().values(), values, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_policy_value(
    m: usize,
    p_b: f64,
    p_r: f64,
    k: usize,
    value: *mut f64,
) -> TmStatus {
    guard(|| {
        let slot = out(value)?;
        *slot = policy::policy_value(&ModelParams::new(m, p_b, p_r)?, k)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_g_eval(model: *const TmModel, x: f64, value: *mut f64) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        *out(value)? = h.map.eval(x)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_g_prime(model: *const TmModel, x: f64, value: *mut f64) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        *out(value)? = h.map.prime(x)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_g_double_prime(model: *const TmModel, x: f64, value: *mut f64) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        *out(value)? = h.map.double_prime(x)?;
        Ok(())
    })
}

/// `g'_m(1/2)` with `p_B = p_R = p`.
#[no_mangle]
pub unsafe extern "C" fn tm_g_prime_at_half(m: usize, p: f64, value: *mut f64) -> TmStatus {
    guard(|| {
        let slot = out(value)?;
        *slot = gmap::g_prime_at_half(&ModelParams::symmetric(m, p)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_df_dp(m: usize, l: usize, p: f64, value: *mut f64) -> TmStatus {
    guard(|| {
        let slot = out(value)?;
        *slot = gmap::df_dp(m, l, p)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_fixed_points_new(
    model: *const TmModel,
    tol: f64,
    points: *mut *mut TmFixedPoints,
) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        let slot = out(points)?;
        let set = analysis::find_fixed_points(h.map.params(), tol)?;
        *slot = Box::into_raw(Box::new(TmFixedPoints { set }));
        Ok(())
    })
}

/// Closed-form fixed points for `m = 3`, `p_B = 1`.
#[no_mangle]
pub unsafe extern "C" fn tm_m3_pb1_closed_form(p_r: f64, points: *mut *mut TmFixedPoints) -> TmStatus {
    guard(|| {
        let slot = out(points)?;
        let set = analysis::m3_pb1_closed_form(p_r)?;
        *slot = Box::into_raw(Box::new(TmFixedPoints { set }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_fixed_points_len(points: *const TmFixedPoints) -> usize {
    points.as_ref().map_or(0, |h| h.set.len())
}

#[no_mangle]
pub unsafe extern "C" fn tm_fixed_points_get(
    points: *const TmFixedPoints,
    index: usize,
    point: *mut TmFixedPoint,
) -> TmStatus {
    guard(|| {
        let h = handle(points)?;
        let slot = out(point)?;
        let p = h.set.points.get(index).ok_or_else(|| {
            set_last_error(format!("index {index} out of range for {} points", h.set.len()));
            TmStatus::InvalidArgument
        })?;
        *slot = TmFixedPoint {
            value: p.value,
            stability: stability(p.stability),
            tangent: p.tangent,
            residual: p.residual,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_fixed_points_free(points: *mut TmFixedPoints) {
    if !points.is_null() {
        drop(Box::from_raw(points));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tm_classify_stability(
    model: *const TmModel,
    x: f64,
    result: *mut TmStability,
) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        *out(result)? = stability(analysis::classify_stability(&h.map, x)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_iterate(
    model: *const TmModel,
    pi_0: f64,
    max_steps: usize,
    conv_tol: f64,
    summary: *mut TmTrajectory,
) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        let slot = out(summary)?;
        let t = analysis::iterate_dynamics(h.map.params(), pi_0, max_steps, conv_tol)?;
        *slot = TmTrajectory {
            last: t.last(),
            steps: t.steps(),
            converged: t.converged,
            has_limit: t.limit.is_some(),
            limit: t.limit.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_predict_limit(model: *const TmModel, pi_0: f64, limit: *mut f64) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        *out(limit)? = analysis::predict_limit(h.map.params(), pi_0)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_solve_threshold(m: usize, tol: f64, result: *mut TmThreshold) -> TmStatus {
    guard(|| {
        let slot = out(result)?;
        let r = analysis::solve_threshold(m, tol)?;
        *slot = TmThreshold {
            m: r.m,
            p_threshold: r.p_threshold,
            bracket_width: r.bracket_width,
            evaluations: r.evaluations,
            boundary: r.boundary,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_estimate_g_one_step(
    model: *const TmModel,
    x: f64,
    samples: u64,
    seed: u64,
    estimate: *mut f64,
    ci_half_width: *mut f64,
) -> TmStatus {
    guard(|| {
        let h = handle(model)?;
        let e = sim::estimate_g_one_step(h.map.params(), x, samples, seed)?;
        *out(estimate)? = e.estimate;
        *out(ci_half_width)? = e.ci_half_width;
        Ok(())
    })
}

fn sim_config(c: &TmSimConfig) -> Result<SimConfig, TmStatus> {
    Ok(SimConfig {
        params: ModelParams::new(c.m, c.p_b, c.p_r)?,
        depth: c.depth,
        horizon: c.horizon,
        pi_0: c.pi_0,
        seed: c.seed,
        replications: c.replications,
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_simulate_tree(
    config: *const TmSimConfig,
    result: *mut *mut TmSimResult,
) -> TmStatus {
    guard(|| {
        let cfg = sim_config(handle(config)?)?;
        let slot = out(result)?;
        let r = sim::simulate_tree(&cfg)?;
        *slot = Box::into_raw(Box::new(TmSimResult { result: r }));
        Ok(())
    })
}

/// Number of recorded times, `T + 1`.
#[no_mangle]
pub unsafe extern "C" fn tm_sim_result_len(result: *const TmSimResult) -> usize {
    result.as_ref().map_or(0, |h| h.result.pi_hat.len())
}

#[no_mangle]
pub unsafe extern "C" fn tm_sim_result_pi_hat(
    result: *const TmSimResult,
    values: *mut f64,
    len: usize,
) -> TmStatus {
    guard(|| write_slice(&handle(result)?.result.pi_hat, values, len))
}

#[no_mangle]
pub unsafe extern "C" fn tm_sim_result_ci_half_width(
    result: *const TmSimResult,
    values: *mut f64,
    len: usize,
) -> TmStatus {
    guard(|| write_slice(&handle(result)?.result.ci_half_width, values, len))
}

/// Writes NaN when no pair correlation was computed.
#[no_mangle]
pub unsafe extern "C" fn tm_sim_result_pair_correlation(
    result: *const TmSimResult,
    value: *mut f64,
) -> TmStatus {
    guard(|| {
        let h = handle(result)?;
        *out(value)? = h.result.pair_correlation.unwrap_or(f64::NAN);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn tm_sim_result_free(result: *mut TmSimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

#[no_mangle]
pub unsafe extern "C" fn tm_independence_check(
    config: *const TmSimConfig,
    level: usize,
    pairs: usize,
    max_abs_correlation: *mut f64,
) -> TmStatus {
    guard(|| {
        let cfg = sim_config(handle(config)?)?;
        let slot = out(max_abs_correlation)?;
        *slot = sim::independence_check(&cfg, level, pairs)?;
        Ok(())
    })
}
