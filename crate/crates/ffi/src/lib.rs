//! C ABI over the `cuopt` library.
//!
//! Every fallible call returns a [`CuoptStatus`]; on failure the message is
//! available from [`cuopt_last_error_message`] on the same thread. Strings
//! returned through `char**` out-parameters are owned by the caller and must
//! be released with [`cuopt_string_free`]. Handles are opaque and released
//! with their matching `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cuopt::cu_sets::{Instance, ProcessSpec};
use cuopt::dro::{nested_dro_value, Direction, StageCost};
use cuopt::error::Error;
use cuopt::experiments::{
    run_knapsack_experiment, run_portfolio_experiment, solve_robust_knapsack, KnapsackExperimentConfig, PortfolioConfig,
};
use cuopt::lp::{parse_lp_text, solve_lp, LpProblem, LpSolution, LpStatus};
use cuopt::ro::{center_cu_lhs, matrix_cu_lhs, polyhedral_worst_case};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuoptStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInstance = 4,
    DimensionMismatch = 5,
    Unsupported = 6,
    Infeasible = 7,
    Unbounded = 8,
    NumericalFailure = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Status of a solved linear program.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuoptLpStatus {
    Optimal = 0,
    Infeasible = 1,
    Unbounded = 2,
}

/// A parsed uncertainty instance.
pub struct CuoptInstance {
    inner: Instance,
}

/// A linear program in the line-oriented text format.
pub struct CuoptLp {
    inner: LpProblem,
}

/// The result of [`cuopt_lp_solve`].
pub struct CuoptLpSolution {
    inner: LpSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: CuoptStatus,
    message: String,
}

impl Failure {
    fn new(status: CuoptStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotSquare { .. } | Error::DimensionMismatch(_) | Error::ModeUnsupportedForDimension(_) => {
                CuoptStatus::DimensionMismatch
            }
            Error::NotSymmetric(_) | Error::NotPsd { .. } | Error::HorizonTooLarge(_) | Error::InvalidInstance(_) => {
                CuoptStatus::InvalidInstance
            }
            Error::LpInfeasible | Error::Infeasible(_) | Error::InfeasibleMomentSet { .. } => CuoptStatus::Infeasible,
            Error::LpUnbounded => CuoptStatus::Unbounded,
            Error::NumericalFailure(_) | Error::CutLimitExceeded(_) => CuoptStatus::NumericalFailure,
            Error::UnsupportedModel(_) => CuoptStatus::Unsupported,
        };
        Failure::new(status, format!("{}: {e}", e.code()))
    }
}

fn set_last_error(message: Option<&str>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("no interior NUL"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

/// Runs `f`, records its failure (or a caught panic) and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CuoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            CuoptStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(Some(&fail.message));
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(Some(&format!("panic: {msg}")));
            CuoptStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(CuoptStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(CuoptStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        read_str(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(CuoptStatus::NullArgument, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(CuoptStatus::NullArgument, format!("{what} is null")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::new(CuoptStatus::ParseError, format!("{what}: {e}")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cuopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cuopt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Stable lowercase name of a status code; "unknown" outside the enum.
/// Takes a plain integer so any value a C caller passes is well defined.
#[no_mangle]
pub extern "C" fn cuopt_status_name(status: i32) -> *const c_char {
    let s: &'static str = match status {
        0 => "ok\0",
        1 => "null_argument\0",
        2 => "invalid_utf8\0",
        3 => "parse_error\0",
        4 => "invalid_instance\0",
        5 => "dimension_mismatch\0",
        6 => "unsupported\0",
        7 => "infeasible\0",
        8 => "unbounded\0",
        9 => "numerical_failure\0",
        10 => "buffer_too_small\0",
        11 => "panic\0",
        _ => "unknown\0",
    };
    s.as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cuopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an instance document; on success `*out` owns a new handle.
///
/// # Safety
/// `json` must be null or NUL-terminated; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_instance_from_json(json: *const c_char, out: *mut *mut CuoptInstance) -> CuoptStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inst = Instance::from_json(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(CuoptInstance { inner: inst }));
        Ok(())
    })
}

/// Releases an instance handle. Null is ignored.
///
/// # Safety
/// `inst` must be null or a live handle from [`cuopt_instance_from_json`].
#[no_mangle]
pub unsafe extern "C" fn cuopt_instance_free(inst: *mut CuoptInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Canonical JSON of the instance.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_instance_to_json(inst: *const CuoptInstance, out: *mut *mut c_char) -> CuoptStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        *out_ptr(out, "out")? = to_c_string(inst.inner.to_json());
        Ok(())
    })
}

/// Process kind tag ("ellipsoidal_center", "moment", ...) as a static string, or null for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cuopt_instance_kind(inst: *const CuoptInstance) -> *const c_char {
    let Some(inst) = inst.as_ref() else { return ptr::null() };
    let s: &'static str = match &inst.inner.process {
        ProcessSpec::EllipsoidalCenter(_) => "ellipsoidal_center\0",
        ProcessSpec::EllipsoidalMatrix(_) => "ellipsoidal_matrix\0",
        ProcessSpec::PolyhedralRhs(_) => "polyhedral_rhs\0",
        ProcessSpec::Moment(_) => "moment\0",
    };
    s.as_ptr().cast()
}

/// Number of periods and uncertainty dimension.
///
/// # Safety
/// `inst` must be a live handle; `periods` and `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_instance_shape(inst: *const CuoptInstance, periods: *mut usize, dim: *mut usize) -> CuoptStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        *out_ptr(periods, "periods")? = inst.inner.process.periods();
        *out_ptr(dim, "dim")? = inst.inner.process.dim();
        Ok(())
    })
}

/// Counterpart value at the instance decision: the robust LHS for the
/// ellipsoidal and polyhedral kinds, the nested worst-case expectation for
/// moment instances.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_counterpart_value(inst: *const CuoptInstance, out: *mut f64) -> CuoptStatus {
    guard(|| {
        let inst = &handle(inst, "instance")?.inner;
        let out = out_ptr(out, "out")?;
        *out = match &inst.process {
            ProcessSpec::EllipsoidalCenter(p) => center_cu_lhs(inst.decision()?, p)?.0,
            ProcessSpec::EllipsoidalMatrix(p) => matrix_cu_lhs(inst.decision()?, p)?.0,
            ProcessSpec::PolyhedralRhs(p) => polyhedral_worst_case(inst.decision()?, p)?.0,
            ProcessSpec::Moment(p) => {
                let costs = inst.stage_costs()?;
                let refs: Vec<&dyn StageCost> = costs.iter().map(|c| c as &dyn StageCost).collect();
                nested_dro_value(p, &refs, Direction::Sup)?.value
            }
        };
        Ok(())
    })
}

/// Counterpart constraint system as JSON (the `reformulate` output).
/// `conservative` selects the per-stage dual for moment instances.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_reformulate(inst: *const CuoptInstance, conservative: bool, out: *mut *mut c_char) -> CuoptStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        let out = out_ptr(out, "out")?;
        *out = to_c_string(cuopt::cli::counterpart_system(&inst.inner, conservative)?.to_json());
        Ok(())
    })
}

/// Counterpart value next to its oracles, as JSON (the `worst-case` output).
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_worst_case(inst: *const CuoptInstance, samples: usize, seed: u64, out: *mut *mut c_char) -> CuoptStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        let out = out_ptr(out, "out")?;
        let v = cuopt::cli::worst_case_report(&inst.inner, samples, seed)?;
        *out = to_c_string(serde_json::to_string_pretty(&v).expect("json value serializes") + "\n");
        Ok(())
    })
}

/// Solves a knapsack instance document; writes the solution as JSON.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_solve_knapsack(json: *const c_char, out: *mut *mut c_char) -> CuoptStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let v: serde_json::Value = parse_json(read_str(json, "json")?, "knapsack instance")?;
        let (inst, method) = cuopt::cli::knapsack_from_value(v)?;
        let sol = solve_robust_knapsack(&inst, method)?;
        *out = to_c_string(serde_json::to_string_pretty(&sol).expect("solution serializes") + "\n");
        Ok(())
    })
}

/// Runs the knapsack sweeps and writes the CSV table. A null `config_json`
/// uses the default configuration.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_run_knapsack(config_json: *const c_char, out: *mut *mut c_char) -> CuoptStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = match read_opt_str(config_json, "config_json")? {
            Some(t) => parse_json(t, "knapsack config")?,
            None => KnapsackExperimentConfig::default(),
        };
        *out = to_c_string(run_knapsack_experiment(&cfg)?.to_csv());
        Ok(())
    })
}

/// Runs the portfolio grid and writes the CSV table. A null `config_json`
/// uses the default configuration.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_run_portfolio(config_json: *const c_char, out: *mut *mut c_char) -> CuoptStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = match read_opt_str(config_json, "config_json")? {
            Some(t) => parse_json(t, "portfolio config")?,
            None => PortfolioConfig::default(),
        };
        *out = to_c_string(run_portfolio_experiment(&cfg)?.to_csv());
        Ok(())
    })
}

/// Parses an LP in the text format; on success `*out` owns a new handle.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_parse(text: *const c_char, out: *mut *mut CuoptLp) -> CuoptStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let lp = parse_lp_text(read_str(text, "text")?).map_err(|e| Failure::new(CuoptStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(CuoptLp { inner: lp }));
        Ok(())
    })
}

/// Releases an LP handle. Null is ignored.
///
/// # Safety
/// `lp` must be null or a live handle from [`cuopt_lp_parse`].
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_free(lp: *mut CuoptLp) {
    if !lp.is_null() {
        drop(Box::from_raw(lp));
    }
}

/// Number of columns of the LP.
///
/// # Safety
/// `lp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_num_cols(lp: *const CuoptLp, out: *mut usize) -> CuoptStatus {
    guard(|| {
        let lp = handle(lp, "lp")?;
        *out_ptr(out, "out")? = lp.inner.num_cols();
        Ok(())
    })
}

/// Solves the LP. Infeasible and unbounded programs still succeed; inspect
/// [`cuopt_lp_solution_status`].
///
/// # Safety
/// `lp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_solve(lp: *const CuoptLp, out: *mut *mut CuoptLpSolution) -> CuoptStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let sol = solve_lp(&handle(lp, "lp")?.inner)?;
        *out = Box::into_raw(Box::new(CuoptLpSolution { inner: sol }));
        Ok(())
    })
}

/// Releases a solution handle. Null is ignored.
///
/// # Safety
/// `sol` must be null or a live handle from [`cuopt_lp_solve`].
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_solution_free(sol: *mut CuoptLpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Status and objective value (meaningful only when optimal).
///
/// # Safety
/// `sol` must be a live handle; `status` and `objective` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_solution_status(
    sol: *const CuoptLpSolution,
    status: *mut CuoptLpStatus,
    objective: *mut f64,
) -> CuoptStatus {
    guard(|| {
        let sol = &handle(sol, "solution")?.inner;
        *out_ptr(status, "status")? = match sol.status {
            LpStatus::Optimal => CuoptLpStatus::Optimal,
            LpStatus::Infeasible => CuoptLpStatus::Infeasible,
            LpStatus::Unbounded => CuoptLpStatus::Unbounded,
        };
        *out_ptr(objective, "objective")? = sol.objective;
        Ok(())
    })
}

/// Copies the primal point into `buf`. `len` must be at least the column
/// count; otherwise nothing is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `sol` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cuopt_lp_solution_x(sol: *const CuoptLpSolution, buf: *mut f64, len: usize) -> CuoptStatus {
    guard(|| {
        let x = &handle(sol, "solution")?.inner.x;
        if buf.is_null() {
            return Err(Failure::new(CuoptStatus::NullArgument, "buf is null"));
        }
        if len < x.len() {
            return Err(Failure::new(CuoptStatus::BufferTooSmall, format!("need {} doubles, got {len}", x.len())));
        }
        std::slice::from_raw_parts_mut(buf, x.len()).copy_from_slice(x);
        Ok(())
    })
}
