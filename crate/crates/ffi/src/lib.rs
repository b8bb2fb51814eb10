//! C ABI over `lagflow`.
//!
//! Flow states are opaque handles created from configuration text and released
//! with [`lagflow_flow_free`]. Every fallible call returns a [`LagflowStatus`];
//! on failure [`lagflow_last_error`] describes the cause. Panics never cross
//! the boundary: they are reported as `LAGFLOW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use lagflow::cli::{execute, ConfigMap, Mode, RunConfig};
use lagflow::flow::{init_state, FlowState, StepControl};
use lagflow::monitors::{estimate_report, monitor_row, monitor_tolerance};
use lagflow::steady::{solve_steady, SteadyOptions};
use lagflow::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LagflowStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Parse = 3,
    NonConvex = 4,
    Projection = 5,
    Incompatible = 6,
    Aborted = 7,
    GridMismatch = 8,
    Io = 9,
    Panic = 10,
}

/// One `monitors.csv` row.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LagflowMonitors {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub osc_f: f64,
    pub lambda1_min: f64,
    pub lambda1_max: f64,
    pub oblique_min: f64,
    pub hess_min: f64,
    pub hess_max: f64,
    pub bc_residual_max: f64,
}

/// Opaque flow handle.
pub struct LagflowFlow {
    state: FlowState,
    control: StepControl,
    steady: SteadyOptions,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LagflowStatus {
    match e {
        Error::InvalidInput(_) => LagflowStatus::InvalidInput,
        Error::Parse { .. } => LagflowStatus::Parse,
        Error::NonConvex { .. } => LagflowStatus::NonConvex,
        Error::Projection { .. } => LagflowStatus::Projection,
        Error::Incompatible(_) => LagflowStatus::Incompatible,
        Error::Aborted { .. } => LagflowStatus::Aborted,
        Error::GridMismatch(_) => LagflowStatus::GridMismatch,
        Error::Io { .. } => LagflowStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LagflowStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            LagflowStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("{what} must not be null"));
            LagflowStatus::NullArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            LagflowStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure::Lib(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

unsafe fn handle<'a>(ptr: *const LagflowFlow) -> Result<&'a LagflowFlow, Failure> {
    ptr.as_ref().ok_or(Failure::Null("flow handle"))
}

unsafe fn handle_mut<'a>(ptr: *mut LagflowFlow) -> Result<&'a mut LagflowFlow, Failure> {
    ptr.as_mut().ok_or(Failure::Null("flow handle"))
}

fn put<T>(ptr: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(what));
    }
    unsafe { ptr.write(value) };
    Ok(())
}

/// Message for the most recent failed call on this thread; empty after a success.
/// The pointer stays valid until the next `lagflow_*` call on the same thread.
#[no_mangle]
pub extern "C" fn lagflow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn lagflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the initial flow state described by configuration text. Relative
/// paths in the text resolve against the working directory.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_new(config: *const c_char, out: *mut *mut LagflowFlow) -> LagflowStatus {
    guard(|| {
        let text = text(config, "config")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let cfg = RunConfig::from_map(&ConfigMap::parse(text)?, Path::new("."))?;
        let state = init_state(&cfg.omega, cfg.omega_tilde.as_ref(), &cfg.generator, cfg.resolution, &cfg.control)?;
        let flow = Box::new(LagflowFlow { state, control: cfg.control, steady: cfg.steady });
        put(out, Box::into_raw(flow), "out")
    })
}

/// # Safety
/// `flow` must come from [`lagflow_flow_new`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_free(flow: *mut LagflowFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// Takes up to `steps` explicit steps, stopping early once converged.
///
/// # Safety
/// `flow` must be a live handle; `converged` may be null.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_step(flow: *mut LagflowFlow, steps: usize, converged: *mut c_int) -> LagflowStatus {
    guard(|| {
        let f = handle_mut(flow)?;
        let tol = f.control.tol_converge;
        for _ in 0..steps {
            if f.state.is_converged(tol) {
                break;
            }
            f.state.step(&f.control)?;
        }
        f.state.converged = f.state.is_converged(tol);
        f.state.c_estimate = f.state.jets.mean_phase();
        if !converged.is_null() {
            converged.write(c_int::from(f.state.converged));
        }
        Ok(())
    })
}

/// Steps until convergence or the configured `max_steps`.
///
/// # Safety
/// `flow` must be a live handle; `converged` may be null.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_run(flow: *mut LagflowFlow, converged: *mut c_int) -> LagflowStatus {
    let remaining = match flow.as_ref() {
        Some(f) => f.control.max_steps.saturating_sub(f.state.steps),
        None => 0,
    };
    lagflow_flow_step(flow, remaining, converged)
}

/// # Safety
/// `flow` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_monitors(flow: *const LagflowFlow, out: *mut LagflowMonitors) -> LagflowStatus {
    guard(|| {
        let f = handle(flow)?;
        let dt = f.state.dt_history.last().copied().unwrap_or(0.0);
        let r = monitor_row(&f.state, dt);
        let row = LagflowMonitors {
            step: r.step,
            t: r.t,
            dt: r.dt,
            min_f: r.min_f,
            max_f: r.max_f,
            osc_f: r.osc_f,
            lambda1_min: r.lambda1_min,
            lambda1_max: r.lambda1_max,
            oblique_min: r.oblique_min,
            hess_min: r.hess_min,
            hess_max: r.hess_max,
            bc_residual_max: r.bc_residual_max,
        };
        put(out, row, "out")
    })
}

/// Whether every a priori estimate holds on the current slice.
///
/// # Safety
/// `flow` must be a live handle; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_estimates_passed(flow: *const LagflowFlow, passed: *mut c_int) -> LagflowStatus {
    guard(|| {
        let f = handle(flow)?;
        let report = estimate_report(&f.state, monitor_tolerance(f.state.grid()), f.control.tol_boundary);
        put(passed, c_int::from(report.all_passed()), "passed")
    })
}

/// Number of grid nodes.
///
/// # Safety
/// `flow` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_node_count(flow: *const LagflowFlow) -> usize {
    flow.as_ref().map_or(0, |f| f.state.grid().node_count())
}

/// Mean phase of the current slice: the estimate of the translation speed `c`.
///
/// # Safety
/// `flow` must be a live handle; `c` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_speed(flow: *const LagflowFlow, c: *mut f64) -> LagflowStatus {
    guard(|| {
        let f = handle(flow)?;
        put(c, f.state.jets.mean_phase(), "c")
    })
}

/// Copies node positions (`x`, `y` interleaved, `2·node_count` entries) and
/// values (`node_count` entries). Either buffer may be null.
///
/// # Safety
/// Non-null buffers must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn lagflow_flow_nodes(
    flow: *const LagflowFlow,
    positions: *mut f64,
    values: *mut f64,
    len: usize,
) -> LagflowStatus {
    guard(|| {
        let f = handle(flow)?;
        let grid = f.state.grid();
        let n = grid.node_count();
        if len != n {
            return Err(Error::InvalidInput(format!("buffer length {len} does not match {n} nodes")).into());
        }
        if !positions.is_null() {
            let pos = std::slice::from_raw_parts_mut(positions, 2 * n);
            for i in 0..n {
                let p = grid.node_position(i);
                pos[2 * i] = p[0];
                pos[2 * i + 1] = p[1];
            }
        }
        if !values.is_null() {
            std::slice::from_raw_parts_mut(values, n).copy_from_slice(&f.state.field.values);
        }
        Ok(())
    })
}

/// Newton solve of the steady problem from the current slice.
///
/// # Safety
/// `flow` must be a live handle; `c` and `converged` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lagflow_steady_from_flow(flow: *const LagflowFlow, c: *mut f64, converged: *mut c_int) -> LagflowStatus {
    guard(|| {
        let f = handle(flow)?;
        if c.is_null() || converged.is_null() {
            return Err(Failure::Null("c/converged"));
        }
        let sol = solve_steady(&f.state.omega_tilde, &f.state.field, &f.steady)?;
        c.write(sol.c);
        converged.write(c_int::from(sol.converged));
        Ok(())
    })
}

/// Same as the `lagflow` binary: runs `mode` (null: the configured mode) and
/// writes artifacts under `out_dir`. `passed` receives the exit-status verdict.
///
/// # Safety
/// Strings must be NUL-terminated; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lagflow_run_config(
    config_path: *const c_char,
    mode: *const c_char,
    out_dir: *const c_char,
    passed: *mut c_int,
) -> LagflowStatus {
    guard(|| {
        let path = text(config_path, "config_path")?;
        let out = text(out_dir, "out_dir")?;
        let mode = if mode.is_null() {
            None
        } else {
            Some(text(mode, "mode")?.parse::<Mode>().map_err(Error::InvalidInput)?)
        };
        let cfg = RunConfig::load(Path::new(path), &[])?;
        let outcome = execute(mode, &cfg, Path::new(out))?;
        put(passed, c_int::from(outcome.passed), "passed")
    })
}
