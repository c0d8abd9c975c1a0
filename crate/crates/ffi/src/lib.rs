//! C interface to the simulator.
//!
//! Scenarios and traces are opaque handles created and released by this
//! library. Every fallible call returns an [`LfcStatus`]; on failure the
//! message is available from [`lfc_last_error_message`] on the same thread
//! until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lfc_core::config::load_scenario;
use lfc_core::metrics::integral_indices;
use lfc_core::output::{trace_csv, write_atomic};
use lfc_core::sim::{finite_time_estimate, run_scenario, ControllerKind, ScenarioConfig, SimTrace};
use lfc_core::LfcError;

/// Opaque scenario handle.
pub struct LfcScenario(ScenarioConfig);

/// Opaque simulation result handle.
pub struct LfcTrace(SimTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Bad scenario contents or config file syntax.
    Config = 3,
    Diverged = 4,
    Io = 5,
    OutOfRange = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LfcIndices {
    pub itae: f64,
    pub itse: f64,
    pub ise: f64,
    pub iae: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: LfcStatus, message: impl Into<String>) -> LfcStatus {
    let msg = CString::new(message.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
    status
}

fn from_core(e: LfcError) -> LfcStatus {
    let status = match e {
        LfcError::Diverged { .. } | LfcError::NonFiniteDerivative { .. } => LfcStatus::Diverged,
        LfcError::Io(_) => LfcStatus::Io,
        LfcError::InvalidParameter(_) => LfcStatus::InvalidArgument,
        _ => LfcStatus::Config,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning a panic into `LfcStatus::Internal`.
fn guard(f: impl FnOnce() -> LfcStatus) -> LfcStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(LfcStatus::Internal, "internal panic"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, LfcStatus> {
    if p.is_null() {
        return Err(fail(LfcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LfcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn scenario_mut<'a>(s: *mut LfcScenario) -> Result<&'a mut ScenarioConfig, LfcStatus> {
    s.as_mut()
        .map(|s| &mut s.0)
        .ok_or_else(|| fail(LfcStatus::NullPointer, "scenario handle is null"))
}

unsafe fn trace_ref<'a>(t: *const LfcTrace) -> Result<&'a SimTrace, LfcStatus> {
    t.as_ref()
        .map(|t| &t.0)
        .ok_or_else(|| fail(LfcStatus::NullPointer, "trace handle is null"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn lfc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Built-in scenario by name ("bench39").
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_builtin(name: *const c_char, out: *mut *mut LfcScenario) -> LfcStatus {
    guard(|| {
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        let name = tri!(text(name, "name"));
        let config = match name {
            "bench39" => lfc_core::bench39::builtin_benchmark(),
            other => return fail(LfcStatus::InvalidArgument, format!("unknown scenario '{other}'")),
        };
        *out = Box::into_raw(Box::new(LfcScenario(config)));
        LfcStatus::Ok
    })
}

/// Scenario from a config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_from_file(path: *const c_char, out: *mut *mut LfcScenario) -> LfcStatus {
    guard(|| {
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        let path = PathBuf::from(tri!(text(path, "path")));
        match load_scenario(&path) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(LfcScenario(c)));
                LfcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_free(scenario: *mut LfcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_set_dt(scenario: *mut LfcScenario, dt: f64) -> LfcStatus {
    guard(|| {
        let c = tri!(scenario_mut(scenario));
        if !(dt.is_finite() && dt > 0.0) {
            return fail(LfcStatus::InvalidArgument, format!("dt must be finite and > 0, got {dt}"));
        }
        c.dt = dt;
        LfcStatus::Ok
    })
}

/// Shortens or extends the run; scheduled steps are clipped to the new horizon.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_set_horizon(scenario: *mut LfcScenario, horizon: f64) -> LfcStatus {
    guard(|| {
        let c = tri!(scenario_mut(scenario));
        if !(horizon.is_finite() && horizon > 0.0) {
            return fail(LfcStatus::InvalidArgument, format!("horizon must be finite and > 0, got {horizon}"));
        }
        *c = c.clone().with_horizon(horizon);
        LfcStatus::Ok
    })
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_set_seed(scenario: *mut LfcScenario, seed: u64) -> LfcStatus {
    guard(|| {
        tri!(scenario_mut(scenario)).schedule.noise_seed = seed;
        LfcStatus::Ok
    })
}

/// Noise standard deviation in pu; 0 disables it.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_set_noise(scenario: *mut LfcScenario, std_dev: f64) -> LfcStatus {
    guard(|| {
        let c = tri!(scenario_mut(scenario));
        if !(std_dev.is_finite() && std_dev >= 0.0) {
            return fail(LfcStatus::InvalidArgument, format!("noise must be finite and >= 0, got {std_dev}"));
        }
        c.schedule.noise_std = std_dev;
        LfcStatus::Ok
    })
}

/// "gitsmc", "pi" or "none".
///
/// # Safety
/// `scenario` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_set_controller(scenario: *mut LfcScenario, name: *const c_char) -> LfcStatus {
    guard(|| {
        let c = tri!(scenario_mut(scenario));
        let name = tri!(text(name, "controller"));
        match ControllerKind::parse(name) {
            Ok(k) => {
                c.controller = k;
                LfcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Number of areas, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lfc_scenario_area_count(scenario: *const LfcScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.areas.len())
}

/// Simulates the scenario. On divergence returns `Diverged` and leaves `*out` untouched.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_run(scenario: *const LfcScenario, out: *mut *mut LfcTrace) -> LfcStatus {
    guard(|| {
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        let Some(s) = scenario.as_ref() else {
            return fail(LfcStatus::NullPointer, "scenario handle is null");
        };
        match run_scenario(&s.0) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(LfcTrace(t)));
                LfcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `trace` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_free(trace: *mut LfcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_len(trace: *const LfcTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_areas(trace: *const LfcTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.areas())
}

/// One state value: `area` is 0-based, `index` 0..7 in the order
/// dP_tie, df, dP_m, dE, dP_g, dP_pv, dP_wt.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_state(
    trace: *const LfcTrace,
    sample: usize,
    area: usize,
    index: usize,
    out: *mut f64,
) -> LfcStatus {
    guard(|| {
        let t = tri!(trace_ref(trace));
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        match t.samples.get(sample).and_then(|s| s.state.get(area)).and_then(|x| x.get(index)) {
            Some(v) => {
                *out = *v;
                LfcStatus::Ok
            }
            None => fail(LfcStatus::OutOfRange, format!("no value at sample {sample}, area {area}, index {index}")),
        }
    })
}

/// Time of one sample.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_time(trace: *const LfcTrace, sample: usize, out: *mut f64) -> LfcStatus {
    guard(|| {
        let t = tri!(trace_ref(trace));
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        match t.samples.get(sample) {
            Some(s) => {
                *out = s.t;
                LfcStatus::Ok
            }
            None => fail(LfcStatus::OutOfRange, format!("sample {sample} out of range")),
        }
    })
}

/// Copies one state series into `buf`, which must hold `lfc_trace_len` values.
///
/// # Safety
/// `trace` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_copy_series(
    trace: *const LfcTrace,
    area: usize,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> LfcStatus {
    guard(|| {
        let t = tri!(trace_ref(trace));
        if buf.is_null() {
            return fail(LfcStatus::NullPointer, "buf is null");
        }
        if area >= t.areas() || index >= 7 {
            return fail(LfcStatus::OutOfRange, format!("area {area} / index {index} out of range"));
        }
        if len < t.len() {
            return fail(LfcStatus::OutOfRange, format!("buffer holds {len} values, trace has {}", t.len()));
        }
        let dst = std::slice::from_raw_parts_mut(buf, t.len());
        for (d, s) in dst.iter_mut().zip(&t.samples) {
            *d = s.state[area][index];
        }
        LfcStatus::Ok
    })
}

/// ITAE, ITSE, ISE and IAE of the trace.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_indices(trace: *const LfcTrace, out: *mut LfcIndices) -> LfcStatus {
    guard(|| {
        let t = tri!(trace_ref(trace));
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        match integral_indices(t) {
            Ok(r) => {
                *out = LfcIndices {
                    itae: r.itae,
                    itse: r.itse,
                    ise: r.ise,
                    iae: r.iae,
                };
                LfcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Writes the trace in the same CSV layout as the command-line tool.
///
/// # Safety
/// `trace` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lfc_trace_write_csv(trace: *const LfcTrace, path: *const c_char) -> LfcStatus {
    guard(|| {
        let t = tri!(trace_ref(trace));
        let path = PathBuf::from(tri!(text(path, "path")));
        match write_atomic(&path, trace_csv(t).as_bytes()) {
            Ok(()) => LfcStatus::Ok,
            Err(e) => from_core(e),
        }
    })
}

/// Time for ẋ = −λ·sgn(x)|x|^α to bring |x| from `x0` down to `eps`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lfc_finite_time_estimate(x0: f64, eps: f64, lambda: f64, alpha: f64, out: *mut f64) -> LfcStatus {
    guard(|| {
        if out.is_null() {
            return fail(LfcStatus::NullPointer, "out is null");
        }
        match finite_time_estimate(x0, eps, lambda, alpha) {
            Ok(t) => {
                *out = t;
                LfcStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}
