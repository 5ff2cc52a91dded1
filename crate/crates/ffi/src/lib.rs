//! C interface to the online solver.
//!
//! Instances and reports are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns an
//! [`OmapfStatus`]; on failure [`omapf_last_error`] describes the problem.
//! Strings returned to the caller are freed with [`omapf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use omapf::io;
use omapf::sim::RunFailure;
use omapf::{Error, GridMap, HeuristicKind, OnlineInstance, RunReport, SolverConfig, Variant};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmapfStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, unknown solver name and similar.
    InvalidArgument = 1,
    Parse = 2,
    Io = 3,
    /// The run finished without a plan for some iteration.
    Unsolvable = 4,
    Timeout = 5,
    Internal = 6,
    /// A panic was caught at the boundary.
    Panic = 7,
}

/// A loaded online instance.
pub struct OmapfInstance {
    inner: OnlineInstance,
}

/// The outcome of one online run.
pub struct OmapfReport {
    inner: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> OmapfStatus {
    match e {
        Error::Io { .. } => OmapfStatus::Io,
        Error::Parse { .. } => OmapfStatus::Parse,
        Error::Unsolvable(_) => OmapfStatus::Unsolvable,
        Error::Timeout => OmapfStatus::Timeout,
        Error::Usage(_) => OmapfStatus::InvalidArgument,
        _ => OmapfStatus::Internal,
    }
}

struct Fail(OmapfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OmapfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OmapfStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside omapf");
            OmapfStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(OmapfStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(OmapfStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(OmapfStatus::InvalidArgument, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(OmapfStatus::InvalidArgument, format!("{what} is null")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn omapf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn omapf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a map file and a scenario file.
///
/// # Safety
/// `map_path` and `scen_path` must be NUL-terminated strings and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn omapf_instance_load(
    map_path: *const c_char,
    scen_path: *const c_char,
    out: *mut *mut OmapfInstance,
) -> OmapfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let map = text(map_path, "map_path")?;
        let scen = text(scen_path, "scen_path")?;
        let inner = io::load_instance(Path::new(map), Path::new(scen))?;
        *out = Box::into_raw(Box::new(OmapfInstance { inner }));
        Ok(())
    })
}

/// Builds an instance from map and scenario text held in memory.
///
/// # Safety
/// `map_text` and `scen_text` must be NUL-terminated strings and `out` a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn omapf_instance_from_text(
    map_text: *const c_char,
    scen_text: *const c_char,
    out: *mut *mut OmapfInstance,
) -> OmapfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let graph = GridMap::parse(text(map_text, "map_text")?, "<map>")?.to_graph();
        let agents = io::parse_scenario(text(scen_text, "scen_text")?, "<scenario>", &graph)?;
        let inner = OnlineInstance::new("instance", graph, agents)?;
        *out = Box::into_raw(Box::new(OmapfInstance { inner }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from an `omapf_instance_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn omapf_instance_num_agents(instance: *const OmapfInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.agents.len())
}

/// # Safety
/// `instance` must come from an `omapf_instance_*` constructor or be null,
/// and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn omapf_instance_free(instance: *mut OmapfInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Runs every replanning iteration of `instance`.
///
/// `solver` is one of `a1`..`a4`, `heuristic` is `manhattan` or `exact`
/// (null picks `manhattan`), and a non-positive `time_limit` means no limit.
/// A report is written to `out` even when the run times out or hits an
/// unsolvable iteration; the status then says which.
///
/// # Safety
/// `instance` must be a live handle, `solver` a NUL-terminated string,
/// `heuristic` null or NUL-terminated, and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn omapf_solve(
    instance: *const OmapfInstance,
    solver: *const c_char,
    heuristic: *const c_char,
    time_limit: f64,
    out: *mut *mut OmapfReport,
) -> OmapfStatus {
    let mut ran = OmapfStatus::Ok;
    let status = guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let instance = &handle(instance, "instance")?.inner;
        let variant: Variant = text(solver, "solver")?.parse()?;
        let heuristic: HeuristicKind = if heuristic.is_null() {
            HeuristicKind::Manhattan
        } else {
            text(heuristic, "heuristic")?.parse()?
        };
        heuristic.validate(&instance.graph)?;
        let config = SolverConfig {
            variant,
            heuristic,
            time_limit: time_limit.max(0.0),
            seed: 0,
        };
        let inner = omapf::run_online(instance, &config)?;
        ran = match inner.failure {
            None => OmapfStatus::Ok,
            Some(RunFailure::Timeout) => OmapfStatus::Timeout,
            Some(RunFailure::Unsolvable) => OmapfStatus::Unsolvable,
        };
        *out = Box::into_raw(Box::new(OmapfReport { inner }));
        Ok(())
    });
    if status == OmapfStatus::Ok && ran != OmapfStatus::Ok {
        set_error(if ran == OmapfStatus::Timeout { "time limit reached" } else { "an iteration has no conflict-free plan" });
        return ran;
    }
    status
}

/// `OMAPF_STATUS_OK`, `TIMEOUT` or `UNSOLVABLE` for the run behind `report`.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_status(report: *const OmapfReport) -> OmapfStatus {
    match report.as_ref() {
        None => OmapfStatus::InvalidArgument,
        Some(r) => match r.inner.failure {
            None => OmapfStatus::Ok,
            Some(RunFailure::Timeout) => OmapfStatus::Timeout,
            Some(RunFailure::Unsolvable) => OmapfStatus::Unsolvable,
        },
    }
}

/// Number of completed replanning iterations.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_num_iterations(report: *const OmapfReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.iterations.len())
}

/// Replanning time and sum of costs of iteration `index`.
///
/// # Safety
/// `report` must be a live handle; `time` and `soc` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_iteration(
    report: *const OmapfReport,
    index: usize,
    time: *mut u32,
    soc: *mut u64,
) -> OmapfStatus {
    guard(|| {
        let report = &handle(report, "report")?.inner;
        let it = report.iterations.get(index).ok_or_else(|| {
            Fail(
                OmapfStatus::InvalidArgument,
                format!("iteration {index} out of range ({} completed)", report.iterations.len()),
            )
        })?;
        *out_ptr(time, "time")? = it.t;
        *out_ptr(soc, "soc")? = it.soc;
        Ok(())
    })
}

/// Wall-clock seconds of the run; the limit itself after a timeout.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_total_time(report: *const OmapfReport) -> f64 {
    report.as_ref().map_or(0.0, |r| r.inner.total_time_s)
}

/// Low-level expansions summed over the run.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_expansions(report: *const OmapfReport) -> u64 {
    report.as_ref().map_or(0, |r| r.inner.total_expansions())
}

/// The full report as JSON; free with [`omapf_string_free`].
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_to_json(report: *const OmapfReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => into_c_string(r.inner.to_json()),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    }
}

/// One JSON line per iteration with every agent's plan; free with
/// [`omapf_string_free`].
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_plan_dump(report: *const OmapfReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => into_c_string(r.inner.plan_dump()),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `report` must come from [`omapf_solve`] or be null, and must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn omapf_report_free(report: *mut OmapfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn omapf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
