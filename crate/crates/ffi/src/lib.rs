//! C ABI for running the crowd-flow pipeline.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a [`CfStatus`];
//! on failure [`cf_last_error`] describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use crowdflow::eval::EvalReport;
use crowdflow::pipeline::{run_pipeline, PipelineConfig, StageName};
use crowdflow::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InsufficientData = 4,
    Scenario = 5,
    UndefinedMetric = 6,
    Format = 7,
    MissingInput = 8,
    Io = 9,
    Json = 10,
    Panic = 11,
}

impl CfStatus {
    fn of(e: &Error) -> Self {
        match e.kind() {
            "config" => CfStatus::Config,
            "insufficient_data" => CfStatus::InsufficientData,
            "scenario" => CfStatus::Scenario,
            "undefined_metric" => CfStatus::UndefinedMetric,
            "format" => CfStatus::Format,
            "missing_input" => CfStatus::MissingInput,
            "io" => CfStatus::Io,
            _ => CfStatus::Json,
        }
    }
}

/// Pipeline configuration.
pub struct CfConfig {
    inner: PipelineConfig,
}

/// Evaluation report of a completed run.
pub struct CfReport {
    inner: EvalReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CfStatus, msg: impl Into<String>) -> CfStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> CfStatus) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CfStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CfStatus> {
    if p.is_null() {
        return Err(fail(CfStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CfStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

macro_rules! try_arg {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:literal) => {
        if $p.is_null() {
            return fail(CfStatus::NullArgument, concat!($what, " is null"));
        }
    };
}

/// Message of the last error on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// A configuration with every parameter at its default.
#[no_mangle]
pub extern "C" fn cf_config_default() -> *mut CfConfig {
    Box::into_raw(Box::new(CfConfig {
        inner: PipelineConfig::default(),
    }))
}

/// Parse a JSON configuration document; missing keys take their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_config_from_json(json: *const c_char, out: *mut *mut CfConfig) -> CfStatus {
    guard(|| {
        non_null!(out, "out");
        let text = try_arg!(str_arg(json, "json"));
        match serde_json::from_str::<PipelineConfig>(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CfConfig { inner }));
                CfStatus::Ok
            }
            Err(e) => fail(CfStatus::Json, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_config_free(cfg: *mut CfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn cf_config_set_seed(cfg: *mut CfConfig, seed: u64) -> CfStatus {
    non_null!(cfg, "cfg");
    (*cfg).inner.seed = Some(seed);
    CfStatus::Ok
}

/// Select a built-in scenario for the simulate stage.
///
/// # Safety
/// `cfg` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cf_config_set_preset(cfg: *mut CfConfig, name: *const c_char) -> CfStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        let name = try_arg!(str_arg(name, "name"));
        let sim = &mut (*cfg).inner.simulate;
        sim.preset = Some(name.to_string());
        sim.scenario = None;
        CfStatus::Ok
    })
}

/// Enable or disable a stage by name (`simulate`, `frontend`, `flow`,
/// `graph`, `semantics`, `eval`).
///
/// # Safety
/// `cfg` must be a live handle and `stage` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cf_config_set_stage(cfg: *mut CfConfig, stage: *const c_char, enabled: bool) -> CfStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        let name = try_arg!(str_arg(stage, "stage"));
        match name.parse::<StageName>() {
            Ok(s) => {
                (*cfg).inner.stages.set(s, enabled);
                CfStatus::Ok
            }
            Err(e) => fail(CfStatus::of(&e), e.to_string()),
        }
    })
}

/// Run the enabled stages, writing artifacts under `out_dir`.
///
/// When the run includes evaluation, `*report` receives a new report handle;
/// otherwise it is set to null. On failure the error record is also written
/// to `out_dir/error.json`.
///
/// # Safety
/// `cfg` must be a live handle, `out_dir` a NUL-terminated string and
/// `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_run_pipeline(
    cfg: *const CfConfig,
    out_dir: *const c_char,
    report: *mut *mut CfReport,
) -> CfStatus {
    guard(|| {
        non_null!(cfg, "cfg");
        non_null!(report, "report");
        *report = ptr::null_mut();
        let out = PathBuf::from(try_arg!(str_arg(out_dir, "out_dir")));
        match run_pipeline(&(*cfg).inner, &out) {
            Ok(summary) => {
                if let Some(inner) = summary.eval {
                    *report = Box::into_raw(Box::new(CfReport { inner }));
                }
                CfStatus::Ok
            }
            Err(f) => fail(CfStatus::of(&f.error), f.to_string()),
        }
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_report_free(report: *mut CfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Vertex and edge counts of the estimated and the truth graph.
///
/// # Safety
/// `report` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cf_report_counts(
    report: *const CfReport,
    est_vertices: *mut usize,
    est_edges: *mut usize,
    truth_vertices: *mut usize,
    truth_edges: *mut usize,
) -> CfStatus {
    non_null!(report, "report");
    let r = &(*report).inner;
    for (p, v) in [
        (est_vertices, r.est_vertices),
        (est_edges, r.est_edges),
        (truth_vertices, r.truth_vertices),
        (truth_edges, r.truth_edges),
    ] {
        non_null!(p, "count output");
        *p = v;
    }
    CfStatus::Ok
}

/// Mean one-sided chamfer distance, meters.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_report_d_avg(report: *const CfReport, out: *mut f64) -> CfStatus {
    non_null!(report, "report");
    non_null!(out, "out");
    *out = (*report).inner.d_avg;
    CfStatus::Ok
}

unsafe fn optional(report: *const CfReport, out: *mut f64, pick: fn(&EvalReport) -> Option<f64>, what: &str) -> CfStatus {
    non_null!(report, "report");
    non_null!(out, "out");
    match pick(&(*report).inner) {
        Some(v) => {
            *out = v;
            CfStatus::Ok
        }
        None => fail(CfStatus::UndefinedMetric, format!("{what} is undefined for this run")),
    }
}

/// Edge orientation MAE in degrees; `UndefinedMetric` without associated edges.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_report_orientation_mae(report: *const CfReport, out: *mut f64) -> CfStatus {
    optional(report, out, |r| r.orientation_mae, "orientation MAE")
}

/// Split-ratio MAE; `UndefinedMetric` when no split is comparable.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_report_split_mae(report: *const CfReport, out: *mut f64) -> CfStatus {
    optional(report, out, |r| r.split_mae, "split MAE")
}

/// The full report as a JSON string, released with [`cf_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_report_to_json(report: *const CfReport, out: *mut *mut c_char) -> CfStatus {
    guard(|| {
        non_null!(report, "report");
        non_null!(out, "out");
        match serde_json::to_string(&(*report).inner) {
            Ok(s) => {
                *out = CString::new(s).unwrap_or_default().into_raw();
                CfStatus::Ok
            }
            Err(e) => fail(CfStatus::Json, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
