//! C interface: analyse one R source buffer, read counters from the
//! result, and run the two-sample tests.
//!
//! Every function returns a status code and never unwinds across the
//! boundary. Handles are opaque and owned by the caller until freed.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use ranatomy::corpus::{process_file, Category, DataflowFailure, FileSource, FileStatus, ManifestEntry, ProcessOptions};
use ranatomy::stats::{fisher_exact_2x2, mann_whitney, phi_coefficient, ContingencyTable2x2};
use ranatomy::syntax::FailureCategory;
use serde_json::Value;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RanatomyStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    /// The source did not parse; the handle is still filled in.
    ParseFailed = 3,
    /// Resource limit, time budget or an internal fault; handle filled in.
    DataflowFailed = 4,
    NotFound = 5,
    Panic = 6,
}

/// Outcome class of an analysis.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RanatomyOutcome {
    Ok = 0,
    NotRCode = 1,
    EncodingError = 2,
    DocumentationCommand = 3,
    RawSyntaxError = 4,
    ResourceLimit = 5,
    Timeout = 6,
    Crash = 7,
    Unreadable = 8,
}

/// Opaque analysis result.
pub struct RanatomyAnalysis {
    outcome: RanatomyOutcome,
    value: Value,
    json: CString,
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version string"),
};

fn guard(f: impl FnOnce() -> RanatomyStatus) -> RanatomyStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(RanatomyStatus::Panic)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ranatomy_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ranatomy_status_message(status: RanatomyStatus) -> *const c_char {
    let s: &'static CStr = match status {
        RanatomyStatus::Ok => c"ok",
        RanatomyStatus::NullArgument => c"null argument",
        RanatomyStatus::InvalidArgument => c"invalid argument",
        RanatomyStatus::ParseFailed => c"parse failed",
        RanatomyStatus::DataflowFailed => c"dataflow failed",
        RanatomyStatus::NotFound => c"not found",
        RanatomyStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

fn outcome_of(status: &FileStatus) -> RanatomyOutcome {
    match status {
        FileStatus::Ok => RanatomyOutcome::Ok,
        FileStatus::ParseFailed(f) => match f.category {
            FailureCategory::NotRCode => RanatomyOutcome::NotRCode,
            FailureCategory::EncodingError => RanatomyOutcome::EncodingError,
            FailureCategory::DocumentationCommand => RanatomyOutcome::DocumentationCommand,
            FailureCategory::RawSyntaxError => RanatomyOutcome::RawSyntaxError,
        },
        FileStatus::DataflowFailed(d) => match d {
            DataflowFailure::ResourceLimit { .. } => RanatomyOutcome::ResourceLimit,
            DataflowFailure::Timeout { .. } => RanatomyOutcome::Timeout,
            DataflowFailure::Crash { .. } => RanatomyOutcome::Crash,
            DataflowFailure::Unreadable { .. } => RanatomyOutcome::Unreadable,
        },
    }
}

/// Parse, build the dataflow graph and take the feature census of
/// `source[0..len]`. On `OK`, `PARSE_FAILED` and `DATAFLOW_FAILED` a handle
/// is stored in `*out`; release it with `ranatomy_analysis_free`.
///
/// # Safety
/// `source` must point to `len` readable bytes (or be null with `len` 0);
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_analyze(
    source: *const u8,
    len: usize,
    out: *mut *mut RanatomyAnalysis,
) -> RanatomyStatus {
    if out.is_null() || (source.is_null() && len > 0) {
        return RanatomyStatus::NullArgument;
    }
    *out = ptr::null_mut();
    guard(|| {
        let bytes: &[u8] = if len == 0 { &[] } else { std::slice::from_raw_parts(source, len) };
        let entry = ManifestEntry {
            path: String::new(),
            category: Category::Default,
            bytes: len as u64,
            package: None,
            read_error: None,
            source: FileSource::Memory(Arc::from(bytes)),
        };
        let record = process_file(&entry, &ProcessOptions::default());
        let outcome = outcome_of(&record.status);
        let value = serde_json::json!({ "status": record.status, "report": record.report });
        let json = CString::new(value.to_string()).expect("JSON has no NUL");
        *out = Box::into_raw(Box::new(RanatomyAnalysis { outcome, value, json }));
        match outcome {
            RanatomyOutcome::Ok => RanatomyStatus::Ok,
            RanatomyOutcome::NotRCode
            | RanatomyOutcome::EncodingError
            | RanatomyOutcome::DocumentationCommand
            | RanatomyOutcome::RawSyntaxError => RanatomyStatus::ParseFailed,
            _ => RanatomyStatus::DataflowFailed,
        }
    })
}

/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_analysis_outcome(analysis: *const RanatomyAnalysis) -> RanatomyOutcome {
    match analysis.as_ref() {
        Some(a) => a.outcome,
        None => RanatomyOutcome::Crash,
    }
}

/// `{"status": ..., "report": ...}` as JSON, owned by the handle.
///
/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_analysis_json(analysis: *const RanatomyAnalysis) -> *const c_char {
    match analysis.as_ref() {
        Some(a) => a.json.as_ptr(),
        None => ptr::null(),
    }
}

/// Read one report value by JSON pointer, e.g. `/loops/for_count` or
/// `/fun_defs/hook_defs/.onLoad`. Booleans read as 0/1, lists as their
/// length. `NOT_FOUND` for a missing key or a failed analysis.
///
/// # Safety
/// `analysis` must be a live handle, `pointer` a NUL-terminated string and
/// `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_analysis_get(
    analysis: *const RanatomyAnalysis,
    pointer: *const c_char,
    value: *mut f64,
) -> RanatomyStatus {
    let (Some(a), false, false) = (analysis.as_ref(), pointer.is_null(), value.is_null()) else {
        return RanatomyStatus::NullArgument;
    };
    guard(|| {
        let Ok(pointer) = CStr::from_ptr(pointer).to_str() else {
            return RanatomyStatus::InvalidArgument;
        };
        let found = a.value.get("report").and_then(|r| r.pointer(pointer));
        let v = match found {
            Some(Value::Number(n)) => n.as_f64(),
            Some(Value::Bool(b)) => Some(*b as u8 as f64),
            Some(Value::Array(items)) => Some(items.len() as f64),
            _ => None,
        };
        match v {
            Some(v) => {
                *value = v;
                RanatomyStatus::Ok
            }
            None => RanatomyStatus::NotFound,
        }
    })
}

/// # Safety
/// `analysis` must be null or a handle from `ranatomy_analyze` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_analysis_free(analysis: *mut RanatomyAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Two-sided Fisher exact p for [[a, b], [c, d]] and the phi coefficient
/// (NaN when a margin is zero).
///
/// # Safety
/// `p_value` and `phi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_fisher_exact(
    a: u64,
    b: u64,
    c: u64,
    d: u64,
    p_value: *mut f64,
    phi: *mut f64,
) -> RanatomyStatus {
    if p_value.is_null() || phi.is_null() {
        return RanatomyStatus::NullArgument;
    }
    guard(|| {
        let t = ContingencyTable2x2::new(a, b, c, d);
        *p_value = fisher_exact_2x2(t);
        *phi = phi_coefficient(t).unwrap_or(f64::NAN);
        RanatomyStatus::Ok
    })
}

/// Two-sided Mann-Whitney U test; `u` is the statistic of `xs`.
///
/// # Safety
/// `xs`/`ys` must point to `nx`/`ny` readable doubles; `u` and `p_value`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ranatomy_mann_whitney(
    xs: *const f64,
    nx: usize,
    ys: *const f64,
    ny: usize,
    u: *mut f64,
    p_value: *mut f64,
) -> RanatomyStatus {
    if xs.is_null() || ys.is_null() || u.is_null() || p_value.is_null() {
        return RanatomyStatus::NullArgument;
    }
    if nx == 0 || ny == 0 {
        return RanatomyStatus::InvalidArgument;
    }
    guard(|| {
        let (xs, ys) = (std::slice::from_raw_parts(xs, nx), std::slice::from_raw_parts(ys, ny));
        if !xs.iter().chain(ys).all(|v| v.is_finite()) {
            return RanatomyStatus::InvalidArgument;
        }
        let r = mann_whitney(xs, ys);
        *u = r.u;
        *p_value = r.p_value;
        RanatomyStatus::Ok
    })
}
