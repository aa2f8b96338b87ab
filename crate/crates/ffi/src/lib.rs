//! C ABI over the scoring core.
//!
//! Conventions: every fallible function returns a `CrgStatus` and writes
//! results through out-pointers; `CRG_STATUS_OK` is zero. A failing call
//! stores a message retrievable with `crg_last_error_message` on the same
//! thread. Strings returned through out-pointers are owned by the caller
//! and must be released with `crg_string_free`; label matrices are opaque
//! handles released with `crg_label_matrix_free`. No function panics
//! across the boundary.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use crg_core::{
    crg_from_counts, derive_weights, io, report, run_score, AlignMode, ConfusionCounts, Error,
    LabelMatrix, ScoreRequest,
};

/// Call outcome. Zero is success; any other value leaves a message
/// readable through `crg_last_error_message`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CrgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Inputs violate a documented precondition.
    InvalidArgument = 2,
    /// The reference distribution has no positives or no negatives.
    Degenerate = 3,
    /// An input file or response body could not be parsed.
    ParseError = 4,
    /// A file could not be read or written.
    Io = 5,
    /// Unexpected internal failure.
    Internal = 6,
}

/// Scoring weights derived from a reference label distribution,
/// flattened for C callers.
#[repr(C)]
pub struct CrgWeights {
    /// Weight of a true positive (equals the false-negative weight).
    pub w_tp: f64,
    pub w_fn: f64,
    /// Always 1.
    pub w_fp: f64,
    /// Maximum achievable raw score under these weights.
    pub s_max: f64,
}

/// Opaque handle to a loaded label matrix.
pub struct CrgLabelMatrix {
    inner: LabelMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: CrgStatus, message: &str) -> CrgStatus {
    let owned = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error").expect("static message"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
    status
}

/// The full cause chain: a wrapped error is useless without the
/// underlying reason.
fn chain_text(err: &Error) -> String {
    let mut text = err.to_string();
    let mut cause = std::error::Error::source(err);
    while let Some(inner) = cause {
        text.push_str(": ");
        text.push_str(&inner.to_string());
        cause = inner.source();
    }
    text
}

fn status_of(err: &Error) -> CrgStatus {
    match err {
        Error::DegenerateNoPositives | Error::DegenerateNoNegatives => CrgStatus::Degenerate,
        Error::Io { .. } => CrgStatus::Io,
        Error::MalformedRecord { .. }
        | Error::NoStructuredObject
        | Error::NonBinaryValue { .. } => CrgStatus::ParseError,
        Error::Transport(_) | Error::ExtractionFailed { .. } => CrgStatus::Internal,
        Error::LevelFailed { source, .. } => status_of(source),
        _ => CrgStatus::InvalidArgument,
    }
}

fn fail_with(err: &Error) -> CrgStatus {
    fail(status_of(err), &chain_text(err))
}

/// Every entry point runs under this guard so a bug becomes a status
/// code instead of unwinding across the ABI.
fn guarded<F: FnOnce() -> CrgStatus>(body: F) -> CrgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(CrgStatus::Internal, "internal panic"),
    }
}

unsafe fn path_arg<'a>(raw: *const c_char) -> Result<&'a Path, CrgStatus> {
    if raw.is_null() {
        return Err(fail(CrgStatus::NullArgument, "path is null"));
    }
    match CStr::from_ptr(raw).to_str() {
        Ok(text) => Ok(Path::new(text)),
        Err(_) => Err(fail(CrgStatus::InvalidArgument, "path is not valid UTF-8")),
    }
}

/// Library version as a static NUL-terminated string; never freed by
/// the caller.
#[no_mangle]
pub extern "C" fn crg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message from the most recent failing call on this thread, or null if
/// nothing has failed yet. The pointer stays valid until the next
/// failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn crg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Releases a string previously returned through an out-pointer.
/// Passing null is a no-op.
///
/// # Safety
/// `s` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn crg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Derives the scoring weights for a reference distribution with
/// `total` cells of which `positives` are positive.
///
/// # Safety
/// `out` must point to writable memory for one `CrgWeights`.
#[no_mangle]
pub unsafe extern "C" fn crg_weights_derive(
    total: u64,
    positives: u64,
    out: *mut CrgWeights,
) -> CrgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CrgStatus::NullArgument, "out is null");
        }
        match derive_weights(total, positives) {
            Ok(weights) => {
                out.write(CrgWeights {
                    w_tp: weights.w_tp,
                    w_fn: weights.w_fn,
                    w_fp: weights.w_fp,
                    s_max: weights.s_max,
                });
                CrgStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Scores one confusion table. The result lands in [0.2, 1.0]; a
/// trivial all-negative or all-positive predictor scores exactly 1/3.
///
/// # Safety
/// `out_score` must point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn crg_score_from_counts(
    true_positives: u64,
    false_negatives: u64,
    false_positives: u64,
    true_negatives: u64,
    out_score: *mut f64,
) -> CrgStatus {
    guarded(|| {
        if out_score.is_null() {
            return fail(CrgStatus::NullArgument, "out_score is null");
        }
        let counts = ConfusionCounts::new(
            true_positives,
            false_negatives,
            false_positives,
            true_negatives,
        );
        match crg_from_counts(&counts) {
            Ok(result) => {
                out_score.write(result.score);
                CrgStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Loads a label matrix from a JSONL file (header line with the schema
/// level, then one record per sample). On success `*out` owns the
/// matrix; release it with `crg_label_matrix_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must point to
/// writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn crg_label_matrix_load(
    path: *const c_char,
    out: *mut *mut CrgLabelMatrix,
) -> CrgStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CrgStatus::NullArgument, "out is null");
        }
        let path = match path_arg(path) {
            Ok(path) => path,
            Err(status) => return status,
        };
        match io::load_label_matrix(path) {
            Ok(matrix) => {
                out.write(Box::into_raw(Box::new(CrgLabelMatrix { inner: matrix })));
                CrgStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}

/// Number of samples in the matrix; 0 for a null handle.
///
/// # Safety
/// `matrix` must be a live handle from `crg_label_matrix_load` or null.
#[no_mangle]
pub unsafe extern "C" fn crg_label_matrix_samples(matrix: *const CrgLabelMatrix) -> u64 {
    if matrix.is_null() {
        return 0;
    }
    (*matrix).inner.n_samples() as u64
}

/// 1-based schema level the matrix targets; 0 for a null handle.
///
/// # Safety
/// `matrix` must be a live handle from `crg_label_matrix_load` or null.
#[no_mangle]
pub unsafe extern "C" fn crg_label_matrix_level(matrix: *const CrgLabelMatrix) -> u64 {
    if matrix.is_null() {
        return 0;
    }
    (*matrix).inner.schema_level() as u64
}

/// Releases a matrix handle. Passing null is a no-op.
///
/// # Safety
/// `matrix` must have come from `crg_label_matrix_load` and not been
/// freed before.
#[no_mangle]
pub unsafe extern "C" fn crg_label_matrix_free(matrix: *mut CrgLabelMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Scores predictions against references and writes the full evaluation
/// report as a JSON string to `*out_json` (release it with
/// `crg_string_free`). With `lenient` set, samples present on only one
/// side are dropped with a warning instead of failing the run.
///
/// # Safety
/// `predictions` and `references` must be live handles from
/// `crg_label_matrix_load`; `out_json` must point to writable memory
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn crg_evaluate_to_json(
    predictions: *const CrgLabelMatrix,
    references: *const CrgLabelMatrix,
    lenient: bool,
    out_json: *mut *mut c_char,
) -> CrgStatus {
    guarded(|| {
        if out_json.is_null() {
            return fail(CrgStatus::NullArgument, "out_json is null");
        }
        if predictions.is_null() || references.is_null() {
            return fail(CrgStatus::NullArgument, "matrix handle is null");
        }
        let mut request = ScoreRequest::new();
        request
            .label_pairs
            .push(((*predictions).inner.clone(), (*references).inner.clone()));
        request.align_mode = if lenient {
            AlignMode::Lenient
        } else {
            AlignMode::Strict
        };
        request
            .resolved_config
            .insert("interface".to_string(), "c-abi".to_string());
        match run_score(&request) {
            Ok(evaluation) => {
                let json = report::to_json(&evaluation);
                let owned = CString::new(json.replace('\0', " ")).expect("NUL-free JSON");
                out_json.write(owned.into_raw());
                CrgStatus::Ok
            }
            Err(err) => fail_with(&err),
        }
    })
}
