//! C interface over the alignment metrics, the loss calculators, and the
//! evaluation report. Array arguments are borrowed for the duration of the
//! call; the report handle and rendered strings are owned by the caller and
//! must be released with the matching `_free` function.

use std::ffi::{c_char, CString};
use std::slice;

use alignlab::eval::{build_report, render, RenderFormat, Report};
use alignlab::export::{dpo_loss, sft_loss, DpoConfig, LogProbSequence, SequenceOwner};
use alignlab::gateway::cosine;
use alignlab::metrics::{cohen_kappa, fit_ir, normalize_al, AlignmentCurve, CaseScores};

/// Result code returned by every fallible function in this interface.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignlabStatus {
    /// The call succeeded and all output parameters were written.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The inputs were structurally invalid (empty, mismatched lengths,
    /// out-of-range ratings, positive log probabilities, and so on).
    InvalidArgument = 2,
    /// The render format code was not one of the documented values.
    InvalidFormat = 3,
}

/// Opaque evaluation report produced by `alignlab_report_new`.
pub struct AlignlabReport {
    inner: Report,
}

/// Renders the per-turn table form of a report.
pub const ALIGNLAB_RENDER_TABLE: i32 = 0;
/// Renders the machine-readable CSV form of a report.
pub const ALIGNLAB_RENDER_CSV: i32 = 1;
/// Renders the tab-separated plot data form of a report.
pub const ALIGNLAB_RENDER_PLOTDATA: i32 = 2;

unsafe fn borrow<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

fn policy(values: &[f64]) -> Option<LogProbSequence> {
    LogProbSequence::new(SequenceOwner::Policy, values.to_vec()).ok()
}

fn reference(values: &[f64]) -> Option<LogProbSequence> {
    LogProbSequence::new(SequenceOwner::Reference, values.to_vec()).ok()
}

/// Fits the least-squares line through `(k, values[k-1])` and writes the
/// slope, intercept, and coefficient of determination.
///
/// # Safety
/// `values` must point to `len` readable doubles; the three output pointers
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_fit_ir(
    values: *const f64,
    len: usize,
    slope_out: *mut f64,
    intercept_out: *mut f64,
    r_squared_out: *mut f64,
) -> AlignlabStatus {
    if slope_out.is_null() || intercept_out.is_null() || r_squared_out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let Some(values) = borrow(values, len) else {
        return AlignlabStatus::NullPointer;
    };
    let curve = AlignmentCurve::new(values.to_vec(), 1);
    match fit_ir(&curve) {
        Ok(fit) => {
            *slope_out = fit.slope;
            *intercept_out = fit.intercept;
            *r_squared_out = fit.r_squared;
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Min-max normalizes a per-turn series into `[0, 1]` using its global
/// extrema, writing `len` doubles to `out`. A flat series normalizes to all
/// zeros.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to `len` writable
/// doubles; the ranges must not overlap.
#[no_mangle]
pub unsafe extern "C" fn alignlab_normalize_al(
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> AlignlabStatus {
    if out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let Some(values) = borrow(values, len) else {
        return AlignlabStatus::NullPointer;
    };
    if values.is_empty() {
        return AlignlabStatus::InvalidArgument;
    }
    let normalized = normalize_al(&AlignmentCurve::new(values.to_vec(), 1));
    let out = slice::from_raw_parts_mut(out, len);
    out.copy_from_slice(&normalized.values);
    AlignlabStatus::Ok
}

/// Computes Cohen's kappa between two aligned vectors of 1-5 ratings.
///
/// # Safety
/// `a` and `b` must each point to `len` readable 64-bit integers; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_cohen_kappa(
    a: *const i64,
    b: *const i64,
    len: usize,
    out: *mut f64,
) -> AlignlabStatus {
    if out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let (Some(a), Some(b)) = (borrow(a, len), borrow(b, len)) else {
        return AlignlabStatus::NullPointer;
    };
    match cohen_kappa(a, b) {
        Ok(kappa) => {
            *out = kappa;
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Computes the cosine similarity of two equal-length vectors.
///
/// # Safety
/// `a` and `b` must each point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_cosine(
    a: *const f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
) -> AlignlabStatus {
    if out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let (Some(a), Some(b)) = (borrow(a, len), borrow(b, len)) else {
        return AlignlabStatus::NullPointer;
    };
    match cosine(a, b) {
        Ok(value) => {
            *out = value;
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Computes the supervised fine-tuning loss, the negated sum of the
/// per-token log probabilities of the target. All inputs must be `<= 0`.
///
/// # Safety
/// `target_logprobs` must point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_sft_loss(
    target_logprobs: *const f64,
    len: usize,
    out: *mut f64,
) -> AlignlabStatus {
    if out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let Some(values) = borrow(target_logprobs, len) else {
        return AlignlabStatus::NullPointer;
    };
    let Some(sequence) = policy(values) else {
        return AlignlabStatus::InvalidArgument;
    };
    match sft_loss(&sequence) {
        Ok(loss) => {
            *out = loss;
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Computes the preference loss over `len` paired turns. Each array holds
/// one summed log probability per turn; `beta` must be positive.
///
/// # Safety
/// The four sequence pointers must each point to `len` readable doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_dpo_loss(
    policy_chosen: *const f64,
    reference_chosen: *const f64,
    policy_rejected: *const f64,
    reference_rejected: *const f64,
    len: usize,
    beta: f64,
    out: *mut f64,
) -> AlignlabStatus {
    if out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let (Some(pc), Some(rc), Some(pr), Some(rr)) = (
        borrow(policy_chosen, len),
        borrow(reference_chosen, len),
        borrow(policy_rejected, len),
        borrow(reference_rejected, len),
    ) else {
        return AlignlabStatus::NullPointer;
    };
    let Ok(config) = DpoConfig::new(beta) else {
        return AlignlabStatus::InvalidArgument;
    };
    let (Some(pc), Some(rc), Some(pr), Some(rr)) =
        (policy(pc), reference(rc), policy(pr), reference(rr))
    else {
        return AlignlabStatus::InvalidArgument;
    };
    match dpo_loss(&pc, &rc, &pr, &rr, &config) {
        Ok(result) => {
            *out = result.loss;
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Builds an evaluation report from a row-major `case_count x turns` matrix
/// of 1-5 ratings and stores a handle in `out`. Release the handle with
/// `alignlab_report_free`.
///
/// # Safety
/// `scores` must point to `case_count * turns` readable 64-bit integers;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_new(
    scores: *const i64,
    case_count: usize,
    turns: usize,
    out: *mut *mut AlignlabReport,
) -> AlignlabStatus {
    if out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let Some(total) = case_count.checked_mul(turns) else {
        return AlignlabStatus::InvalidArgument;
    };
    let Some(scores) = borrow(scores, total) else {
        return AlignlabStatus::NullPointer;
    };
    let cases: Vec<CaseScores> = scores
        .chunks(turns.max(1))
        .enumerate()
        .map(|(i, row)| CaseScores::new(format!("case-{:03}", i + 1), row.to_vec()))
        .collect();
    match build_report(&cases, turns, 0) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(AlignlabReport { inner: report }));
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Returns the number of turns in the report, or 0 for a null handle.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new` or null.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_turns(report: *const AlignlabReport) -> usize {
    if report.is_null() {
        return 0;
    }
    let report = &*report;
    report.inner.al_by_turn.turns()
}

/// Writes the mean alignment score at the zero-based turn `index`.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new`; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_al(
    report: *const AlignlabReport,
    index: usize,
    out: *mut f64,
) -> AlignlabStatus {
    if report.is_null() || out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let report = &*report;
    match report.inner.al_by_turn.values.get(index) {
        Some(value) => {
            *out = *value;
            AlignlabStatus::Ok
        }
        None => AlignlabStatus::InvalidArgument,
    }
}

/// Writes the mean alignment score over all turns.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new`; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_average(
    report: *const AlignlabReport,
    out: *mut f64,
) -> AlignlabStatus {
    if report.is_null() || out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let report = &*report;
    *out = report.inner.average_al;
    AlignlabStatus::Ok
}

unsafe fn write_fit(
    fit: &alignlab::metrics::RegressionFit,
    slope_out: *mut f64,
    intercept_out: *mut f64,
    r_squared_out: *mut f64,
) -> AlignlabStatus {
    if slope_out.is_null() || intercept_out.is_null() || r_squared_out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    *slope_out = fit.slope;
    *intercept_out = fit.intercept;
    *r_squared_out = fit.r_squared;
    AlignlabStatus::Ok
}

/// Writes the raw-scale regression fit of the report.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new`; the three output
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_ir(
    report: *const AlignlabReport,
    slope_out: *mut f64,
    intercept_out: *mut f64,
    r_squared_out: *mut f64,
) -> AlignlabStatus {
    if report.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let report = &*report;
    write_fit(&report.inner.ir, slope_out, intercept_out, r_squared_out)
}

/// Writes the min-max normalized regression fit of the report.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new`; the three output
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_n_ir(
    report: *const AlignlabReport,
    slope_out: *mut f64,
    intercept_out: *mut f64,
    r_squared_out: *mut f64,
) -> AlignlabStatus {
    if report.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let report = &*report;
    write_fit(
        &report.inner.n_ir,
        slope_out,
        intercept_out,
        r_squared_out,
    )
}

/// Renders the report in the given format (`ALIGNLAB_RENDER_TABLE`,
/// `ALIGNLAB_RENDER_CSV`, or `ALIGNLAB_RENDER_PLOTDATA`) and stores a
/// NUL-terminated string in `out`. Release it with `alignlab_string_free`.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new`; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_render(
    report: *const AlignlabReport,
    format: i32,
    out: *mut *mut c_char,
) -> AlignlabStatus {
    if report.is_null() || out.is_null() {
        return AlignlabStatus::NullPointer;
    }
    let format = match format {
        ALIGNLAB_RENDER_TABLE => RenderFormat::Table,
        ALIGNLAB_RENDER_CSV => RenderFormat::Csv,
        ALIGNLAB_RENDER_PLOTDATA => RenderFormat::Plotdata,
        _ => return AlignlabStatus::InvalidFormat,
    };
    let report = &*report;
    let rendered = render(&report.inner, format);
    match CString::new(rendered) {
        Ok(string) => {
            *out = string.into_raw();
            AlignlabStatus::Ok
        }
        Err(_) => AlignlabStatus::InvalidArgument,
    }
}

/// Releases a report handle. Passing null is a no-op.
///
/// # Safety
/// `report` must be a handle from `alignlab_report_new` that has not already
/// been freed, or null.
#[no_mangle]
pub unsafe extern "C" fn alignlab_report_free(report: *mut AlignlabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by `alignlab_report_render`. Passing null is a
/// no-op.
///
/// # Safety
/// `string` must be a pointer from `alignlab_report_render` that has not
/// already been freed, or null.
#[no_mangle]
pub unsafe extern "C" fn alignlab_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(CString::from_raw(string));
    }
}

/// Returns a static name for a status code, for log messages. Unknown codes
/// map to "unknown status".
#[no_mangle]
pub extern "C" fn alignlab_status_name(status: i32) -> *const c_char {
    let name: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer\0",
        2 => b"invalid argument\0",
        3 => b"invalid format\0",
        _ => b"unknown status\0",
    };
    name.as_ptr() as *const c_char
}
