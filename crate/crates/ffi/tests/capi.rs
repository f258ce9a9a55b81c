//! Exercises the C interface from Rust, including the generated header.

use std::ffi::CStr;
use std::os::raw::c_char;
use std::path::Path;
use std::ptr;

use alignlab_ffi::*;

const RISING_SERIES: [f64; 10] = [2.87, 2.94, 2.88, 3.10, 3.65, 4.13, 4.50, 4.65, 4.63, 4.70];

#[test]
fn fit_matches_published_series() {
    let mut slope = 0.0;
    let mut intercept = 0.0;
    let mut r_squared = 0.0;
    let status = unsafe {
        alignlab_fit_ir(
            RISING_SERIES.as_ptr(),
            RISING_SERIES.len(),
            &mut slope,
            &mut intercept,
            &mut r_squared,
        )
    };
    assert_eq!(status, AlignlabStatus::Ok);
    assert!((slope - 0.254).abs() <= 0.002);
    assert!((r_squared - 0.917).abs() <= 0.005);
}

#[test]
fn normalize_pins_extrema_to_unit_interval() {
    let values = [3.0, 1.0, 5.0, 4.0];
    let mut out = [0.0; 4];
    let status =
        unsafe { alignlab_normalize_al(values.as_ptr(), values.len(), out.as_mut_ptr()) };
    assert_eq!(status, AlignlabStatus::Ok);
    assert_eq!(out, [0.5, 0.0, 1.0, 0.75]);
}

#[test]
fn kappa_matches_hand_example() {
    let a = [1i64, 1, 2, 2];
    let b = [1i64, 2, 2, 2];
    let mut kappa = 0.0;
    let status = unsafe { alignlab_cohen_kappa(a.as_ptr(), b.as_ptr(), a.len(), &mut kappa) };
    assert_eq!(status, AlignlabStatus::Ok);
    assert!((kappa - 0.5).abs() < 1e-9);
}

#[test]
fn kappa_rejects_out_of_range_ratings() {
    let a = [1i64, 6];
    let b = [1i64, 2];
    let mut kappa = 0.0;
    let status = unsafe { alignlab_cohen_kappa(a.as_ptr(), b.as_ptr(), a.len(), &mut kappa) };
    assert_eq!(status, AlignlabStatus::InvalidArgument);
}

#[test]
fn cosine_of_orthogonal_vectors_is_zero() {
    let a = [1.0, 0.0];
    let b = [0.0, 1.0];
    let mut value = 1.0;
    let status = unsafe { alignlab_cosine(a.as_ptr(), b.as_ptr(), 2, &mut value) };
    assert_eq!(status, AlignlabStatus::Ok);
    assert!(value.abs() < 1e-12);
}

#[test]
fn sft_loss_negates_the_logprob_sum() {
    let logprobs = [-0.5, -1.25, -0.25];
    let mut loss = 0.0;
    let status = unsafe { alignlab_sft_loss(logprobs.as_ptr(), logprobs.len(), &mut loss) };
    assert_eq!(status, AlignlabStatus::Ok);
    assert!((loss - 2.0).abs() < 1e-12);

    let bad = [0.5];
    let status = unsafe { alignlab_sft_loss(bad.as_ptr(), bad.len(), &mut loss) };
    assert_eq!(status, AlignlabStatus::InvalidArgument);
}

#[test]
fn dpo_loss_hits_the_zero_margin_anchor() {
    let values = [-1.5; 10];
    let mut loss = 0.0;
    let status = unsafe {
        alignlab_dpo_loss(
            values.as_ptr(),
            values.as_ptr(),
            values.as_ptr(),
            values.as_ptr(),
            values.len(),
            0.9,
            &mut loss,
        )
    };
    assert_eq!(status, AlignlabStatus::Ok);
    assert!((loss - 10.0 * std::f64::consts::LN_2).abs() < 1e-9);

    let status = unsafe {
        alignlab_dpo_loss(
            values.as_ptr(),
            values.as_ptr(),
            values.as_ptr(),
            values.as_ptr(),
            values.len(),
            0.0,
            &mut loss,
        )
    };
    assert_eq!(status, AlignlabStatus::InvalidArgument);
}

#[test]
fn null_pointers_are_reported_not_dereferenced() {
    let mut out = 0.0;
    let status = unsafe { alignlab_fit_ir(ptr::null(), 4, &mut out, &mut out, &mut out) };
    assert_eq!(status, AlignlabStatus::NullPointer);
    let values = [1.0, 2.0];
    let status = unsafe {
        alignlab_fit_ir(
            values.as_ptr(),
            2,
            ptr::null_mut(),
            &mut out,
            &mut out,
        )
    };
    assert_eq!(status, AlignlabStatus::NullPointer);
    let status = unsafe { alignlab_cohen_kappa(ptr::null(), ptr::null(), 3, &mut out) };
    assert_eq!(status, AlignlabStatus::NullPointer);
}

#[test]
fn report_handle_lifecycle() {
    // Two cases over four turns, row-major.
    let scores = [1i64, 2, 3, 4, 3, 4, 5, 5];
    let mut report: *mut AlignlabReport = ptr::null_mut();
    let status = unsafe { alignlab_report_new(scores.as_ptr(), 2, 4, &mut report) };
    assert_eq!(status, AlignlabStatus::Ok);
    assert!(!report.is_null());

    unsafe {
        assert_eq!(alignlab_report_turns(report), 4);

        let mut al = 0.0;
        assert_eq!(alignlab_report_al(report, 0, &mut al), AlignlabStatus::Ok);
        assert!((al - 2.0).abs() < 1e-12);
        assert_eq!(alignlab_report_al(report, 3, &mut al), AlignlabStatus::Ok);
        assert!((al - 4.5).abs() < 1e-12);
        assert_eq!(
            alignlab_report_al(report, 4, &mut al),
            AlignlabStatus::InvalidArgument
        );

        let mut average = 0.0;
        assert_eq!(
            alignlab_report_average(report, &mut average),
            AlignlabStatus::Ok
        );
        assert!((average - 3.375).abs() < 1e-12);

        let (mut slope, mut intercept, mut r_squared) = (0.0, 0.0, 0.0);
        assert_eq!(
            alignlab_report_ir(report, &mut slope, &mut intercept, &mut r_squared),
            AlignlabStatus::Ok
        );
        assert!(slope > 0.0);
        let (mut n_slope, mut n_intercept, mut n_r_squared) = (0.0, 0.0, 0.0);
        assert_eq!(
            alignlab_report_n_ir(report, &mut n_slope, &mut n_intercept, &mut n_r_squared),
            AlignlabStatus::Ok
        );
        assert!((r_squared - n_r_squared).abs() < 1e-9);

        let mut rendered: *mut c_char = ptr::null_mut();
        assert_eq!(
            alignlab_report_render(report, ALIGNLAB_RENDER_CSV, &mut rendered),
            AlignlabStatus::Ok
        );
        let text = CStr::from_ptr(rendered).to_str().unwrap().to_string();
        assert!(text.starts_with("k,al\n"));
        assert!(text.contains("average,3.3750"));
        alignlab_string_free(rendered);

        let mut bad: *mut c_char = ptr::null_mut();
        assert_eq!(
            alignlab_report_render(report, 9, &mut bad),
            AlignlabStatus::InvalidFormat
        );

        alignlab_report_free(report);
        alignlab_report_free(ptr::null_mut());
        alignlab_string_free(ptr::null_mut());
    }
}

#[test]
fn report_rejects_out_of_range_scores() {
    let scores = [1i64, 9];
    let mut report: *mut AlignlabReport = ptr::null_mut();
    let status = unsafe { alignlab_report_new(scores.as_ptr(), 1, 2, &mut report) };
    assert_eq!(status, AlignlabStatus::InvalidArgument);
    assert!(report.is_null());
}

#[test]
fn status_names_cover_all_codes() {
    for (code, expected) in [
        (0, "ok"),
        (1, "null pointer"),
        (2, "invalid argument"),
        (3, "invalid format"),
        (99, "unknown status"),
    ] {
        let name = unsafe { CStr::from_ptr(alignlab_status_name(code)) };
        assert_eq!(name.to_str().unwrap(), expected);
    }
}

#[test]
fn generated_header_declares_the_interface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/alignlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for needle in [
        "ALIGNLAB_H",
        "typedef enum AlignlabStatus",
        "ALIGNLAB_STATUS_OK",
        "typedef struct AlignlabReport AlignlabReport;",
        "alignlab_fit_ir",
        "alignlab_normalize_al",
        "alignlab_cohen_kappa",
        "alignlab_cosine",
        "alignlab_sft_loss",
        "alignlab_dpo_loss",
        "alignlab_report_new",
        "alignlab_report_render",
        "alignlab_report_free",
        "alignlab_string_free",
        "alignlab_status_name",
    ] {
        assert!(text.contains(needle), "header missing {needle}");
    }
}
