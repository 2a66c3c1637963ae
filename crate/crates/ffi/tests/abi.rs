use std::ffi::{CStr, CString};
use std::ptr;

use brittle_bayes_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bb_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn run_and_inspect_a_report() {
    let name = CString::new("coin").unwrap();
    let key = CString::new("n_fair").unwrap();
    let keys = [key.as_ptr()];
    let values = [99.0];
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(bb_run_scenario(name.as_ptr(), keys.as_ptr(), values.as_ptr(), 1, 0, &mut report), BbStatus::Ok);
        assert!(!report.is_null());
        assert_eq!(bb_report_metric_count(report), 3);

        let label = CString::new("posterior_unfair").unwrap();
        let (mut value, mut pass) = (0.0, false);
        assert_eq!(bb_report_metric(report, label.as_ptr(), &mut value, &mut pass), BbStatus::Ok);
        assert!((value - 1024.0 / 1123.0).abs() < 1e-12);
        assert!(pass);

        let missing = CString::new("nope").unwrap();
        assert_eq!(bb_report_metric(report, missing.as_ptr(), &mut value, ptr::null_mut()), BbStatus::NotFound);
        assert!(last_error().contains("nope"));

        let mut passed = false;
        assert_eq!(bb_report_passed(report, &mut passed), BbStatus::Ok);
        assert!(passed);

        let mut json = ptr::null_mut();
        assert_eq!(bb_report_to_json(report, &mut json), BbStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        bb_string_free(json);
        assert!(text.contains("\"name\": \"coin\""));
        assert!(!text.contains("runtime_ms"));

        bb_report_free(report);
        bb_report_free(ptr::null_mut());
        bb_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut report = ptr::null_mut();
    let bogus = CString::new("no_such_scenario").unwrap();
    unsafe {
        assert_eq!(bb_run_scenario(bogus.as_ptr(), ptr::null(), ptr::null(), 0, 0, &mut report), BbStatus::UnknownScenario);
        assert!(report.is_null());
        assert!(last_error().contains("no_such_scenario"));

        assert_eq!(bb_run_scenario(ptr::null(), ptr::null(), ptr::null(), 0, 0, &mut report), BbStatus::NullPointer);

        let name = CString::new("coin").unwrap();
        let key = CString::new("n_flips").unwrap();
        let keys = [key.as_ptr()];
        assert_eq!(bb_run_scenario(name.as_ptr(), keys.as_ptr(), [2.5].as_ptr(), 1, 0, &mut report), BbStatus::InvalidArgument);
        assert_eq!(bb_run_scenario(name.as_ptr(), ptr::null(), ptr::null(), 1, 0, &mut report), BbStatus::NullPointer);

        let bad_utf8 = [0xffu8 as std::ffi::c_char, 0];
        assert_eq!(bb_run_scenario(bad_utf8.as_ptr(), ptr::null(), ptr::null(), 0, 0, &mut report), BbStatus::InvalidUtf8);

        assert_eq!(bb_run_scenario(name.as_ptr(), ptr::null(), ptr::null(), 0, 0, &mut report), BbStatus::Ok);
        assert_eq!(last_error(), "");
        bb_report_free(report);
    }
}

#[test]
fn closed_forms() {
    assert!((bb_coin_posterior(101, 0.5, 10) - 1024.0 / 1125.0).abs() < 1e-12);
    assert!((bb_moment_class_lower_bound(2, 1e-6) - 0.258_847_504_711_781_3).abs() < 1e-12);
    assert_eq!(bb_likelihood_band_limit(2.0, 0.75, 0.375), 0.8);
    assert!((bb_per_point_band_limit(2.0, 1) - 0.8).abs() < 1e-15);
}

#[test]
fn distances_over_arrays() {
    let (xa, wa) = ([0.0, 1.0], [0.5, 0.5]);
    let (xb, wb) = ([0.0, 0.9], [0.5, 0.5]);
    let mut out = -1.0;
    unsafe {
        assert_eq!(bb_tv_distance(xa.as_ptr(), wa.as_ptr(), 2, xb.as_ptr(), wb.as_ptr(), 2, &mut out), BbStatus::Ok);
        assert!((out - 0.5).abs() < 1e-15);
        assert_eq!(bb_prokhorov_distance(xa.as_ptr(), wa.as_ptr(), 2, xb.as_ptr(), wb.as_ptr(), 2, 1e-9, &mut out), BbStatus::Ok);
        assert!((out - 0.1).abs() < 1e-8);
        let bad = [0.7, 0.7];
        assert_eq!(bb_tv_distance(xa.as_ptr(), bad.as_ptr(), 2, xb.as_ptr(), wb.as_ptr(), 2, &mut out), BbStatus::InvalidArgument);
        assert_eq!(bb_prokhorov_distance(xa.as_ptr(), wa.as_ptr(), 2, xb.as_ptr(), wb.as_ptr(), 2, 0.0, &mut out), BbStatus::InvalidArgument);
        assert_eq!(bb_tv_distance(ptr::null(), wa.as_ptr(), 2, xb.as_ptr(), wb.as_ptr(), 2, &mut out), BbStatus::NullPointer);
    }
}
