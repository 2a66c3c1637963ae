//! C ABI for brittle-bayes.
//!
//! Every fallible function returns a [`BbStatus`]; on failure a description is
//! available from [`bb_last_error_message`] on the same thread. Reports are
//! opaque handles released with [`bb_report_free`]; strings returned by the
//! library are released with [`bb_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use brittle_bayes::bounds::{likelihood_band_limit, moment_class_posterior_lower_bound, per_point_band_limit};
use brittle_bayes::measures::{prokhorov_distance, tv_discrete, DiscreteMeasure};
use brittle_bayes::scenarios::{run_scenario, ScenarioReport};
use brittle_bayes::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownScenario = 3,
    InvalidArgument = 4,
    ComputationFailed = 5,
    NotFound = 6,
    Panic = 7,
}

/// Opaque scenario report.
pub struct BbReport {
    report: ScenarioReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: BbStatus, msg: &str) -> BbStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> BbStatus {
    let status = match e {
        Error::UnknownScenario(_) => BbStatus::UnknownScenario,
        Error::InvalidOverride { .. }
        | Error::InvalidMeasure(_)
        | Error::InvalidBall(_)
        | Error::InvalidThreshold(_)
        | Error::InvalidBudget(_) => BbStatus::InvalidArgument,
        _ => BbStatus::ComputationFailed,
    };
    fail(status, &e.to_string())
}

/// Runs `f`, turning a panic into [`BbStatus::Panic`].
fn guard<F: FnOnce() -> BbStatus>(f: F) -> BbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == BbStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(BbStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, BbStatus> {
    if p.is_null() {
        return Err(fail(BbStatus::NullPointer, &format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BbStatus::InvalidUtf8, &format!("{what} is not UTF-8")))
}

unsafe fn measure_arg(xs: *const f64, ws: *const f64, n: usize) -> Result<DiscreteMeasure, BbStatus> {
    if xs.is_null() || ws.is_null() {
        return Err(fail(BbStatus::NullPointer, "measure arrays are null"));
    }
    let (xs, ws) = (std::slice::from_raw_parts(xs, n), std::slice::from_raw_parts(ws, n));
    DiscreteMeasure::new(xs.to_vec(), ws.to_vec()).map_err(from_error)
}

/// Message for the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Runs a scenario. `keys`/`values` hold `n_overrides` parameter overrides
/// (both may be null when `n_overrides` is 0). On success `*out` owns a report.
///
/// # Safety
/// `name` and each key must be NUL-terminated strings; `keys` and `values`
/// must point to `n_overrides` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_run_scenario(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    n_overrides: usize,
    seed: u64,
    out: *mut *mut BbReport,
) -> BbStatus {
    guard(|| {
        if out.is_null() {
            return fail(BbStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let mut overrides = BTreeMap::new();
        if n_overrides > 0 {
            if keys.is_null() || values.is_null() {
                return fail(BbStatus::NullPointer, "override arrays are null");
            }
            let ks = std::slice::from_raw_parts(keys, n_overrides);
            let vs = std::slice::from_raw_parts(values, n_overrides);
            for (&k, &v) in ks.iter().zip(vs) {
                match str_arg(k, "override key") {
                    Ok(k) => overrides.insert(k.to_string(), v),
                    Err(s) => return s,
                };
            }
        }
        match run_scenario(name, &overrides, seed) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(BbReport { report }));
                BbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must be null or a handle from [`bb_run_scenario`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_report_free(report: *mut BbReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bb_report_passed(report: *const BbReport, out: *mut bool) -> BbStatus {
    guard(|| match (report.as_ref(), out.is_null()) {
        (Some(r), false) => {
            *out = r.report.passed;
            BbStatus::Ok
        }
        _ => fail(BbStatus::NullPointer, "report or out is null"),
    })
}

/// Number of metrics in the report, 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bb_report_metric_count(report: *const BbReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.results.len())
}

/// Value and pass flag of the metric called `label`.
///
/// # Safety
/// `report` must be a live handle, `label` a NUL-terminated string, and
/// `value`/`pass` writable (`pass` may be null).
#[no_mangle]
pub unsafe extern "C" fn bb_report_metric(
    report: *const BbReport,
    label: *const c_char,
    value: *mut f64,
    pass: *mut bool,
) -> BbStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return fail(BbStatus::NullPointer, "report is null") };
        if value.is_null() {
            return fail(BbStatus::NullPointer, "value is null");
        }
        let label = match str_arg(label, "label") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match r.report.metric(label) {
            Some(m) => {
                *value = m.value;
                if !pass.is_null() {
                    *pass = m.pass;
                }
                BbStatus::Ok
            }
            None => fail(BbStatus::NotFound, &format!("no metric '{label}'")),
        }
    })
}

/// Canonical JSON of the report; release `*out` with [`bb_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bb_report_to_json(report: *const BbReport, out: *mut *mut c_char) -> BbStatus {
    guard(|| {
        let Some(r) = report.as_ref() else { return fail(BbStatus::NullPointer, "report is null") };
        if out.is_null() {
            return fail(BbStatus::NullPointer, "out is null");
        }
        *out = CString::new(r.report.to_json()).expect("JSON has no NUL").into_raw();
        BbStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Posterior probability that the one unfair coin was drawn.
#[no_mangle]
pub extern "C" fn bb_coin_posterior(n_fair: u64, p_heads_fair: f64, n_flips: u32) -> f64 {
    brittle_bayes::bayes::coin_posterior(n_fair, p_heads_fair, n_flips)
}

/// Lower bound on the worst posterior value for the k-moment class at radius `delta`.
#[no_mangle]
pub extern "C" fn bb_moment_class_lower_bound(k: u32, delta: f64) -> f64 {
    moment_class_posterior_lower_bound(k, delta)
}

/// Small-radius limit of the upper posterior bound over the likelihood band.
#[no_mangle]
pub extern "C" fn bb_likelihood_band_limit(alpha: f64, a: f64, m: f64) -> f64 {
    likelihood_band_limit(alpha, a, m)
}

#[no_mangle]
pub extern "C" fn bb_per_point_band_limit(gamma: f64, n: u32) -> f64 {
    per_point_band_limit(gamma, n)
}

/// Total variation between two discrete measures given as atom arrays.
///
/// # Safety
/// Each array must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_tv_distance(
    xa: *const f64,
    wa: *const f64,
    na: usize,
    xb: *const f64,
    wb: *const f64,
    nb: usize,
    out: *mut f64,
) -> BbStatus {
    guard(|| {
        if out.is_null() {
            return fail(BbStatus::NullPointer, "out is null");
        }
        match (measure_arg(xa, wa, na), measure_arg(xb, wb, nb)) {
            (Ok(a), Ok(b)) => {
                *out = tv_discrete(&a, &b);
                BbStatus::Ok
            }
            (Err(s), _) | (_, Err(s)) => s,
        }
    })
}

/// Prokhorov distance between two discrete measures, to within `tol`.
///
/// # Safety
/// As for [`bb_tv_distance`].
#[no_mangle]
pub unsafe extern "C" fn bb_prokhorov_distance(
    xa: *const f64,
    wa: *const f64,
    na: usize,
    xb: *const f64,
    wb: *const f64,
    nb: usize,
    tol: f64,
    out: *mut f64,
) -> BbStatus {
    guard(|| {
        if out.is_null() {
            return fail(BbStatus::NullPointer, "out is null");
        }
        if tol.is_nan() || tol <= 0.0 {
            return fail(BbStatus::InvalidArgument, "tol must be positive");
        }
        match (measure_arg(xa, wa, na), measure_arg(xb, wb, nb)) {
            (Ok(a), Ok(b)) => {
                *out = prokhorov_distance(&a, &b, tol);
                BbStatus::Ok
            }
            (Err(s), _) | (_, Err(s)) => s,
        }
    })
}
