use std::ffi::{CStr, CString};
use std::ptr;

use mlrate_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mlr_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn builtin_geometry_and_thresholds() {
    let family = CString::new("biorthogonal").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(mlr_constellation_builtin(family.as_ptr(), 6, &mut c), MlrStatus::Ok);
        let (mut n, mut m) = (0usize, 0usize);
        assert_eq!(mlr_constellation_shape(c, &mut n, &mut m), MlrStatus::Ok);
        assert_eq!((n, m), (3, 6));
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(mlr_constellation_distances(c, 0, &mut lo, &mut hi), MlrStatus::Ok);
        assert!((lo - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(hi.is_infinite());
        let name = CString::new("snr_convex_from").unwrap();
        let mut th = 0.0;
        assert_eq!(mlr_classify_threshold(c, MLR_VARIABLE_SNR, name.as_ptr(), &mut th), MlrStatus::Ok);
        assert!((th - 2.0 * (3.0 + 6f64.sqrt())).abs() < 1e-9);
        let missing = CString::new("nope").unwrap();
        assert_eq!(mlr_classify_threshold(c, MLR_VARIABLE_SNR, missing.as_ptr(), &mut th), MlrStatus::Unsupported);
        mlr_constellation_free(c);
    }
}

#[test]
fn monte_carlo_matches_closed_form() {
    let coords = [-1.0, 1.0];
    let mut c = ptr::null_mut();
    let mut mc = ptr::null_mut();
    let mut exact = ptr::null_mut();
    let bpsk = CString::new("bpsk").unwrap();
    unsafe {
        assert_eq!(mlr_constellation_new(1, 2, coords.as_ptr(), 0, &mut c), MlrStatus::Ok);
        assert_eq!(mlr_curve_monte_carlo(c, MLR_VARIABLE_SNR, 200_000, 3, &mut mc), MlrStatus::Ok);
        assert_eq!(mlr_curve_closed_form(bpsk.as_ptr(), 2, MLR_VARIABLE_SNR, &mut exact), MlrStatus::Ok);
        let mut a = MlrEstimate { value: 0.0, std_error: 0.0, samples: 0 };
        let mut b = a;
        assert_eq!(mlr_curve_evaluate(mc, 4.0, &mut a, ptr::null_mut(), ptr::null_mut()), MlrStatus::Ok);
        assert_eq!(mlr_curve_evaluate(exact, 4.0, &mut b, ptr::null_mut(), ptr::null_mut()), MlrStatus::Ok);
        assert_eq!(b.value, mlr_q(2.0));
        assert_eq!(b.samples, 0);
        assert!((a.value - b.value).abs() <= 3.0 * a.std_error, "{a:?} vs {b:?}");
        mlr_curve_free(mc);
        mlr_curve_free(exact);
        mlr_constellation_free(c);
    }
}

#[test]
fn jammer_threshold_for_bpsk() {
    let bpsk = CString::new("bpsk").unwrap();
    let mut curve = ptr::null_mut();
    unsafe {
        assert_eq!(mlr_curve_closed_form(bpsk.as_ptr(), 2, MLR_VARIABLE_NOISE_POWER, &mut curve), MlrStatus::Ok);
        let (mut p0, mut star) = (0.0, 0.0);
        assert_eq!(mlr_jammer_threshold(curve, 1e-3, 1e3, &mut p0, &mut star), MlrStatus::Ok);
        assert!((p0 - 1.0 / 3.0).abs() < 1e-8);
        assert!(star > p0);
        mlr_curve_free(curve);
    }
}

#[test]
fn failures_report_status_and_message() {
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(mlr_constellation_builtin(ptr::null(), 4, &mut c), MlrStatus::NullPointer);
        let bad = CString::new("hexagonal").unwrap();
        assert_eq!(mlr_constellation_builtin(bad.as_ptr(), 4, &mut c), MlrStatus::Unsupported);
        assert!(last_error().contains("hexagonal"));
        let doc = CString::new(r#"{"dimension": 1, "points": [[1], [1, 2]]}"#).unwrap();
        assert_eq!(mlr_constellation_from_json(doc.as_ptr(), &mut c), MlrStatus::Document);
        assert!(last_error().contains("points[1]"), "{}", last_error());
        assert!(c.is_null());

        let coords = [-1.0, 1.0];
        assert_eq!(mlr_constellation_new(1, 2, coords.as_ptr(), 0, &mut c), MlrStatus::Ok);
        let mut curve = ptr::null_mut();
        assert_eq!(mlr_curve_monte_carlo(c, 7, 10_000, 0, &mut curve), MlrStatus::InvalidArgument);
        assert_eq!(mlr_curve_monte_carlo(c, MLR_VARIABLE_SNR, 10, 0, &mut curve), MlrStatus::InvalidArgument);
        assert_eq!(mlr_curve_monte_carlo(c, MLR_VARIABLE_NOISE_POWER, 1000, 0, &mut curve), MlrStatus::Ok);
        let (mut p0, mut star) = (0.0, 0.0);
        assert_eq!(mlr_jammer_threshold(curve, 1e-2, 1e2, &mut p0, &mut star), MlrStatus::Numerical);
        assert!(last_error().contains("precision"));
        mlr_curve_free(curve);
        mlr_constellation_free(c);
        mlr_constellation_free(ptr::null_mut());
    }
}
