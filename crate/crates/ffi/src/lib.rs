//! C ABI for `mlrate`.
//!
//! Objects are opaque handles created by `mlr_*_new`-style constructors and
//! released with the matching `*_free`. Every fallible call returns an
//! [`MlrStatus`]; on failure, [`mlr_last_error`] describes the problem until
//! the next failing call on the same thread. Panics never cross the
//! boundary: they surface as [`MlrStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use mlrate::constellation::{builtin, decision_region, BuiltinFamily, Constellation, Extent};
use mlrate::convexity::{classify, Interval, ReportTarget};
use mlrate::engine::{ClosedForm, ErrorCurve, Estimate, EstimatorConfig, Target, Variable};
use mlrate::error::Error;
use mlrate::sharing::SharingPlan;

/// Curve variable: SNR `gamma`.
pub const MLR_VARIABLE_SNR: u32 = 0;
/// Curve variable: amplitude `sqrt(gamma)`.
pub const MLR_VARIABLE_AMPLITUDE: u32 = 1;
/// Curve variable: noise power `1/gamma`.
pub const MLR_VARIABLE_NOISE_POWER: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed constellation document or constellation.
    Document = 3,
    /// Non-convergence or insufficient Monte Carlo precision.
    Numerical = 4,
    Unsupported = 5,
    Panic = 6,
}

/// A point estimate; `samples` is zero for exact values.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlrEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl From<Estimate> for MlrEstimate {
    fn from(e: Estimate) -> Self {
        MlrEstimate {
            value: e.value,
            std_error: e.std_error,
            samples: e.samples,
        }
    }
}

/// Opaque constellation handle.
pub struct MlrConstellation(Arc<Constellation>);

/// Opaque error-curve handle.
pub struct MlrCurve(ErrorCurve);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> MlrStatus {
    match e {
        Error::Document { .. } | Error::InvalidConstellation(_) => MlrStatus::Document,
        Error::Unsupported(_) => MlrStatus::Unsupported,
        e if e.is_numerical() => MlrStatus::Numerical,
        _ => MlrStatus::InvalidArgument,
    }
}

struct Fail(MlrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(MlrStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MlrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlrStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MlrStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(MlrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(MlrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(MlrStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

fn variable(v: u32) -> Result<Variable, Fail> {
    match v {
        MLR_VARIABLE_SNR => Ok(Variable::Snr),
        MLR_VARIABLE_AMPLITUDE => Ok(Variable::Amplitude),
        MLR_VARIABLE_NOISE_POWER => Ok(Variable::NoisePower),
        other => Err(invalid(format!("unknown variable code {other}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mlr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mlr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Built-in constellation (`pam`, `psk`, `qam`, `orthogonal`,
/// `biorthogonal`, `sphere_test`) at unit mean energy.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlr_constellation_builtin(
    family: *const c_char,
    order: usize,
    out: *mut *mut MlrConstellation,
) -> MlrStatus {
    guard(|| {
        let family: BuiltinFamily = text(family, "family")?.parse()?;
        let c = builtin(family, order, None)?;
        write(out, Box::into_raw(Box::new(MlrConstellation(Arc::new(c)))), "out")
    })
}

/// Constellation from a JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mlr_constellation_from_json(json: *const c_char, out: *mut *mut MlrConstellation) -> MlrStatus {
    guard(|| {
        let c = mlrate::constellation::load_constellation(text(json, "json")?)?;
        write(out, Box::into_raw(Box::new(MlrConstellation(Arc::new(c)))), "out")
    })
}

/// Constellation of `count` points given row-major in `coords`
/// (`count * dimension` values), uniform priors. With `renormalize`
/// non-zero the points are scaled to unit mean energy.
///
/// # Safety
/// `coords` must point to `count * dimension` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlr_constellation_new(
    dimension: usize,
    count: usize,
    coords: *const f64,
    renormalize: i32,
    out: *mut *mut MlrConstellation,
) -> MlrStatus {
    guard(|| {
        if coords.is_null() {
            return Err(Fail(MlrStatus::NullPointer, "coords is null".into()));
        }
        let len = dimension
            .checked_mul(count)
            .ok_or_else(|| invalid("dimension * count overflows"))?;
        let flat = std::slice::from_raw_parts(coords, len);
        let points = if dimension == 0 {
            vec![Vec::new(); count]
        } else {
            flat.chunks(dimension).map(<[f64]>::to_vec).collect()
        };
        let mut c = Constellation::new(dimension, points)?;
        if renormalize != 0 {
            c = c.renormalized();
        }
        write(out, Box::into_raw(Box::new(MlrConstellation(Arc::new(c)))), "out")
    })
}

/// Releases a constellation; null is ignored.
///
/// # Safety
/// `c` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlr_constellation_free(c: *mut MlrConstellation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle and the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mlr_constellation_shape(
    c: *const MlrConstellation,
    dimension: *mut usize,
    count: *mut usize,
) -> MlrStatus {
    guard(|| {
        let c = &handle(c, "constellation")?.0;
        write(dimension, c.dimension(), "dimension")?;
        write(count, c.len(), "count")
    })
}

/// Distances from point `index` to the nearest and farthest points of its
/// decision region. `d_max` is infinity for unbounded regions and NaN when
/// the region is bounded but too large to enumerate.
///
/// # Safety
/// `c` must be a live handle and the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mlr_constellation_distances(
    c: *const MlrConstellation,
    index: usize,
    d_min: *mut f64,
    d_max: *mut f64,
) -> MlrStatus {
    guard(|| {
        let c = &handle(c, "constellation")?.0;
        let r = decision_region(c, index)?;
        let far = match r.d_max {
            Extent::Finite(v) => v,
            Extent::Infinite => f64::INFINITY,
            Extent::Unknown => f64::NAN,
        };
        write(d_min, r.d_min, "d_min")?;
        write(d_max, far, "d_max")
    })
}

/// A convexity threshold of the symbol error rate by name, e.g.
/// `snr_convex_from` or `noise_convex_to`.
///
/// # Safety
/// `c` must be a live handle, `name` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mlr_classify_threshold(
    c: *const MlrConstellation,
    variable_code: u32,
    name: *const c_char,
    out: *mut f64,
) -> MlrStatus {
    guard(|| {
        let c = &handle(c, "constellation")?.0;
        let name = text(name, "name")?;
        let report = classify(c, variable(variable_code)?, ReportTarget::SerAverage)?;
        let v = report
            .threshold(name)
            .ok_or_else(|| Fail(MlrStatus::Unsupported, format!("no threshold named `{name}`")))?;
        write(out, v, "out")
    })
}

/// Monte Carlo symbol-error-rate curve of a constellation.
///
/// # Safety
/// `c` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mlr_curve_monte_carlo(
    c: *const MlrConstellation,
    variable_code: u32,
    samples: u64,
    seed: u64,
    out: *mut *mut MlrCurve,
) -> MlrStatus {
    guard(|| {
        let c = handle(c, "constellation")?.0.clone();
        let cfg = EstimatorConfig::new(samples, seed);
        let curve = ErrorCurve::monte_carlo(c, Target::Ser, variable(variable_code)?, cfg)?;
        write(out, Box::into_raw(Box::new(MlrCurve(curve))), "out")
    })
}

/// Closed-form symbol-error-rate curve: `bpsk`, `qpsk`, `pam`, `qam` or
/// `biorthogonal` (`order` points; ignored for bpsk and qpsk).
///
/// # Safety
/// `family` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mlr_curve_closed_form(
    family: *const c_char,
    order: usize,
    variable_code: u32,
    out: *mut *mut MlrCurve,
) -> MlrStatus {
    guard(|| {
        let f = match text(family, "family")?.to_ascii_lowercase().as_str() {
            "bpsk" => ClosedForm::Bpsk,
            "qpsk" => ClosedForm::Qpsk,
            "pam" => ClosedForm::Pam { order },
            "qam" => ClosedForm::Qam { order },
            "biorthogonal" if order % 2 == 0 => ClosedForm::Biorthogonal { dimension: order / 2 },
            other => return Err(Fail(MlrStatus::Unsupported, format!("no closed form `{other}` of order {order}"))),
        };
        let curve = ErrorCurve::closed_form(f, variable(variable_code)?)?;
        write(out, Box::into_raw(Box::new(MlrCurve(curve))), "out")
    })
}

/// Releases a curve; null is ignored.
///
/// # Safety
/// `curve` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mlr_curve_free(curve: *mut MlrCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Value and first two derivatives at `x`. Any output may be null.
///
/// # Safety
/// `curve` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlr_curve_evaluate(
    curve: *const MlrCurve,
    x: f64,
    value: *mut MlrEstimate,
    first: *mut MlrEstimate,
    second: *mut MlrEstimate,
) -> MlrStatus {
    guard(|| {
        let d = handle(curve, "curve")?.0.derivatives(x)?;
        for (out, e) in [(value, d.value), (first, d.first), (second, d.second)] {
            if !out.is_null() {
                out.write(e.into());
            }
        }
        Ok(())
    })
}

/// Jammer analysis of a curve over noise power: the inflection point and
/// the tangency threshold of the optimal on-off strategy, searched on
/// `[lo, hi]`.
///
/// # Safety
/// `curve` must be a live handle and the outputs valid.
#[no_mangle]
pub unsafe extern "C" fn mlr_jammer_threshold(
    curve: *const MlrCurve,
    lo: f64,
    hi: f64,
    inflection: *mut f64,
    threshold: *mut f64,
) -> MlrStatus {
    guard(|| {
        let curve = &handle(curve, "curve")?.0;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(invalid(format!("bad search interval [{lo}, {hi}]")));
        }
        let plan = SharingPlan::jammer(curve, Interval::new(lo, hi))?;
        let star = plan.threshold()?;
        write(inflection, plan.inflections()[0], "inflection")?;
        write(threshold, star, "threshold")
    })
}

/// Gaussian tail probability `Q(x)`.
#[no_mangle]
pub extern "C" fn mlr_q(x: f64) -> f64 {
    mlrate::gaussian::q(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, MlrStatus::Panic);
        let msg = unsafe { CStr::from_ptr(mlr_last_error()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn error_kinds_map_to_status() {
        assert_eq!(status_of(&Error::NonConvergence("x".into())), MlrStatus::Numerical);
        assert_eq!(status_of(&Error::InsufficientPrecision("x".into())), MlrStatus::Numerical);
        assert_eq!(status_of(&Error::MissingLabels), MlrStatus::InvalidArgument);
        assert_eq!(status_of(&Error::InvalidConstellation("x".into())), MlrStatus::Document);
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(mlr_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
