//! Error rates averaged over scale-family fading of the SNR.
//!
//! The instantaneous SNR is `gamma0 t` with `t` drawn from a unit-mean
//! density, so the average is `int P_e(gamma0 t) f(t) dt`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{midpoint_check, MidpointReport, Shape};
use crate::engine::{ErrorCurve, Estimate, Variable};
use crate::error::{Error, Result};
use crate::gaussian::{ln_gamma, regularized_upper_gamma};
use crate::quadrature::{integrate, integrate_with_aux};

/// Largest neglected density mass beyond the truncation point.
pub const TAIL_MASS: f64 = 1e-10;
const ABS_TOL: f64 = 1e-13;
const REL_TOL: f64 = 1e-11;
const INITIAL_TRUNCATION: f64 = 8.0;

/// Unit-mean power-gain distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum FadingModel {
    Rayleigh,
    /// Rician fading with specular-to-diffuse ratio `k`.
    Rice { k: f64 },
    /// Nakagami-m fading, `m >= 1/2`.
    Nakagami { m: f64 },
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FadingModel::Rayleigh => Ok(()),
            FadingModel::Rice { k } if k.is_finite() && k >= 0.0 => Ok(()),
            FadingModel::Nakagami { m } if m.is_finite() && m >= 0.5 => Ok(()),
            other => Err(Error::Domain(format!("invalid fading parameters {other:?}"))),
        }
    }

    /// Density of the normalized gain at `t > 0`.
    pub fn pdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            FadingModel::Rayleigh => (-t).exp(),
            FadingModel::Rice { k } => {
                let z = 2.0 * (k * (k + 1.0) * t).sqrt();
                (k + 1.0) * (-k - (k + 1.0) * t + z).exp() * i0e(z)
            }
            FadingModel::Nakagami { m } => (m * m.ln() + (m - 1.0) * t.ln() - m * t - ln_gamma(m)).exp(),
        }
    }

    /// Mass of the density beyond `t`.
    pub fn tail(&self, t: f64) -> Result<f64> {
        Ok(match *self {
            FadingModel::Rayleigh => (-t).exp(),
            FadingModel::Nakagami { m } => regularized_upper_gamma(m, m * t),
            FadingModel::Rice { .. } => {
                // the density decays faster than any exponential of sqrt(t),
                // so a few mean lengths past t carry the whole tail
                let far = 8.0 * t + 64.0;
                integrate(|s| self.pdf(s), t, far, 1e-15, 1e-12)?.value
            }
        })
    }

    /// Truncation point with tail mass below [`TAIL_MASS`].
    pub fn truncation(&self) -> Result<(f64, f64)> {
        let mut t = INITIAL_TRUNCATION;
        loop {
            let tail = self.tail(t)?;
            if tail < TAIL_MASS {
                return Ok((t, tail));
            }
            t *= 2.0;
            if t > 1e6 {
                return Err(Error::NonConvergence(format!("{self} tail mass {tail:.3e} at t = {t}")));
            }
        }
    }
}

impl fmt::Display for FadingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingModel::Rayleigh => write!(f, "rayleigh"),
            FadingModel::Rice { k } => write!(f, "rice:{k}"),
            FadingModel::Nakagami { m } => write!(f, "nakagami:{m}"),
        }
    }
}

impl FromStr for FadingModel {
    type Err = Error;

    /// `rayleigh`, `rice:K` or `nakagami:M`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::Domain(format!("{name} needs a {what} parameter, e.g. {name}:2")))?
                .parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad {what} in `{s}`: {e}")))
        };
        let model = match name.to_ascii_lowercase().as_str() {
            "rayleigh" => FadingModel::Rayleigh,
            "rice" | "rician" => FadingModel::Rice { k: param("K-factor")? },
            "nakagami" => FadingModel::Nakagami { m: param("m")? },
            other => return Err(Error::Unsupported(format!("unknown fading model `{other}`"))),
        };
        model.validate()?;
        Ok(model)
    }
}

/// `I_0(x) e^{-x}` for `x >= 0`: power series up to 30, asymptotic
/// expansion beyond.
pub fn i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 30.0 {
        let y = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= y / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            let next = term * (2.0 * kf - 1.0).powi(2) / (8.0 * kf * x);
            if next > term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FadingAverage {
    pub gamma0: f64,
    /// Averaged value; for sampled curves the standard error averages the
    /// pointwise standard errors, which bounds the correlated case.
    pub value: Estimate,
    pub quadrature_error: f64,
    pub truncation: f64,
    pub tail_mass: f64,
}

impl FadingAverage {
    /// Total deterministic error bound: quadrature plus neglected tail
    /// (the curve is a probability, bounded by one).
    pub fn error_bound(&self) -> f64 {
        self.quadrature_error + self.tail_mass
    }
}

fn snr_curve(curve: &ErrorCurve) -> Result<ErrorCurve> {
    if curve.variable() == Variable::Snr {
        Ok(curve.clone())
    } else {
        curve.in_variable(Variable::Snr)
    }
}

/// Average of `curve` (in SNR) at mean SNR `gamma0`.
pub fn average_ser(curve: &ErrorCurve, model: FadingModel, gamma0: f64) -> Result<FadingAverage> {
    model.validate()?;
    if !(gamma0.is_finite() && gamma0 > 0.0) {
        return Err(Error::Domain(format!("mean SNR must be positive, got {gamma0}")));
    }
    let curve = snr_curve(curve)?;
    let (t_max, tail_mass) = model.truncation()?;
    let samples = std::sync::atomic::AtomicU64::new(0);
    let failure = std::sync::Mutex::new(None);
    let (integral, se) = integrate_with_aux(
        |t| {
            let w = model.pdf(t);
            match curve.value(gamma0 * t) {
                Ok(e) => {
                    samples.fetch_max(e.samples, std::sync::atomic::Ordering::Relaxed);
                    (e.value * w, e.std_error * w)
                }
                Err(err) => {
                    failure.lock().expect("poisoned").get_or_insert(err);
                    (0.0, 0.0)
                }
            }
        },
        0.0,
        t_max,
        ABS_TOL,
        REL_TOL,
    )?;
    if let Some(err) = failure.into_inner().expect("poisoned") {
        return Err(err);
    }
    Ok(FadingAverage {
        gamma0,
        value: Estimate {
            value: integral.value,
            std_error: se,
            samples: samples.into_inner(),
        },
        quadrature_error: integral.error,
        truncation: t_max,
        tail_mass,
    })
}

/// The averaged curve `gamma0 -> average` on a grid, in parallel.
pub fn average_curve(curve: &ErrorCurve, model: FadingModel, grid: &[f64]) -> Result<Vec<FadingAverage>> {
    grid.par_iter().map(|&g| average_ser(curve, model, g)).collect()
}

/// The averaged curve as an exact curve in the mean SNR, with derivatives
/// `int t^k P^(k)(gamma0 t) f(t) dt`. Needs an exact underlying curve.
pub fn averaged_curve(curve: &ErrorCurve, model: FadingModel) -> Result<ErrorCurve> {
    model.validate()?;
    let snr = snr_curve(curve)?;
    if snr.provenance() != crate::engine::Provenance::ClosedForm {
        return Err(Error::Unsupported("averaged curves need an exact underlying curve".into()));
    }
    let origin = snr.value_at_origin()?.value;
    let (t_max, _) = model.truncation()?;
    let name = format!("{}~{model}", snr.name());
    // the custom curve reports the oriented quantity as its value
    let sign_flip = snr.quantity() == crate::engine::Quantity::Correct;
    let base = if sign_flip { snr.complement() } else { snr };
    let origin = if sign_flip { 1.0 - origin } else { origin };
    let averaged = ErrorCurve::custom(name, Variable::Snr, origin, move |g| {
        let mut out = [0.0; 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let failure = std::sync::Mutex::new(None);
            let v = integrate(
                |t| match base.derivatives(g * t) {
                    Ok(d) => {
                        let e = [d.value, d.first, d.second][k].value;
                        t.powi(k as i32) * e * model.pdf(t)
                    }
                    Err(err) => {
                        failure.lock().expect("poisoned").get_or_insert(err);
                        0.0
                    }
                },
                0.0,
                t_max,
                ABS_TOL,
                REL_TOL,
            )?;
            if let Some(err) = failure.into_inner().expect("poisoned") {
                return Err(err);
            }
            *slot = v.value;
        }
        Ok((out[0], out[1], out[2]))
    });
    Ok(if sign_flip { averaged.complement() } else { averaged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenRow {
    pub gamma0: f64,
    pub average: f64,
    pub instantaneous: f64,
    /// `average - instantaneous`; Jensen's inequality makes it
    /// non-negative for convex curves.
    pub gap: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenReport {
    pub model: FadingModel,
    /// Whether the inequality is guaranteed (curves of dimension at most
    /// two, which are convex in SNR).
    pub guaranteed: bool,
    pub rows: Vec<JensenRow>,
    pub violations: usize,
    /// Mean SNRs where fading lowers the error rate.
    pub fading_helps: Vec<f64>,
}

impl JensenReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Compares the faded and unfaded error rates on a grid of mean SNRs.
pub fn jensen_check(curve: &ErrorCurve, model: FadingModel, gamma0_grid: &[f64]) -> Result<JensenReport> {
    let snr = snr_curve(curve)?;
    let rows: Vec<JensenRow> = gamma0_grid
        .par_iter()
        .map(|&g| {
            let avg = average_ser(&snr, model, g)?;
            let inst = snr.value(g)?;
            let gap = avg.value.value - inst.value;
            let slack = 3.0 * (avg.value.std_error + inst.std_error) + avg.error_bound();
            Ok(JensenRow {
                gamma0: g,
                average: avg.value.value,
                instantaneous: inst.value,
                gap,
                slack,
                ok: gap >= -slack,
            })
        })
        .collect::<Result<_>>()?;
    let violations = rows.iter().filter(|r| !r.ok).count();
    let fading_helps = rows.iter().filter(|r| !r.ok).map(|r| r.gamma0).collect();
    Ok(JensenReport {
        model,
        guaranteed: snr.dimension().is_some_and(|n| n <= 2),
        rows,
        violations,
        fading_helps,
    })
}

/// Midpoint convexity of the averaged curve in the mean SNR.
pub fn averaged_convexity_check(curve: &ErrorCurve, model: FadingModel, gamma0_grid: &[f64]) -> Result<MidpointReport> {
    let snr = snr_curve(curve)?;
    midpoint_check(Shape::Convex, gamma0_grid, 0.0, |g| {
        let a = average_ser(&snr, model, g)?;
        Ok(Estimate {
            value: a.value.value,
            std_error: a.value.std_error + a.error_bound() / 3.0,
            samples: a.value.samples,
        })
    })
}
