//! Monte Carlo error-rate estimation with exact derivative estimators.
//!
//! A curve parameter enters only through the noise density, so every
//! derivative of an error probability is an expectation of the same
//! indicator multiplied by a polynomial in `t = |xi|^2`:
//!
//! | variable | order 1                 | order 2                                          |
//! |----------|-------------------------|--------------------------------------------------|
//! | `gamma`  | `(n/gamma - t)/2`       | `(t - a1/gamma)(t - a2/gamma)/4`, `a = n +- sqrt(2n)` |
//! | `P_N`    | `(t - n P)/(2 P^2)`     | `(t^2 - (2n+4) P t + n(n+2) P^2)/(4 P^4)`        |
//! | `A`      | `2A w1(gamma)`          | `2 w1(gamma) + 4A^2 w2(gamma)`                   |
//!
//! Each weight has zero mean, so the derivative of the error probability is
//! the same expectation taken over error events, with no sign flip needed
//! and a much sparser payoff at high SNR.
//!
//! Noise is drawn as `xi = z / sqrt(gamma)` from standard normals `z`, so
//! runs with equal `(seed, stream_id)` share their draws across every curve
//! point (common random numbers).

pub mod curve;
mod estimators;
mod montecarlo;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use curve::{ClosedForm, ErrorCurve, Provenance, Quantity};
pub use estimators::{
    estimate_ber, estimate_ber_assembled, estimate_conditional_ser, estimate_derivative,
    estimate_derivatives, estimate_pep, estimate_pep_row, estimate_region_derivatives,
    estimate_ser, Ball, NoiseRegion, Target,
};

/// Smallest sample count accepted for a published estimate.
pub const MIN_SAMPLES: u64 = 1000;

/// The parameter an error curve is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// `gamma = 1 / sigma^2` with `sigma^2` the noise variance per dimension.
    Snr,
    /// `A = sqrt(gamma)`.
    Amplitude,
    /// `P_N = sigma^2 = 1 / gamma`.
    NoisePower,
}

impl Variable {
    /// The SNR corresponding to a point of this variable.
    pub fn to_snr(self, x: f64) -> f64 {
        match self {
            Variable::Snr => x,
            Variable::Amplitude => x * x,
            Variable::NoisePower => 1.0 / x,
        }
    }

    pub fn from_snr(self, gamma: f64) -> f64 {
        match self {
            Variable::Snr => gamma,
            Variable::Amplitude => gamma.sqrt(),
            Variable::NoisePower => 1.0 / gamma,
        }
    }

    /// Re-expresses `(f, df/dgamma, d2f/dgamma2)` as derivatives in this
    /// variable at the point `x`.
    pub fn from_snr_derivatives(self, x: f64, (f, d1, d2): (f64, f64, f64)) -> (f64, f64, f64) {
        match self {
            Variable::Snr => (f, d1, d2),
            Variable::Amplitude => (f, 2.0 * x * d1, 2.0 * d1 + 4.0 * x * x * d2),
            Variable::NoisePower => {
                let x2 = x * x;
                (f, -d1 / x2, d2 / (x2 * x2) + 2.0 * d1 / (x2 * x))
            }
        }
    }

    pub(crate) fn check_point(self, x: f64) -> Result<()> {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("{self} must be positive and finite, got {x}")))
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::Snr => "snr",
            Variable::Amplitude => "amplitude",
            Variable::NoisePower => "noise_power",
        })
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" | "gamma" => Ok(Variable::Snr),
            "amplitude" | "a" => Ok(Variable::Amplitude),
            "noise_power" | "noise-power" | "pn" => Ok(Variable::NoisePower),
            other => Err(Error::Unsupported(format!("unknown variable `{other}`"))),
        }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Number of observations. With `antithetic`, one observation is the
    /// average over a pair `(z, -z)`.
    pub samples: u64,
    pub seed: u64,
    pub stream_id: u64,
    pub antithetic: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            samples: 100_000,
            seed: 0,
            stream_id: 0,
            antithetic: false,
        }
    }
}

impl EstimatorConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        EstimatorConfig {
            samples,
            seed,
            ..Default::default()
        }
    }

    pub fn with_stream(mut self, stream_id: u64) -> Self {
        self.stream_id = stream_id;
        self
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    /// A child stream, used when one estimate is assembled from several
    /// independent runs.
    pub(crate) fn substream(self, k: u64) -> Self {
        let stream_id = self
            .stream_id
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(k + 1);
        EstimatorConfig { stream_id, ..self }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Domain(format!(
                "sample count {} below the minimum of {MIN_SAMPLES}",
                self.samples
            )));
        }
        Ok(())
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(samples)`; zero for exact values.
    pub std_error: f64,
    /// Observations behind the estimate; zero for exact values.
    pub samples: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            samples: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.samples == 0
    }

    /// `|value - target| <= k * std_error + abs_tol`.
    pub fn agrees_with(&self, target: f64, k: f64, abs_tol: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + abs_tol
    }

    /// Deviation from `target` in standard errors (infinite for an exact
    /// mismatch).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.value - target;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }

    pub(crate) fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Estimate {
            value: f(self.value),
            ..self
        }
    }

    pub(crate) fn scale(self, k: f64) -> Self {
        Estimate {
            value: k * self.value,
            std_error: k.abs() * self.std_error,
            samples: self.samples,
        }
    }
}

/// Value and first two derivatives of a curve at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub value: Estimate,
    pub first: Estimate,
    pub second: Estimate,
}

impl Derivatives {
    pub fn exact((v, d1, d2): (f64, f64, f64)) -> Self {
        Derivatives {
            value: Estimate::exact(v),
            first: Estimate::exact(d1),
            second: Estimate::exact(d2),
        }
    }

    pub fn order(&self, order: u8) -> Result<Estimate> {
        match order {
            0 => Ok(self.value),
            1 => Ok(self.first),
            2 => Ok(self.second),
            o => Err(Error::Unsupported(format!("derivative order {o}"))),
        }
    }

    /// `1 - f` with negated derivatives.
    pub fn complement(self) -> Self {
        Derivatives {
            value: self.value.map(|v| 1.0 - v),
            first: self.first.scale(-1.0),
            second: self.second.scale(-1.0),
        }
    }
}

/// Zero-mean likelihood-ratio weights `[1, w1, w2]` for a squared noise norm
/// `t` at point `x` of `variable`.
#[inline]
pub(crate) fn weights(variable: Variable, x: f64, n: f64, t: f64) -> [f64; 3] {
    match variable {
        Variable::Snr => snr_weights(x, n, t),
        Variable::Amplitude => {
            let [_, w1, w2] = snr_weights(x * x, n, t);
            [1.0, 2.0 * x * w1, 2.0 * w1 + 4.0 * x * x * w2]
        }
        Variable::NoisePower => {
            let p = x;
            let p2 = p * p;
            [
                1.0,
                (t - n * p) / (2.0 * p2),
                (t * t - (2.0 * n + 4.0) * p * t + n * (n + 2.0) * p2) / (4.0 * p2 * p2),
            ]
        }
    }
}

#[inline]
fn snr_weights(gamma: f64, n: f64, t: f64) -> [f64; 3] {
    let r = (2.0 * n).sqrt();
    let a1 = (n + r) / gamma;
    let a2 = (n - r) / gamma;
    [1.0, 0.5 * (n / gamma - t), 0.25 * (t - a1) * (t - a2)]
}

/// Noise scale `sigma` for a point of `variable`.
#[inline]
pub(crate) fn noise_sigma(variable: Variable, x: f64) -> f64 {
    match variable {
        Variable::Snr => 1.0 / x.sqrt(),
        Variable::Amplitude => 1.0 / x,
        Variable::NoisePower => x.sqrt(),
    }
}
