//! Gaussian tail function, noise-ball masses and the universal derivative
//! bound constants.
//!
//! Everything here is closed form. The Q-function goes through the
//! complementary error function of `libm` (musl port, about one ulp), which
//! keeps the relative error well under 1e-12 on `|x| <= 8`. Ball masses use
//! the regularized lower incomplete gamma function computed with the usual
//! series / continued-fraction split.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Gaussian tail probability `Q(x) = Pr[Z > x]`.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Q'(x) = -phi(x)`.
pub fn q_prime(x: f64) -> f64 {
    -phi(x)
}

/// `Q''(x) = x phi(x)`.
pub fn q_second(x: f64) -> f64 {
    x * phi(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized lower incomplete gamma `P(a, x) = gamma*(a; x) / Gamma(a)`.
///
/// Series for `x < a + 1`, modified Lentz continued fraction for the upper
/// tail otherwise. Absolute error is below 1e-14 for the half-integer `a`
/// used by the ball masses.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (sum.ln() + log_prefactor).exp().min(1.0)
    } else {
        1.0 - upper_gamma_fraction(a, x, log_prefactor)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`, computed
/// directly in the tail so that small values keep their relative accuracy.
pub fn regularized_upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - regularized_lower_gamma(a, x)
    } else {
        let log_prefactor = -x + a * x.ln() - ln_gamma(a);
        upper_gamma_fraction(a, x, log_prefactor)
    }
}

fn upper_gamma_fraction(a: f64, x: f64, log_prefactor: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (log_prefactor.exp() * h).clamp(0.0, 1.0)
}

/// Probability that `n`-dimensional noise with per-dimension variance
/// `1/gamma` lands in the ball of radius `radius` around the origin.
pub fn sphere_mass(n: usize, gamma: f64, radius: f64) -> f64 {
    assert!(n >= 1);
    if radius <= 0.0 {
        return 0.0;
    }
    regularized_lower_gamma(n as f64 / 2.0, gamma * radius * radius / 2.0)
}

/// `x^{n/2} e^{-x} / Gamma(n/2)`, evaluated in the log domain.
pub(crate) fn gamma_kernel(n: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = n as f64 / 2.0;
    (h * x.ln() - x - ln_gamma(h)).exp()
}

/// Derivatives in `gamma` of the ball mass at fixed radius: returns
/// `(P, dP/dgamma, d2P/dgamma2)` for `P = sphere_mass(n, gamma, radius)`.
pub fn sphere_mass_snr_derivatives(n: usize, gamma: f64, radius: f64) -> (f64, f64, f64) {
    let x = gamma * radius * radius / 2.0;
    let k = gamma_kernel(n, x);
    let h = n as f64 / 2.0;
    (
        sphere_mass(n, gamma, radius),
        k / gamma,
        k * (h - 1.0 - x) / (gamma * gamma),
    )
}

/// The constants that bound the first two SER derivatives for any
/// constellation of a given dimension, together with the curvature roots
/// that drive the convexity thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub dimension: usize,
    /// First-derivative constant `c_n`: `-c_n/gamma <= P'_e <= 0`.
    pub c_n: f64,
    /// `(2 + sqrt(2n)) / 2`.
    pub a_n: f64,
    /// `(2 - sqrt(2n)) / 2`.
    pub b_n: f64,
    /// SNR second-derivative bounds: `B_l/gamma^2 <= P''_e <= B_u/gamma^2`.
    pub snr_upper: f64,
    pub snr_lower: f64,
    /// `(n + 2 +- sqrt(2(n+2))) / 2`.
    pub noise_b1: f64,
    pub noise_b2: f64,
    /// Noise-power second-derivative bounds: `b_l/P^2 <= P''_e <= b_u/P^2`.
    pub noise_upper: f64,
    pub noise_lower: f64,
    /// `n +- sqrt(2n)`.
    pub snr_curvature_roots: (f64, f64),
    /// `n + 2 +- sqrt(2(n+2))`.
    pub noise_curvature_roots: (f64, f64),
    /// `(2n + 1 +- sqrt(8n + 1)) / 2`.
    pub amplitude_roots: (f64, f64),
}

pub fn bound_constants(n: usize) -> BoundConstants {
    assert!(n >= 1, "dimension must be positive");
    let nf = n as f64;
    let s = (2.0 * nf).sqrt();
    let s2 = (2.0 * (nf + 2.0)).sqrt();
    let a_n = (2.0 + s) / 2.0;
    let b_n = (2.0 - s) / 2.0;
    // Extremal balls sit at effective SNR n +- sqrt(2n); the kernel is
    // evaluated at half of that, the multiplier is |n/2 - 1 - x|.
    let x_upper = (nf + s) / 2.0;
    let x_lower = ((nf - s) / 2.0).max(0.0);
    let snr_upper = a_n * gamma_kernel(n, x_upper);
    let snr_lower = if b_n < 0.0 {
        b_n * gamma_kernel(n, x_lower)
    } else {
        0.0
    };
    let noise_b1 = (nf + 2.0 + s2) / 2.0;
    let noise_b2 = (nf + 2.0 - s2) / 2.0;
    let root = ((nf + 2.0) / 2.0).sqrt();
    let r8 = (8.0 * nf + 1.0).sqrt();
    BoundConstants {
        dimension: n,
        c_n: gamma_kernel(n, nf / 2.0),
        a_n,
        b_n,
        snr_upper,
        snr_lower,
        noise_b1,
        noise_b2,
        noise_upper: root * gamma_kernel(n, noise_b1),
        noise_lower: -root * gamma_kernel(n, noise_b2),
        snr_curvature_roots: (nf + s, nf - s),
        noise_curvature_roots: (nf + 2.0 + s2, nf + 2.0 - s2),
        amplitude_roots: ((2.0 * nf + 1.0 + r8) / 2.0, (2.0 * nf + 1.0 - r8) / 2.0),
    }
}

/// Second derivative of `ln Q(sqrt(gamma))` in `gamma`, in the factored
/// form whose sign is carried by [`q_bound_31_margin`].
pub fn qsqrt_log_second_derivative(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("snr must be positive, got {gamma}")));
    }
    let u = gamma.sqrt();
    let qv = q(u);
    let lead = (-gamma / 2.0).exp() / (4.0 * (2.0 * PI).sqrt() * qv * qv);
    Ok(lead * (gamma + 1.0) / (gamma * u) * q_bound_31_margin(u))
}

/// `Q(x) - x e^{-x^2/2} / (sqrt(2 pi) (1 + x^2))`, non-negative for `x >= 0`.
pub fn q_bound_31_margin(x: f64) -> f64 {
    q(x) - x * phi(x) / (1.0 + x * x)
}

/// `Q(sqrt(gamma))` and its first two derivatives in `gamma`.
pub fn q_sqrt_derivatives(gamma: f64) -> (f64, f64, f64) {
    scaled_q_sqrt_derivatives(1.0, gamma)
}

/// `Q(sqrt(k gamma))` and its first two derivatives in `gamma`.
pub(crate) fn scaled_q_sqrt_derivatives(k: f64, gamma: f64) -> (f64, f64, f64) {
    let u = (k * gamma).sqrt();
    let p = phi(u);
    (
        q(u),
        -p * k / (2.0 * u),
        k * k * p * (u * u + 1.0) / (4.0 * u * u * u),
    )
}

/// Lower bound on `Q(sqrt(gamma))''` implied by log-convexity:
/// `(Q(sqrt(gamma))')^2 / Q(sqrt(gamma)) = e^{-gamma} / (8 pi gamma Q(sqrt(gamma)))`.
pub fn qsqrt_log_convexity_floor(gamma: f64) -> f64 {
    (-gamma).exp() / (8.0 * PI * gamma * q(gamma.sqrt()))
}

/// Second derivative of `x -> Q(1/sqrt(x))`:
/// `(phi(u)/4) x^{-5/2} (1/x - 3)` with `u = x^{-1/2}`.
/// Positive below `x = 1/3`, negative above.
pub fn q_inv_sqrt_second_derivative(x: f64) -> f64 {
    let u = 1.0 / x.sqrt();
    phi(u) / 4.0 * x.powf(-2.5) * (1.0 / x - 3.0)
}

/// Inflection of `x -> Q(1/sqrt(x))`.
pub const Q_INV_SQRT_INFLECTION: f64 = 1.0 / 3.0;

/// `ln f((x1+x2)/2) - (ln f(x1) + ln f(x2))/2`; non-negative when the
/// midpoint log-concavity inequality holds for the pair.
pub fn log_concavity_margin<F: Fn(f64) -> f64>(f: F, x1: f64, x2: f64) -> Result<f64> {
    let mid = 0.5 * (x1 + x2);
    let (a, b, m) = (f(x1), f(x2), f(mid));
    for (x, v) in [(x1, a), (x2, b), (mid, m)] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "function must be positive, got {v} at {x}"
            )));
        }
    }
    Ok(m.ln() - 0.5 * (a.ln() + b.ln()))
}

/// `(f(x1) + f(x2))/2 - f((x1+x2)/2)`; non-negative when the midpoint
/// convexity inequality holds.
pub fn convexity_margin<F: Fn(f64) -> f64>(f: F, x1: f64, x2: f64) -> f64 {
    0.5 * (f(x1) + f(x2)) - f(0.5 * (x1 + x2))
}

#[cfg(test)]
pub(crate) const SQRT2: f64 = std::f64::consts::SQRT_2;
