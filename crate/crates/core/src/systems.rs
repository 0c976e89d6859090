//! System-level uses of convexity: V-BLAST power allocation and the
//! conventional-OFDM versus single-carrier comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::ConvexityReport;
use crate::engine::{ErrorCurve, Estimate, Quantity, Variable};
use crate::error::{Error, Result};

const LAMBDA_STEPS: usize = 400;
const INVERSION_STEPS: usize = 200;
/// Smallest stream fraction probed when inverting the marginal gain.
const ALPHA_FLOOR: f64 = 1e-12;

fn error_curve(curve: &ErrorCurve, variable: Variable) -> Result<ErrorCurve> {
    let c = if curve.variable() == variable {
        curve.clone()
    } else {
        curve.in_variable(variable)?
    };
    Ok(if c.quantity() == Quantity::Error { c } else { c.complement() })
}

/// Probability that at least one of the streams is in error,
/// `1 - prod (1 - P_e(alpha_i gamma_i))`.
pub fn vblast_bler(curve: &ErrorCurve, alphas: &[f64], gammas: &[f64]) -> Result<Estimate> {
    if alphas.len() != gammas.len() {
        return Err(Error::DimensionMismatch {
            expected: gammas.len(),
            got: alphas.len(),
        });
    }
    let pe = error_curve(curve, Variable::Snr)?;
    let mut keep = 1.0;
    let mut rel_var = 0.0;
    let mut samples = 0;
    for (&a, &g) in alphas.iter().zip(gammas) {
        if !(a >= 0.0 && g > 0.0 && a.is_finite() && g.is_finite()) {
            return Err(Error::Domain(format!("stream power {a} x {g} is not admissible")));
        }
        let e = if a == 0.0 {
            pe.value_at_origin()?
        } else {
            pe.value(a * g)?
        };
        let p = 1.0 - e.value;
        keep *= p;
        if p > 0.0 {
            rel_var += (e.std_error / p).powi(2);
        }
        samples = samples.max(e.samples);
    }
    Ok(Estimate {
        value: 1.0 - keep,
        std_error: keep * rel_var.sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    /// Power fractions, summing to the number of streams.
    pub alphas: Vec<f64>,
    /// Block error rate at `alphas`.
    pub objective: f64,
    /// Block error rate with uniform power.
    pub uniform_objective: f64,
    /// Dual variable of the power constraint.
    pub lambda: f64,
    /// Largest relative stationarity or feasibility violation.
    pub kkt_residual: f64,
    /// False when the error curve is not known to be convex, in which case
    /// the stationary point need not be the unique optimum.
    pub uniqueness_guaranteed: bool,
    pub notes: Vec<String>,
}

/// Marginal gain of stream `i`, `-gamma P_e'(a gamma) / (1 - P_e(a gamma))`.
fn gain(pe: &ErrorCurve, gamma: f64, a: f64) -> Result<f64> {
    let d = pe.derivatives(a * gamma)?;
    Ok(-gamma * d.first.value / (1.0 - d.value.value))
}

/// Fraction at which a stream's marginal gain drops to `lambda`.
fn invert(pe: &ErrorCurve, gamma: f64, lambda: f64, total: f64) -> Result<f64> {
    if gain(pe, gamma, ALPHA_FLOOR)? <= lambda {
        return Ok(0.0);
    }
    if gain(pe, gamma, total)? >= lambda {
        return Ok(total);
    }
    let (mut lo, mut hi) = (ALPHA_FLOOR, total);
    for _ in 0..INVERSION_STEPS {
        let mid = 0.5 * (lo + hi);
        if gain(pe, gamma, mid)? > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimizes the block error rate over power fractions summing to the
/// number of streams, by bisection on the dual variable.
pub fn vblast_optimize(curve: &ErrorCurve, gammas: &[f64]) -> Result<PowerAllocation> {
    let m = gammas.len();
    if m == 0 {
        return Err(Error::Domain("need at least one stream".into()));
    }
    if gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Domain("stream SNRs must be positive".into()));
    }
    let pe = error_curve(curve, Variable::Snr)?;
    let total = m as f64;
    let uniform = vec![1.0; m];
    let uniform_objective = vblast_bler(&pe, &uniform, gammas)?.value;
    let mut notes = Vec::new();
    let uniqueness_guaranteed = pe.dimension().is_some_and(|n| n <= 2);
    if !uniqueness_guaranteed {
        notes.push("uniqueness not guaranteed: error curve not known to be convex".into());
    }
    if gammas.iter().all(|g| *g == gammas[0]) {
        let lambda = gain(&pe, gammas[0], 1.0)?;
        notes.push("equal stream SNRs: uniform allocation by symmetry".into());
        return Ok(PowerAllocation {
            alphas: uniform,
            objective: uniform_objective,
            uniform_objective,
            lambda,
            kkt_residual: 0.0,
            uniqueness_guaranteed,
            notes,
        });
    }

    let allocate = |lambda: f64| -> Result<Vec<f64>> {
        gammas.par_iter().map(|&g| invert(&pe, g, lambda, total)).collect()
    };
    // at lambda_lo every stream wants the whole budget, at lambda_hi none
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &g in gammas {
        lo = lo.min(gain(&pe, g, total)?);
        hi = hi.max(gain(&pe, g, ALPHA_FLOOR)?);
    }
    if !(lo > 0.0 && hi.is_finite() && hi > lo) {
        return Err(Error::NotBracketed(format!("marginal gains [{lo}, {hi}] do not bracket a dual value")));
    }
    let (mut ln_lo, mut ln_hi) = (lo.ln(), hi.ln());
    let mut steps = 0;
    while ln_hi - ln_lo > 1e-15 * ln_hi.abs().max(1.0) {
        let mid = 0.5 * (ln_lo + ln_hi);
        let s: f64 = allocate(mid.exp())?.iter().sum();
        if s > total {
            ln_lo = mid;
        } else {
            ln_hi = mid;
        }
        steps += 1;
        if steps > LAMBDA_STEPS {
            return Err(Error::NonConvergence("dual bisection did not converge".into()));
        }
    }
    let lambda = (0.5 * (ln_lo + ln_hi)).exp();
    let raw = allocate(lambda)?;
    let sum: f64 = raw.iter().sum();
    let alphas: Vec<f64> = raw.iter().map(|a| a * total / sum).collect();

    let mut kkt_residual = (alphas.iter().sum::<f64>() - total).abs() / total;
    for (&a, &g) in alphas.iter().zip(gammas) {
        let r = if a > 0.0 {
            (gain(&pe, g, a)? - lambda).abs() / lambda
        } else {
            ((gain(&pe, g, ALPHA_FLOOR)? - lambda) / lambda).max(0.0)
        };
        kkt_residual = kkt_residual.max(r);
    }
    let objective = vblast_bler(&pe, &alphas, gammas)?.value;
    if objective > uniform_objective {
        notes.push("stationary point is worse than uniform allocation".into());
    }
    Ok(PowerAllocation {
        alphas,
        objective,
        uniform_objective,
        lambda,
        kkt_residual,
        uniqueness_guaranteed,
        notes,
    })
}

/// Per-tone channel of an OFDM block with zero-forcing equalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmScenario {
    /// Tone gain magnitudes `|H_k|`.
    pub gains: Vec<f64>,
    /// Noise power before equalization.
    pub noise_power: f64,
}

impl OfdmScenario {
    pub fn validate(&self) -> Result<()> {
        if self.gains.len() < 2 {
            return Err(Error::Domain("an OFDM scenario needs at least two tones".into()));
        }
        if self.gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Domain("tone gains must be positive".into()));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::Domain("noise power must be positive".into()));
        }
        Ok(())
    }

    /// Post-equalization noise power on each tone without precoding.
    pub fn tone_noise(&self) -> Vec<f64> {
        self.gains.iter().map(|h| self.noise_power / (h * h)).collect()
    }

    /// Noise power per symbol with the Fourier precoder, which spreads the
    /// tone noise evenly.
    pub fn spread_noise(&self) -> f64 {
        let n = self.gains.len() as f64;
        self.noise_power * self.gains.iter().map(|h| 1.0 / (h * h)).sum::<f64>() / n
    }
}

/// Noise-power regimes of an error curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds {
    /// Convex for noise powers up to this value.
    pub convex_to: f64,
    /// Concave from this value on, when such a region exists.
    pub concave_from: Option<f64>,
}

impl RegimeThresholds {
    /// Reads the thresholds from a noise-power classification.
    pub fn from_report(report: &ConvexityReport) -> Result<Self> {
        if report.variable != Variable::NoisePower {
            return Err(Error::Unsupported("regime thresholds need a noise-power classification".into()));
        }
        let convex_to = report
            .threshold("noise_convex_to")
            .ok_or_else(|| Error::Unsupported("classification has no convex threshold".into()))?;
        Ok(RegimeThresholds {
            convex_to,
            concave_from: report.threshold("noise_concave_from"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Every tone noise power is in the convex region.
    High,
    /// Every tone noise power is in the concave region.
    Low,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OfdmReport {
    /// Error rate of conventional OFDM (identity precoder).
    pub ofdm: Estimate,
    /// Error rate of single-carrier transmission (Fourier precoder).
    pub sc_cp: Estimate,
    /// `ofdm - sc_cp`.
    pub difference: f64,
    pub tone_noise: Vec<f64>,
    pub spread_noise: f64,
    pub regime: Regime,
    /// Whether the ordering expected in the classified regime holds;
    /// `None` when unclassified.
    pub ordering_holds: Option<bool>,
}

/// Compares conventional OFDM with single-carrier transmission under
/// zero forcing, and checks the ordering convexity predicts.
pub fn ofdm_compare(scenario: &OfdmScenario, curve: &ErrorCurve, thresholds: RegimeThresholds) -> Result<OfdmReport> {
    scenario.validate()?;
    let pe = error_curve(curve, Variable::NoisePower)?;
    let tone_noise = scenario.tone_noise();
    let spread = scenario.spread_noise();
    let per_tone: Vec<Estimate> = tone_noise.iter().map(|&p| pe.value(p)).collect::<Result<_>>()?;
    let n = per_tone.len() as f64;
    let ofdm = Estimate {
        value: per_tone.iter().map(|e| e.value).sum::<f64>() / n,
        std_error: per_tone.iter().map(|e| e.std_error).sum::<f64>() / n,
        samples: per_tone.iter().map(|e| e.samples).max().unwrap_or(0),
    };
    let sc_cp = pe.value(spread)?;
    let difference = ofdm.value - sc_cp.value;
    let regime = if tone_noise.iter().all(|&p| p <= thresholds.convex_to) {
        Regime::High
    } else if thresholds
        .concave_from
        .is_some_and(|c| tone_noise.iter().all(|&p| p >= c))
    {
        Regime::Low
    } else {
        Regime::Unclassified
    };
    let slack = 3.0 * (ofdm.std_error + sc_cp.std_error) + 1e-12 * (ofdm.value.abs() + sc_cp.value.abs());
    let ordering_holds = match regime {
        Regime::High => Some(difference >= -slack),
        Regime::Low => Some(difference <= slack),
        Regime::Unclassified => None,
    };
    Ok(OfdmReport {
        ofdm,
        sc_cp,
        difference,
        tone_noise,
        spread_noise: spread,
        regime,
        ordering_holds,
    })
}
