use serde::{Deserialize, Serialize};

use super::montecarlo::run;
use super::{noise_sigma, weights, Derivatives, Estimate, EstimatorConfig, Variable};
use crate::constellation::{Constellation, DecisionRegion};
use crate::error::{Error, Result};

/// What a Monte Carlo run counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Target {
    /// Prior-averaged symbol error rate `P_e`.
    Ser,
    /// `P_c = 1 - P_e`.
    Correct,
    /// `P_ei` for transmitted point `index`.
    ConditionalSer { index: usize },
    /// `P_ci = 1 - P_ei`.
    ConditionalCorrect { index: usize },
    /// `Pr[decide to | from sent]`.
    Pep { from: usize, to: usize },
    /// Bit error rate by direct bit counting.
    Ber,
}

impl Target {
    pub(crate) fn validate(&self, c: &Constellation) -> Result<()> {
        let m = c.len();
        let check = |i: usize| {
            if i < m {
                Ok(())
            } else {
                Err(Error::IndexOutOfRange { index: i, len: m })
            }
        };
        match *self {
            Target::Ser | Target::Correct => Ok(()),
            Target::ConditionalSer { index } | Target::ConditionalCorrect { index } => check(index),
            Target::Pep { from, to } => {
                check(from)?;
                check(to)?;
                if from == to {
                    Err(Error::Domain("pairwise error needs two distinct points".into()))
                } else {
                    Ok(())
                }
            }
            Target::Ber => c.bit_labels().map(|_| ()).ok_or(Error::MissingLabels),
        }
    }

    /// True when the target is a probability of correct detection.
    pub fn is_correct(&self) -> bool {
        matches!(self, Target::Correct | Target::ConditionalCorrect { .. })
    }
}

/// Picks a symbol from cumulative priors.
#[inline]
fn pick(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

fn cumulative(priors: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    priors
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Value and first two derivatives of `target` in `variable` at `x`, from one
/// sample set.
pub fn estimate_derivatives(
    c: &Constellation,
    target: Target,
    variable: Variable,
    x: f64,
    cfg: &EstimatorConfig,
) -> Result<Derivatives> {
    target.validate(c)?;
    variable.check_point(x)?;
    cfg.validate()?;
    let n = c.dimension();
    let nf = n as f64;
    let sigma = noise_sigma(variable, x);
    let s2 = sigma * sigma;
    let cum = cumulative(c.priors());
    let labels = c.bit_labels();
    let bits = c.bits_per_symbol() as f64;
    let est = run(cfg, n, 3, |z, u, out| {
        let (sent, fixed) = match target {
            Target::ConditionalSer { index } | Target::ConditionalCorrect { index } => (index, true),
            Target::Pep { from, .. } => (from, true),
            _ => (0, false),
        };
        let i = if fixed { sent } else { pick(&cum, u) };
        let det = c.detect_scaled(i, z, sigma);
        let g = match target {
            Target::Ser | Target::ConditionalSer { .. } => (det != i) as u8 as f64,
            Target::Correct | Target::ConditionalCorrect { .. } => (det == i) as u8 as f64,
            Target::Pep { to, .. } => (det == to) as u8 as f64,
            Target::Ber => {
                let l = labels.expect("validated");
                (l[i] ^ l[det]).count_ones() as f64 / bits
            }
        };
        if g != 0.0 {
            let t = s2 * z.iter().map(|v| v * v).sum::<f64>();
            let w = weights(variable, x, nf, t);
            for k in 0..3 {
                out[k] = g * w[k];
            }
        }
    });
    Ok(Derivatives {
        value: est[0],
        first: est[1],
        second: est[2],
    })
}

/// One derivative order (0, 1 or 2) of `target`.
pub fn estimate_derivative(
    c: &Constellation,
    target: Target,
    variable: Variable,
    order: u8,
    x: f64,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    if order > 2 {
        return Err(Error::Unsupported(format!("derivative order {order}")));
    }
    estimate_derivatives(c, target, variable, x, cfg)?.order(order)
}

pub fn estimate_conditional_ser(
    c: &Constellation,
    i: usize,
    variable: Variable,
    x: f64,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    Ok(estimate_derivatives(c, Target::ConditionalSer { index: i }, variable, x, cfg)?.value)
}

/// Prior-averaged SER, the transmitted symbol drawn inside the loop.
pub fn estimate_ser(c: &Constellation, variable: Variable, x: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    Ok(estimate_derivatives(c, Target::Ser, variable, x, cfg)?.value)
}

/// `Pr[decide j | i sent]` at SNR `gamma`.
pub fn estimate_pep(c: &Constellation, i: usize, j: usize, gamma: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    Ok(estimate_derivatives(c, Target::Pep { from: i, to: j }, Variable::Snr, gamma, cfg)?.value)
}

/// All decision probabilities `Pr[decide j | i sent]`, `j = 0..M`, from one
/// sample set. Entry `i` is `P_ci`; the rest sum to `P_ei`.
pub fn estimate_pep_row(c: &Constellation, i: usize, gamma: f64, cfg: &EstimatorConfig) -> Result<Vec<Estimate>> {
    Target::ConditionalSer { index: i }.validate(c)?;
    Variable::Snr.check_point(gamma)?;
    cfg.validate()?;
    let sigma = 1.0 / gamma.sqrt();
    Ok(run(cfg, c.dimension(), c.len(), |z, _, out| {
        out[c.detect_scaled(i, z, sigma)] = 1.0;
    }))
}

/// BER by direct counting of bit errors, symbols drawn from the priors.
pub fn estimate_ber(c: &Constellation, gamma: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    Ok(estimate_derivatives(c, Target::Ber, Variable::Snr, gamma, cfg)?.value)
}

/// BER assembled as `sum_i sum_j (h_ij / log2 M) Pr[s_i] PEP(i -> j)` from
/// one independent PEP row per transmitted point.
pub fn estimate_ber_assembled(c: &Constellation, gamma: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    if c.bit_labels().is_none() {
        return Err(Error::MissingLabels);
    }
    let bits = c.bits_per_symbol() as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    for (i, &prior) in c.priors().iter().enumerate() {
        if prior == 0.0 {
            continue;
        }
        let row = estimate_pep_row(c, i, gamma, &cfg.substream(i as u64))?;
        let h: Vec<f64> = (0..c.len())
            .map(|j| c.hamming(i, j).expect("labelled") as f64 / bits)
            .collect();
        let mean: f64 = row.iter().zip(&h).map(|(e, h)| h * e.value).sum();
        let second: f64 = row.iter().zip(&h).map(|(e, h)| h * h * e.value).sum();
        // the row indicators are mutually exclusive, so the payoff variance
        // follows from the row means alone
        let n = row[0].samples as f64;
        let row_var = ((second - mean * mean) * n / (n - 1.0)).max(0.0) / n;
        value += prior * mean;
        var += prior * prior * row_var;
        samples += row[0].samples;
    }
    Ok(Estimate {
        value,
        std_error: var.sqrt(),
        samples,
    })
}

/// A region of noise space, in coordinates centred on the transmitted point.
pub trait NoiseRegion: Send + Sync {
    fn dimension(&self) -> usize;

    /// Whether `sigma * z` lies in the region.
    fn contains_scaled(&self, z: &[f64], sigma: f64) -> bool;
}

/// Ball `|xi| <= radius`: the region that attains the universal derivative
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub dimension: usize,
    pub radius: f64,
}

impl NoiseRegion for Ball {
    fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn contains_scaled(&self, z: &[f64], sigma: f64) -> bool {
        sigma * sigma * z.iter().map(|v| v * v).sum::<f64>() <= self.radius * self.radius
    }
}

impl NoiseRegion for DecisionRegion {
    fn dimension(&self) -> usize {
        self.dimension
    }

    #[inline]
    fn contains_scaled(&self, z: &[f64], sigma: f64) -> bool {
        self.halfspaces.iter().all(|h| {
            sigma * h.normal.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() <= h.offset
        })
    }
}

/// Probability that the noise falls inside `region`, with its first two
/// derivatives.
pub fn estimate_region_derivatives(
    region: &dyn NoiseRegion,
    variable: Variable,
    x: f64,
    cfg: &EstimatorConfig,
) -> Result<Derivatives> {
    variable.check_point(x)?;
    cfg.validate()?;
    let n = region.dimension();
    let nf = n as f64;
    let sigma = noise_sigma(variable, x);
    let s2 = sigma * sigma;
    let est = run(cfg, n, 3, |z, _, out| {
        if region.contains_scaled(z, sigma) {
            let t = s2 * z.iter().map(|v| v * v).sum::<f64>();
            out.copy_from_slice(&weights(variable, x, nf, t));
        }
    });
    Ok(Derivatives {
        value: est[0],
        first: est[1],
        second: est[2],
    })
}
