//! Error curves: scalar functions of SNR, amplitude or noise power with
//! value and derivative queries.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::estimators::{estimate_derivatives, estimate_region_derivatives, NoiseRegion, Target};
use super::{Derivatives, Estimate, EstimatorConfig, Variable};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::gaussian::{phi, q, scaled_q_sqrt_derivatives, sphere_mass_snr_derivatives};
use crate::quadrature::integrate;

/// Smallest SNR used to stand in for the `gamma -> 0` limit of a Monte Carlo
/// curve.
const TINY_SNR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MonteCarlo,
    ClosedForm,
}

/// Whether a curve reports an error or a success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Error,
    Correct,
}

/// Families with exact (or one-dimensional quadrature) error rates, all at
/// unit mean symbol energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum ClosedForm {
    /// `Q(sqrt(gamma))`.
    Bpsk,
    /// `2p - p^2`, `p = Q(sqrt(gamma/2))`.
    Qpsk,
    /// `2 (M-1)/M Q(sqrt(3 gamma / (M^2 - 1)))`.
    Pam { order: usize },
    /// Square QAM as two independent `sqrt(M)`-PAM rails.
    Qam { order: usize },
    /// Conditional SER of point `index` of unit-energy M-PAM.
    PamConditional { order: usize, index: usize },
    /// `±e_k` in `dimension` dimensions, by quadrature over the correct
    /// coordinate.
    Biorthogonal { dimension: usize },
    /// Noise ball `|xi| <= radius`: the "error" is leaving the ball.
    SphereRegion { dimension: usize, radius: f64 },
}

impl ClosedForm {
    /// `(P_e, dP_e/dgamma, d2P_e/dgamma2)`.
    pub fn snr_derivatives(&self, gamma: f64) -> Result<(f64, f64, f64)> {
        Ok(match *self {
            ClosedForm::Bpsk => scaled_q_sqrt_derivatives(1.0, gamma),
            ClosedForm::Qpsk => two_rail(scaled_q_sqrt_derivatives(0.5, gamma)),
            ClosedForm::Pam { order } => {
                check_order(order, "pam")?;
                let m = order as f64;
                let (v, d1, d2) = scaled_q_sqrt_derivatives(3.0 / (m * m - 1.0), gamma);
                let k = 2.0 * (m - 1.0) / m;
                (k * v, k * d1, k * d2)
            }
            ClosedForm::Qam { order } => {
                let l = (order as f64).sqrt().round() as usize;
                if l * l != order || l < 2 {
                    return Err(Error::Unsupported(format!("qam order {order} is not a square")));
                }
                let lf = l as f64;
                let (v, d1, d2) = scaled_q_sqrt_derivatives(1.5 / (order as f64 - 1.0), gamma);
                let k = 2.0 * (1.0 - 1.0 / lf);
                two_rail((k * v, k * d1, k * d2))
            }
            ClosedForm::PamConditional { order, index } => {
                check_order(order, "pam")?;
                if index >= order {
                    return Err(Error::IndexOutOfRange { index, len: order });
                }
                let m = order as f64;
                let (v, d1, d2) = scaled_q_sqrt_derivatives(3.0 / (m * m - 1.0), gamma);
                let k = if index == 0 || index == order - 1 { 1.0 } else { 2.0 };
                (k * v, k * d1, k * d2)
            }
            ClosedForm::Biorthogonal { dimension } => {
                if dimension == 0 {
                    return Err(Error::Unsupported("biorthogonal needs dimension >= 1".into()));
                }
                biorthogonal_error(dimension, gamma)?
            }
            ClosedForm::SphereRegion { dimension, radius } => {
                if dimension == 0 || !(radius > 0.0) {
                    return Err(Error::Unsupported("sphere region needs n >= 1 and radius > 0".into()));
                }
                let (pc, d1, d2) = sphere_mass_snr_derivatives(dimension, gamma, radius);
                (1.0 - pc, -d1, -d2)
            }
        })
    }

    /// `lim P_e` as `gamma -> 0`.
    pub fn limit_at_zero_snr(&self) -> f64 {
        match *self {
            ClosedForm::Bpsk => 0.5,
            ClosedForm::Qpsk => 0.75,
            ClosedForm::Pam { order } => (order as f64 - 1.0) / order as f64,
            ClosedForm::Qam { order } => 1.0 - 1.0 / order as f64,
            ClosedForm::PamConditional { order, index } => {
                if index == 0 || index + 1 == order {
                    0.5
                } else {
                    1.0
                }
            }
            ClosedForm::Biorthogonal { dimension } => 1.0 - 0.5 / dimension as f64,
            ClosedForm::SphereRegion { .. } => 1.0,
        }
    }

    /// Signal-space dimension of the family.
    pub fn dimension(&self) -> usize {
        match *self {
            ClosedForm::Bpsk | ClosedForm::Pam { .. } | ClosedForm::PamConditional { .. } => 1,
            ClosedForm::Qpsk | ClosedForm::Qam { .. } => 2,
            ClosedForm::Biorthogonal { dimension } | ClosedForm::SphereRegion { dimension, .. } => dimension,
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClosedForm::Bpsk => write!(f, "bpsk"),
            ClosedForm::Qpsk => write!(f, "qpsk"),
            ClosedForm::Pam { order } => write!(f, "pam{order}"),
            ClosedForm::Qam { order } => write!(f, "qam{order}"),
            ClosedForm::PamConditional { order, index } => write!(f, "pam{order}[{index}]"),
            ClosedForm::Biorthogonal { dimension } => write!(f, "biorthogonal{}", 2 * dimension),
            ClosedForm::SphereRegion { dimension, radius } => write!(f, "sphere(n={dimension},R={radius})"),
        }
    }
}

fn check_order(order: usize, what: &str) -> Result<()> {
    if order < 2 {
        Err(Error::Unsupported(format!("{what} order {order}")))
    } else {
        Ok(())
    }
}

/// `1 - (1 - p)^2` for two independent rails with error `p`.
fn two_rail((p, d1, d2): (f64, f64, f64)) -> (f64, f64, f64) {
    (
        2.0 * p - p * p,
        2.0 * d1 * (1.0 - p),
        2.0 * d2 * (1.0 - p) - 2.0 * d1 * d1,
    )
}

/// Biorthogonal symbol error `P_e = Q(a) + int_0^inf phi(t - a) h(t) dt`
/// with `a = sqrt(gamma)` and `h = 1 - (1 - 2Q(t))^(n-1)`, plus its SNR
/// derivatives (differentiate `phi` in `a`). Splitting off `Q(a)` keeps
/// every term positive or small, so high-SNR derivatives stay accurate
/// instead of drowning in cancellation between O(1) integrals.
fn biorthogonal_error(n: usize, gamma: f64) -> Result<(f64, f64, f64)> {
    let a = gamma.sqrt();
    let m = (n - 1) as f64;
    let h = |t: f64| -(m * (-2.0 * q(t)).ln_1p()).exp_m1();
    // the integrand peaks near a/2 for large a; split there so no panel
    // straddles a narrow peak
    let cuts = [0.0, 0.5 * a, a, a + 40.0];
    let moment = |w: &dyn Fn(f64) -> f64| -> Result<f64> {
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += integrate(|t| w(t - a) * phi(t - a) * h(t), pair[0], pair[1], 1e-300, 1e-13)?.value;
        }
        Ok(total)
    };
    let i0 = moment(&|_| 1.0)?;
    let i1 = moment(&|u| u)?;
    let i2 = moment(&|u| u * u - 1.0)?;
    let (qv, q1, q2) = scaled_q_sqrt_derivatives(1.0, gamma);
    // d/dgamma = (1/(2a)) d/da
    let d1 = i1 / (2.0 * a);
    let d2 = i2 / (4.0 * gamma) - i1 / (4.0 * gamma * a);
    Ok((qv + i0, q1 + d1, q2 + d2))
}

type CustomFn = dyn Fn(f64) -> Result<(f64, f64, f64)> + Send + Sync;

#[derive(Clone)]
enum Source {
    Closed(ClosedForm),
    MonteCarlo {
        constellation: Arc<Constellation>,
        target: Target,
        cfg: EstimatorConfig,
    },
    Region {
        region: Arc<dyn NoiseRegion>,
        cfg: EstimatorConfig,
    },
    /// Exact function of the curve's own variable, with its limit at the
    /// origin of that variable.
    Custom {
        name: String,
        f: Arc<CustomFn>,
        origin: f64,
    },
}

/// A scalar error-rate function of one variable.
///
/// Closed-form curves return exact values (`std_error = 0`); Monte Carlo
/// curves rerun the estimator at every query with the same seed and stream,
/// so neighbouring points share their random draws.
#[derive(Clone)]
pub struct ErrorCurve {
    variable: Variable,
    quantity: Quantity,
    source: Source,
}

impl fmt::Debug for ErrorCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ErrorCurve")
            .field("name", &self.name())
            .field("variable", &self.variable)
            .field("quantity", &self.quantity)
            .field("provenance", &self.provenance())
            .finish()
    }
}

impl ErrorCurve {
    /// Error probability of a closed-form family in `variable`.
    pub fn closed_form(family: ClosedForm, variable: Variable) -> Result<Self> {
        family.snr_derivatives(1.0)?;
        Ok(ErrorCurve {
            variable,
            quantity: Quantity::Error,
            source: Source::Closed(family),
        })
    }

    /// Monte Carlo curve of `target`. Targets counting correct decisions
    /// produce [`Quantity::Correct`] curves.
    pub fn monte_carlo(
        constellation: Arc<Constellation>,
        target: Target,
        variable: Variable,
        cfg: EstimatorConfig,
    ) -> Result<Self> {
        target.validate(&constellation)?;
        cfg.validate()?;
        let quantity = if target.is_correct() {
            Quantity::Correct
        } else {
            Quantity::Error
        };
        Ok(ErrorCurve {
            variable,
            quantity,
            source: Source::MonteCarlo {
                constellation,
                target,
                cfg,
            },
        })
    }

    /// Monte Carlo curve of the probability of leaving `region`.
    pub fn region(region: Arc<dyn NoiseRegion>, variable: Variable, cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(ErrorCurve {
            variable,
            quantity: Quantity::Error,
            source: Source::Region { region, cfg },
        })
    }

    /// Exact curve from a function returning `(f, f', f'')` in `variable`.
    /// `origin` is the limit of `f` as the variable goes to zero.
    pub fn custom<F>(name: impl Into<String>, variable: Variable, origin: f64, f: F) -> Self
    where
        F: Fn(f64) -> Result<(f64, f64, f64)> + Send + Sync + 'static,
    {
        ErrorCurve {
            variable,
            quantity: Quantity::Error,
            source: Source::Custom {
                name: name.into(),
                f: Arc::new(f),
                origin,
            },
        }
    }

    pub fn variable(&self) -> Variable {
        self.variable
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn provenance(&self) -> Provenance {
        match self.source {
            Source::Closed(_) | Source::Custom { .. } => Provenance::ClosedForm,
            Source::MonteCarlo { .. } | Source::Region { .. } => Provenance::MonteCarlo,
        }
    }

    /// Signal-space dimension, when the curve knows it.
    pub fn dimension(&self) -> Option<usize> {
        match &self.source {
            Source::Closed(c) => Some(c.dimension()),
            Source::MonteCarlo { constellation, .. } => Some(constellation.dimension()),
            Source::Region { region, .. } => Some(region.dimension()),
            Source::Custom { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        let base = match &self.source {
            Source::Closed(c) => c.to_string(),
            Source::MonteCarlo { constellation, target, .. } => {
                let c = constellation.name().unwrap_or("constellation");
                match target {
                    Target::Ser | Target::Correct => c.to_string(),
                    Target::ConditionalSer { index } | Target::ConditionalCorrect { index } => format!("{c}[{index}]"),
                    Target::Pep { from, to } => format!("{c}[{from}->{to}]"),
                    Target::Ber => format!("{c}:ber"),
                }
            }
            Source::Region { .. } => "region".to_string(),
            Source::Custom { name, .. } => name.clone(),
        };
        match self.quantity {
            Quantity::Error => base,
            Quantity::Correct => format!("1-{base}"),
        }
    }

    /// The same function re-expressed in another variable.
    pub fn in_variable(&self, variable: Variable) -> Result<Self> {
        if let Source::Custom { .. } = self.source {
            if variable != self.variable {
                return Err(Error::Unsupported("custom curves cannot change variable".into()));
            }
        }
        Ok(ErrorCurve {
            variable,
            ..self.clone()
        })
    }

    /// `1 - f`.
    pub fn complement(&self) -> Self {
        let quantity = match self.quantity {
            Quantity::Error => Quantity::Correct,
            Quantity::Correct => Quantity::Error,
        };
        ErrorCurve {
            quantity,
            ..self.clone()
        }
    }

    /// Value and first two derivatives at `x`.
    pub fn derivatives(&self, x: f64) -> Result<Derivatives> {
        self.variable.check_point(x)?;
        let native = match &self.source {
            Source::Closed(family) => {
                let gamma = self.variable.to_snr(x);
                let t = family.snr_derivatives(gamma)?;
                (Derivatives::exact(self.variable.from_snr_derivatives(x, t)), Quantity::Error)
            }
            Source::MonteCarlo {
                constellation,
                target,
                cfg,
            } => {
                let d = estimate_derivatives(constellation, *target, self.variable, x, cfg)?;
                let q = if target.is_correct() {
                    Quantity::Correct
                } else {
                    Quantity::Error
                };
                (d, q)
            }
            Source::Region { region, cfg } => (
                estimate_region_derivatives(region.as_ref(), self.variable, x, cfg)?,
                Quantity::Correct,
            ),
            Source::Custom { f, .. } => (Derivatives::exact(f(x)?), Quantity::Error),
        };
        let (d, q) = native;
        Ok(if q == self.quantity { d } else { d.complement() })
    }

    pub fn value(&self, x: f64) -> Result<Estimate> {
        Ok(self.derivatives(x)?.value)
    }

    pub fn first(&self, x: f64) -> Result<Estimate> {
        Ok(self.derivatives(x)?.first)
    }

    pub fn second(&self, x: f64) -> Result<Estimate> {
        Ok(self.derivatives(x)?.second)
    }

    /// Limit of the curve as its variable goes to zero from above.
    ///
    /// For SNR and amplitude this is the infinite-noise limit; for noise
    /// power it is the noiseless limit (`P_e = 0`). Monte Carlo curves
    /// estimate the infinite-noise limit at a vanishing SNR.
    pub fn value_at_origin(&self) -> Result<Estimate> {
        let pe = match (&self.source, self.variable) {
            (Source::Custom { origin, .. }, _) => Estimate::exact(*origin),
            (_, Variable::NoisePower) => Estimate::exact(0.0),
            (Source::Closed(family), _) => Estimate::exact(family.limit_at_zero_snr()),
            (Source::MonteCarlo { .. } | Source::Region { .. }, v) => {
                let x = v.from_snr(TINY_SNR);
                let d = self.in_variable(v)?.derivatives(x)?.value;
                return Ok(d);
            }
        };
        Ok(match self.quantity {
            Quantity::Error => pe,
            Quantity::Correct => pe.map(|v| 1.0 - v),
        })
    }
}
