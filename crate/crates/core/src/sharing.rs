//! Power/time sharing over an average-power budget.
//!
//! A player splits its transmission into at most two segments with levels
//! `x_1, x_2` and fractions `a_1 + a_2 = 1`, `a_1 x_1 + a_2 x_2 = budget`, and
//! achieves `a_1 f(x_1) + a_2 f(x_2)`. The jammer maximizes the error rate
//! over noise power; the transmitter maximizes the success rate over SNR.
//! A zero level ("off") achieves the curve's limit at the origin.

use serde::{Deserialize, Serialize};

use crate::convexity::{find_inflections, geometric_grid, midpoint_check, Interval, MidpointReport, Shape, Sign};
use crate::engine::{ErrorCurve, Estimate, Provenance, Quantity, Variable};
use crate::error::{Error, Result};

/// Default inflection search range, in the player's variable.
pub const DEFAULT_SEARCH: Interval = Interval { lo: 1e-4, hi: 1e4 };
/// Relative width at which the tangency bisection stops.
pub const TANGENCY_REL_TOL: f64 = 1e-13;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Maximizes `P_e` over noise power.
    Jammer,
    /// Maximizes `P_c` over SNR.
    Transmitter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub fraction: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharingStrategy {
    pub role: Role,
    pub budget: f64,
    pub segments: Vec<Segment>,
    /// Rate achieved by the strategy (`P_e` for the jammer, `P_c` for the
    /// transmitter).
    pub achieved_rate: Estimate,
    /// Rate of transmitting at the budget all the time.
    pub no_sharing_rate: Estimate,
    /// Why the strategy fell back to no sharing, if it did for a reason
    /// other than the budget lying in a concave part.
    pub flag: Option<String>,
}

impl SharingStrategy {
    pub fn is_sharing(&self) -> bool {
        self.segments.len() > 1
    }

    /// `achieved - no_sharing`; non-negative up to sampling noise.
    pub fn improvement(&self) -> f64 {
        self.achieved_rate.value - self.no_sharing_rate.value
    }

    pub fn fraction_sum(&self) -> f64 {
        self.segments.iter().map(|s| s.fraction).sum()
    }

    pub fn mean_level(&self) -> f64 {
        self.segments.iter().map(|s| s.fraction * s.level).sum()
    }

    fn no_sharing(role: Role, budget: f64, rate: Estimate, flag: Option<String>) -> Self {
        SharingStrategy {
            role,
            budget,
            segments: vec![Segment {
                fraction: 1.0,
                level: budget,
            }],
            achieved_rate: rate,
            no_sharing_rate: rate,
            flag,
        }
    }
}

/// Curvature regime of one interval between consecutive inflections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Piece {
    pub interval: Interval,
    pub convex: bool,
}

/// A curve prepared for sharing: oriented so that the player maximizes it,
/// with its inflections located and, for single-inflection curves, the
/// tangency threshold solved.
#[derive(Debug, Clone)]
pub struct SharingPlan {
    role: Role,
    curve: ErrorCurve,
    off: Estimate,
    inflections: Vec<f64>,
    pieces: Vec<Piece>,
    threshold: Option<Result<f64>>,
}

impl SharingPlan {
    /// Jammer plan: the curve is taken as `P_e` in noise power.
    pub fn jammer(curve: &ErrorCurve, search: Interval) -> Result<Self> {
        let c = orient(curve, Variable::NoisePower, Quantity::Error)?;
        Self::build(Role::Jammer, c, search)
    }

    /// Transmitter plan: the curve is taken as `P_c` in SNR.
    pub fn transmitter(curve: &ErrorCurve, search: Interval) -> Result<Self> {
        let c = orient(curve, Variable::Snr, Quantity::Correct)?;
        Self::build(Role::Transmitter, c, search)
    }

    /// Plan with externally supplied inflection points.
    pub fn with_inflections(role: Role, curve: &ErrorCurve, inflections: &[f64]) -> Result<Self> {
        let c = match role {
            Role::Jammer => orient(curve, Variable::NoisePower, Quantity::Error)?,
            Role::Transmitter => orient(curve, Variable::Snr, Quantity::Correct)?,
        };
        let mut pts: Vec<f64> = inflections.to_vec();
        if pts.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Domain("inflection points must be positive and finite".into()));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Self::assemble(role, c, pts, None)
    }

    fn build(role: Role, curve: ErrorCurve, search: Interval) -> Result<Self> {
        let pts: Vec<f64> = find_inflections(&curve, search, 0.0)?.into_iter().map(|i| i.x).collect();
        Self::assemble(role, curve, pts, Some(search))
    }

    fn assemble(role: Role, curve: ErrorCurve, inflections: Vec<f64>, search: Option<Interval>) -> Result<Self> {
        let off = curve.value_at_origin()?;
        let mut edges = vec![0.0];
        edges.extend(&inflections);
        edges.push(f64::INFINITY);
        let mut pieces = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let probe = match (w[0] > 0.0, w[1].is_finite()) {
                (true, true) => (w[0] * w[1]).sqrt(),
                (false, true) => w[1] / 4.0,
                (true, false) => w[0] * 4.0,
                (false, false) => search.map(|s| (s.lo * s.hi).sqrt()).unwrap_or(1.0),
            };
            let convex = match Sign::of(&curve.second(probe)?) {
                Sign::Positive => true,
                Sign::Negative => false,
                // flat stretches behave like concave ones: sharing cannot help
                Sign::Indeterminate => false,
            };
            pieces.push(Piece {
                interval: Interval::new(w[0], w[1]),
                convex,
            });
        }
        let mut plan = SharingPlan {
            role,
            curve,
            off,
            inflections,
            pieces,
            threshold: None,
        };
        plan.threshold = Some(plan.solve_threshold());
        Ok(plan)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// The oriented curve the player maximizes.
    pub fn curve(&self) -> &ErrorCurve {
        &self.curve
    }

    pub fn inflections(&self) -> &[f64] {
        &self.inflections
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Rate achieved by a zero level.
    pub fn off_value(&self) -> Estimate {
        self.off
    }

    /// Tangency point of the optimal on-off strategy, if the curve has the
    /// single convex-then-concave inflection the construction needs.
    pub fn threshold(&self) -> Result<f64> {
        match &self.threshold {
            Some(r) => r.clone(),
            None => Err(Error::NotBracketed("threshold not computed".into())),
        }
    }

    /// `x f'(x) - (f(x) - f_off)`, zero at the tangency point.
    pub fn tangency_residual(&self, x: f64) -> Result<f64> {
        let d = self.curve.derivatives(x)?;
        Ok(x * d.first.value - (d.value.value - self.off.value))
    }

    fn solve_threshold(&self) -> Result<f64> {
        match self.pieces.as_slice() {
            [first, second] if first.convex && !second.convex => {}
            [only] if !only.convex => {
                return Err(Error::Unsupported("curve has no convex part; sharing cannot help".into()))
            }
            [_] => return Err(Error::Unsupported("curve is convex on the whole search range".into())),
            _ => {
                return Err(Error::Unsupported(format!(
                    "optimal sharing needs one convex-to-concave inflection, found {} inflections",
                    self.inflections.len()
                )))
            }
        }
        let p0 = self.inflections[0];
        let g = |x: f64| self.tangency_residual(x);
        let g0 = g(p0)?;
        if g0 <= 0.0 {
            // tangent from the origin already touches at the inflection
            return Ok(p0);
        }
        let mut lo = p0;
        let mut hi = 2.0 * p0;
        let mut k = 0;
        while g(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::NotBracketed(format!("no tangency point found above {p0}")));
            }
        }
        while hi - lo > TANGENCY_REL_TOL * hi {
            let mid = 0.5 * (lo + hi);
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn at(&self, level: f64) -> Result<Estimate> {
        if level == 0.0 {
            Ok(self.off)
        } else {
            self.curve.value(level)
        }
    }

    fn mix(&self, budget: f64, lo: f64, hi: f64, flag: Option<String>) -> Result<SharingStrategy> {
        let a1 = (hi - budget) / (hi - lo);
        let a2 = 1.0 - a1;
        let (f1, f2) = (self.at(lo)?, self.at(hi)?);
        let achieved = Estimate {
            value: a1 * f1.value + a2 * f2.value,
            std_error: a1 * f1.std_error + a2 * f2.std_error,
            samples: f1.samples.max(f2.samples),
        };
        Ok(SharingStrategy {
            role: self.role,
            budget,
            segments: vec![
                Segment { fraction: a1, level: lo },
                Segment { fraction: a2, level: hi },
            ],
            achieved_rate: achieved,
            no_sharing_rate: self.curve.value(budget)?,
            flag,
        })
    }

    /// Shares between the inflection points bracketing a budget that lies in
    /// a convex piece; no sharing in concave pieces.
    pub fn suboptimal(&self, budget: f64) -> Result<SharingStrategy> {
        check_budget(budget)?;
        if self.inflections.is_empty() {
            let flag = if self.pieces[0].convex {
                "no inflection: on-off level undefined for a convex curve"
            } else {
                "no inflection in the search range"
            };
            return Ok(SharingStrategy::no_sharing(self.role, budget, self.curve.value(budget)?, Some(flag.into())));
        }
        let piece = self
            .pieces
            .iter()
            .find(|p| budget >= p.interval.lo && budget < p.interval.hi)
            .copied()
            .expect("pieces tile (0, inf)");
        if !piece.convex || budget == piece.interval.lo {
            return Ok(SharingStrategy::no_sharing(self.role, budget, self.curve.value(budget)?, None));
        }
        if !piece.interval.hi.is_finite() {
            return Ok(SharingStrategy::no_sharing(
                self.role,
                budget,
                self.curve.value(budget)?,
                Some("convex beyond the last inflection: no upper level".into()),
            ));
        }
        self.mix(budget, piece.interval.lo, piece.interval.hi, None)
    }

    /// On-off between zero and the tangency point below it; no sharing
    /// above.
    pub fn optimal(&self, budget: f64) -> Result<SharingStrategy> {
        check_budget(budget)?;
        let star = match self.threshold() {
            Ok(v) => v,
            Err(Error::Unsupported(msg)) if self.inflections.is_empty() => {
                return Ok(SharingStrategy::no_sharing(self.role, budget, self.curve.value(budget)?, Some(msg)))
            }
            Err(e) => return Err(e),
        };
        if budget >= star {
            return Ok(SharingStrategy::no_sharing(self.role, budget, self.curve.value(budget)?, None));
        }
        self.mix(budget, 0.0, star, None)
    }

    /// The rate achieved by the optimal strategy as a function of the
    /// budget, as a curve in the player's variable. Its quantity matches the
    /// oriented curve (`P_e` for the jammer, `P_c` for the transmitter) and
    /// it is exact only when the underlying curve is.
    pub fn optimal_envelope(&self) -> Result<ErrorCurve> {
        let star = self.threshold()?;
        self.envelope_through(star)
    }

    /// The suboptimal on-off envelope for a single-inflection curve, which
    /// shares up to the inflection itself.
    pub fn suboptimal_envelope(&self) -> Result<ErrorCurve> {
        match self.pieces.as_slice() {
            [a, b] if a.convex && !b.convex => self.envelope_through(self.inflections[0]),
            _ => Err(Error::Unsupported("envelope curves are built for single-inflection curves".into())),
        }
    }

    fn envelope_through(&self, knot: f64) -> Result<ErrorCurve> {
        if self.curve.provenance() != Provenance::ClosedForm {
            return Err(Error::Unsupported("envelope curves need an exact underlying curve".into()));
        }
        let curve = self.curve.clone();
        let off = self.off.value;
        let top = curve.value(knot)?.value;
        let slope = (top - off) / knot;
        let variable = curve.variable();
        // keep the orientation: an exact custom curve holds the maximized
        // quantity as its value
        let f = move |x: f64| -> Result<(f64, f64, f64)> {
            if x < knot {
                Ok((off + slope * x, slope, 0.0))
            } else {
                let d = curve.derivatives(x)?;
                Ok((d.value.value, d.first.value, d.second.value))
            }
        };
        Ok(ErrorCurve::custom(format!("envelope@{knot}"), variable, off, f))
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if budget.is_finite() && budget > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("budget must be positive, got {budget}")))
    }
}

fn orient(curve: &ErrorCurve, variable: Variable, quantity: Quantity) -> Result<ErrorCurve> {
    let c = if curve.variable() == variable {
        curve.clone()
    } else {
        curve.in_variable(variable)?
    };
    Ok(if c.quantity() == quantity { c } else { c.complement() })
}

/// Jammer sharing between given inflection points.
pub fn suboptimal_sharing(curve: &ErrorCurve, budget: f64, inflections: &[f64]) -> Result<SharingStrategy> {
    SharingPlan::with_inflections(Role::Jammer, curve, inflections)?.suboptimal(budget)
}

/// Optimal jammer sharing, locating the inflection on [`DEFAULT_SEARCH`].
pub fn optimal_sharing(curve: &ErrorCurve, budget: f64) -> Result<SharingStrategy> {
    SharingPlan::jammer(curve, DEFAULT_SEARCH)?.optimal(budget)
}

/// Optimal transmitter sharing over SNR, locating inflections on
/// [`DEFAULT_SEARCH`].
pub fn transmitter_sharing(curve: &ErrorCurve, budget: f64) -> Result<SharingStrategy> {
    SharingPlan::transmitter(curve, DEFAULT_SEARCH)?.optimal(budget)
}

/// Slope discontinuity of an envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kink {
    pub at: f64,
    pub left_slope: f64,
    pub right_slope: f64,
}

impl Kink {
    pub fn jump(&self) -> f64 {
        self.right_slope - self.left_slope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub midpoint: MidpointReport,
    /// Breakpoints whose one-sided slopes differ by more than the
    /// tolerance.
    pub kinks: Vec<Kink>,
}

impl EnvelopeReport {
    pub fn is_concave(&self) -> bool {
        self.midpoint.all_ok()
    }
}

/// Midpoint concavity of an envelope curve on `grid`, plus slope jumps at
/// the given breakpoints (one-sided derivatives from the curve itself).
pub fn envelope_concavity_check(envelope: &ErrorCurve, grid: &[f64], breakpoints: &[f64], tol: f64) -> Result<EnvelopeReport> {
    let midpoint = midpoint_check(Shape::Concave, grid, tol, |x| envelope.value(x))?;
    let mut kinks = Vec::new();
    for &b in breakpoints {
        let h = 1e-7 * b;
        let left = envelope.first(b - h)?.value;
        let right = envelope.first(b + h)?.value;
        let scale = left.abs().max(right.abs()).max(f64::MIN_POSITIVE);
        if (right - left).abs() > 1e-4 * scale {
            kinks.push(Kink {
                at: b,
                left_slope: left,
                right_slope: right,
            });
        }
    }
    Ok(EnvelopeReport { midpoint, kinks })
}

/// Log-spaced budgets for sweeps.
pub fn budget_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let per_decade = (count - 1) as f64 / (hi / lo).log10();
    let g = geometric_grid(lo, hi, per_decade.ceil() as usize);
    if g.len() == count {
        g
    } else {
        (0..count)
            .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
            .collect()
    }
}
