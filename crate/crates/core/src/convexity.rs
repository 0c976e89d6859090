//! Convexity regimes of error curves, universal derivative bounds,
//! inflection search and midpoint inequality checks.
//!
//! Guaranteed intervals are derived from geometry and dimension alone and are
//! never mixed with sampled evidence. Sampled sign information lives in
//! [`curvature_scan`] and [`find_inflections`].

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::constellation::{decision_region, geometry_summary, Constellation, Extent};
use crate::engine::{ErrorCurve, Estimate, Provenance, Quantity, Variable};
use crate::error::{Error, Result};
use crate::gaussian::bound_constants;

/// Inflection scan density.
pub const SCAN_POINTS_PER_DECADE: usize = 256;
/// Bisection steps when refining an inflection.
pub const REFINE_STEPS: usize = 60;
/// Monte Carlo second derivatives must carry a standard error below this
/// fraction of the local curvature scale to be used for root finding.
pub const MAX_RELATIVE_NOISE: f64 = 0.1;
/// Significance, in standard errors, of a sign.
pub const SIGMA_LEVEL: f64 = 3.0;

fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// A closed interval `[lo, hi]`; `hi` may be infinite, `lo = 0` stands for
/// the open end at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    #[serde(serialize_with = "ser_extended")]
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn whole() -> Self {
        Interval::new(0.0, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// What the report is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReportTarget {
    SerAverage,
    SerConditional { index: usize },
    Pep { from: usize, to: usize },
    Ber,
}

/// Availability of the small-SNR (large-noise) side of a classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowSide {
    /// An interval was derived.
    Available,
    /// No such interval exists for this dimension (the curve is covered by
    /// the global statement).
    NotNeeded,
    /// The relevant region is unbounded.
    NotApplicable,
    /// The relevant region is bounded but too large to measure.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Threshold {
    pub name: String,
    #[serde(serialize_with = "ser_extended")]
    pub value: f64,
}

/// A located sign change of the second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inflection {
    pub x: f64,
    /// Final bracket; `x` is its midpoint.
    pub bracket: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub variable: Variable,
    pub target: ReportTarget,
    pub dimension: usize,
    pub guaranteed_convex: Vec<Interval>,
    pub guaranteed_concave: Vec<Interval>,
    pub low_side: LowSide,
    pub indeterminate: Vec<Interval>,
    pub inflection_points: Vec<Inflection>,
    pub thresholds_used: Vec<Threshold>,
    pub notes: Vec<String>,
}

impl ConvexityReport {
    pub fn threshold(&self, name: &str) -> Option<f64> {
        self.thresholds_used.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn is_convex_at(&self, x: f64) -> bool {
        self.guaranteed_convex.iter().any(|i| i.contains(x))
    }

    pub fn is_concave_at(&self, x: f64) -> bool {
        self.guaranteed_concave.iter().any(|i| i.contains(x))
    }

    /// Searches the indeterminate intervals of the report for inflections
    /// of `curve`. Unbounded ends are cut `decades` decades beyond the finite
    /// one.
    pub fn locate_inflections(&mut self, curve: &ErrorCurve, decades: f64, tol: f64) -> Result<()> {
        let mut found = Vec::new();
        for iv in &self.indeterminate {
            let (lo, hi) = match (iv.lo > 0.0, iv.hi.is_finite()) {
                (true, true) => (iv.lo, iv.hi),
                (true, false) => (iv.lo, iv.lo * 10f64.powf(decades)),
                (false, true) => (iv.hi * 10f64.powf(-decades), iv.hi),
                (false, false) => continue,
            };
            found.extend(find_inflections(curve, Interval::new(lo, hi), tol)?);
        }
        self.inflection_points = found;
        Ok(())
    }
}

fn t(name: &str, value: f64) -> Threshold {
    Threshold {
        name: name.to_string(),
        value,
    }
}

fn extent_value(e: Extent) -> f64 {
    match e {
        Extent::Finite(v) => v,
        Extent::Infinite => f64::INFINITY,
        Extent::Unknown => f64::NAN,
    }
}

/// Convex above `hi_threshold` and, when `low` is given, concave (or convex)
/// below it; builds the ordered interval lists.
struct Regimes {
    convex: Vec<Interval>,
    concave: Vec<Interval>,
    indeterminate: Vec<Interval>,
}

/// Increasing-variable layout: `[0, low] low_kind`, `[high, inf)` convex.
fn snr_layout(low: Option<(f64, bool)>, high: f64) -> Regimes {
    let mut r = Regimes {
        convex: vec![],
        concave: vec![],
        indeterminate: vec![],
    };
    let start = match low {
        Some((v, low_is_convex)) => {
            let iv = Interval::new(0.0, v);
            if low_is_convex {
                r.convex.push(iv);
            } else {
                r.concave.push(iv);
            }
            v
        }
        None => 0.0,
    };
    if high > start {
        r.indeterminate.push(Interval::new(start, high));
    }
    r.convex.push(Interval::new(high, f64::INFINITY));
    r
}

/// Classifies `target` of `c` in `variable` using the theorem thresholds.
pub fn classify(c: &Constellation, variable: Variable, target: ReportTarget) -> Result<ConvexityReport> {
    let n = c.dimension();
    let k = bound_constants(n);
    let (a1, a2) = k.snr_curvature_roots;
    let (b1, b2) = k.noise_curvature_roots;
    let (am1, am2) = k.amplitude_roots;
    let mut thresholds = vec![];
    let mut notes = vec![];

    let (d_min, d_max) = match target {
        ReportTarget::SerAverage | ReportTarget::Ber => {
            let g = geometry_summary(c);
            (g.d_min, g.d_max)
        }
        ReportTarget::SerConditional { index } => {
            let r = decision_region(c, index)?;
            (r.d_min, r.d_max)
        }
        ReportTarget::Pep { from, to } => {
            if from >= c.len() || to >= c.len() {
                return Err(Error::IndexOutOfRange {
                    index: from.max(to),
                    len: c.len(),
                });
            }
            if from == to {
                return Err(Error::Domain("pairwise error needs two distinct points".into()));
            }
            let r = decision_region(c, from)?;
            (r.d_min, decision_region(c, to)?.d_max)
        }
    };
    thresholds.push(t("d_min", d_min));
    if !matches!(target, ReportTarget::Pep { .. }) {
        thresholds.push(t("d_max", extent_value(d_max)));
    }
    let mut low_side;

    let regimes = match (variable, target) {
        (Variable::Snr, ReportTarget::SerAverage | ReportTarget::SerConditional { .. }) => {
            thresholds.push(t("alpha1", a1));
            thresholds.push(t("alpha2", a2));
            if n <= 2 {
                notes.push("error rate is convex in SNR for every 1-D and 2-D constellation".into());
                low_side = LowSide::NotNeeded;
                Regimes {
                    convex: vec![Interval::whole()],
                    concave: vec![],
                    indeterminate: vec![],
                }
            } else {
                let high = a1 / (d_min * d_min);
                thresholds.push(t("snr_convex_from", high));
                let low = match d_max {
                    Extent::Finite(dm) => {
                        let v = a2 / (dm * dm);
                        thresholds.push(t("snr_concave_to", v));
                        low_side = LowSide::Available;
                        Some((v, false))
                    }
                    Extent::Infinite => {
                        low_side = LowSide::NotApplicable;
                        notes.push("small-SNR concave region does not exist: decision region unbounded".into());
                        None
                    }
                    Extent::Unknown => {
                        low_side = LowSide::Unknown;
                        notes.push("d_max not computed for this size; small-SNR side unknown".into());
                        None
                    }
                };
                snr_layout(low, high)
            }
        }
        (Variable::Amplitude, ReportTarget::SerAverage | ReportTarget::SerConditional { .. }) => {
            thresholds.push(t("alpha1_amplitude", am1));
            thresholds.push(t("alpha2_amplitude", am2));
            if n == 1 {
                notes.push("error rate is convex in amplitude for every 1-D constellation".into());
                low_side = LowSide::NotNeeded;
                Regimes {
                    convex: vec![Interval::whole()],
                    concave: vec![],
                    indeterminate: vec![],
                }
            } else {
                let high = am1.sqrt() / d_min;
                thresholds.push(t("amplitude_convex_from", high));
                let low = match d_max {
                    Extent::Finite(dm) => {
                        let v = am2.sqrt() / dm;
                        thresholds.push(t("amplitude_concave_to", v));
                        low_side = LowSide::Available;
                        Some((v, false))
                    }
                    Extent::Infinite => {
                        low_side = LowSide::NotApplicable;
                        None
                    }
                    Extent::Unknown => {
                        low_side = LowSide::Unknown;
                        None
                    }
                };
                snr_layout(low, high)
            }
        }
        (Variable::NoisePower, ReportTarget::SerAverage | ReportTarget::SerConditional { .. }) => {
            thresholds.push(t("beta1", b1));
            thresholds.push(t("beta2", b2));
            let convex_to = d_min * d_min / b1;
            thresholds.push(t("noise_convex_to", convex_to));
            let mut r = Regimes {
                convex: vec![Interval::new(0.0, convex_to)],
                concave: vec![],
                indeterminate: vec![],
            };
            match d_max {
                Extent::Finite(dm) => {
                    let v = dm * dm / b2;
                    thresholds.push(t("noise_concave_from", v));
                    low_side = LowSide::Available;
                    r.indeterminate.push(Interval::new(convex_to, v));
                    r.concave.push(Interval::new(v, f64::INFINITY));
                }
                other => {
                    low_side = if other.is_infinite() {
                        notes.push("large-noise concave region does not exist: decision region unbounded".into());
                        LowSide::NotApplicable
                    } else {
                        LowSide::Unknown
                    };
                    r.indeterminate.push(Interval::new(convex_to, f64::INFINITY));
                }
            }
            r
        }
        (Variable::Snr, ReportTarget::Pep { from, to }) => {
            let high = a1 / (d_min * d_min);
            thresholds.push(t("snr_convex_from", high));
            let d_ij = c.distance(from, to);
            thresholds.push(t("d_ij", d_ij));
            thresholds.push(t("d_max_to", extent_value(d_max)));
            let low = pep_low_side(n, d_ij, d_max, &mut thresholds, &mut notes);
            low_side = low.1;
            snr_layout(low.0, high)
        }
        (Variable::Snr, ReportTarget::Ber) => {
            let labels = c.bit_labels().ok_or(Error::MissingLabels)?;
            let high = a1 / (d_min * d_min);
            thresholds.push(t("snr_convex_from", high));
            // each PEP with a non-zero weight must share the low-side regime
            let mut worst: Option<f64> = Some(f64::INFINITY);
            let mut side = LowSide::Available;
            let regions: Vec<_> = (0..c.len()).map(|j| decision_region(c, j)).collect::<Result<_>>()?;
            let root = if n <= 2 { a1 } else { a2 };
            for i in 0..c.len() {
                if c.priors()[i] == 0.0 {
                    continue;
                }
                for j in 0..c.len() {
                    if i == j || labels[i] == labels[j] {
                        continue;
                    }
                    match regions[j].d_max {
                        Extent::Finite(dm) => {
                            let d = c.distance(i, j) + dm;
                            worst = worst.map(|w| w.min(root / (d * d)));
                        }
                        Extent::Infinite => {
                            worst = None;
                            side = LowSide::NotApplicable;
                        }
                        Extent::Unknown => {
                            worst = None;
                            if side != LowSide::NotApplicable {
                                side = LowSide::Unknown;
                            }
                        }
                    }
                }
            }
            low_side = side;
            let low = match worst {
                Some(v) if v.is_finite() && v > 0.0 => {
                    thresholds.push(t("snr_low_regime_to", v));
                    Some((v, n > 2))
                }
                _ => {
                    if low_side == LowSide::Available {
                        low_side = LowSide::NotApplicable;
                    }
                    None
                }
            };
            notes.push("high-SNR convexity holds for any bit mapping".into());
            snr_layout(low, high)
        }
        (v, tgt) => {
            return Err(Error::Unsupported(format!(
                "no convexity theorem for {tgt:?} in {v}"
            )))
        }
    };
    Ok(ConvexityReport {
        variable,
        target,
        dimension: n,
        guaranteed_convex: regimes.convex,
        guaranteed_concave: regimes.concave,
        low_side,
        indeterminate: regimes.indeterminate,
        inflection_points: vec![],
        thresholds_used: thresholds,
        notes,
    })
}

/// Low-SNR side of a pairwise error probability: concave for `n <= 2`,
/// convex for `n > 2`, shifted by `(d_ij + d_max,j)^2`.
fn pep_low_side(
    n: usize,
    d_ij: f64,
    d_max_to: Extent,
    thresholds: &mut Vec<Threshold>,
    notes: &mut Vec<String>,
) -> (Option<(f64, bool)>, LowSide) {
    let k = bound_constants(n);
    let (a1, a2) = k.snr_curvature_roots;
    match d_max_to {
        Extent::Finite(dm) => {
            let d = d_ij + dm;
            if n <= 2 {
                let v = a1 / (d * d);
                thresholds.push(t("snr_concave_to", v));
                (Some((v, false)), LowSide::Available)
            } else {
                let v = a2 / (d * d);
                thresholds.push(t("snr_low_convex_to", v));
                (Some((v, true)), LowSide::Available)
            }
        }
        Extent::Infinite => {
            notes.push("low-SNR statement is vacuous: target decision region unbounded".into());
            (None, LowSide::NotApplicable)
        }
        Extent::Unknown => (None, LowSide::Unknown),
    }
}

/// Sign of a sampled quantity at the module's significance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Indeterminate,
}

impl Sign {
    pub fn of(e: &Estimate) -> Sign {
        let s = SIGMA_LEVEL * e.std_error;
        if e.value > s {
            Sign::Positive
        } else if e.value < -s {
            Sign::Negative
        } else {
            Sign::Indeterminate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvaturePoint {
    pub x: f64,
    pub second: Estimate,
    pub sign: Sign,
}

/// Observed second-derivative signs on a grid.
pub fn curvature_scan(curve: &ErrorCurve, grid: &[f64]) -> Result<Vec<CurvaturePoint>> {
    grid.iter()
        .map(|&x| {
            let second = curve.second(x)?;
            Ok(CurvaturePoint {
                x,
                second,
                sign: Sign::of(&second),
            })
        })
        .collect()
}

/// Geometric grid from `lo` to `hi` with `per_decade` points per decade.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let m = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=m)
        .map(|k| if k == m { hi } else { lo * 10f64.powf(decades * k as f64 / m as f64) })
        .collect()
}

/// Finds sign changes of the second derivative of `curve` inside `bracket`
/// and refines each by bisection until the bracket is narrower than `tol`
/// (at most [`REFINE_STEPS`] halvings).
pub fn find_inflections(curve: &ErrorCurve, bracket: Interval, tol: f64) -> Result<Vec<Inflection>> {
    if !(bracket.lo > 0.0 && bracket.hi.is_finite() && bracket.hi > bracket.lo) {
        return Err(Error::Domain(format!("inflection bracket must be finite and positive, got {bracket}")));
    }
    let monte_carlo = curve.provenance() == Provenance::MonteCarlo;
    let grid = geometric_grid(bracket.lo, bracket.hi, SCAN_POINTS_PER_DECADE);
    let scan = curvature_scan(curve, &grid)?;
    if monte_carlo {
        let scale = scan.iter().map(|p| p.second.value.abs()).fold(0.0, f64::max);
        let noise = scan.iter().map(|p| p.second.std_error).fold(0.0, f64::max);
        if !(noise <= MAX_RELATIVE_NOISE * scale) {
            return Err(Error::InsufficientPrecision(format!(
                "second-derivative standard error {noise:.3e} exceeds {MAX_RELATIVE_NOISE} x curvature scale {scale:.3e}"
            )));
        }
    }
    let mut roots = Vec::new();
    let mut last: Option<&CurvaturePoint> = None;
    for p in &scan {
        if p.sign == Sign::Indeterminate {
            continue;
        }
        if let Some(prev) = last {
            if prev.sign != p.sign {
                roots.push(refine(curve, prev.x, p.x, prev.sign, tol)?);
            }
        }
        last = Some(p);
    }
    roots.sort_by(|a, b| a.x.total_cmp(&b.x));
    roots.dedup_by(|a, b| (a.x - b.x).abs() <= tol);
    Ok(roots)
}

fn refine(curve: &ErrorCurve, mut lo: f64, mut hi: f64, lo_sign: Sign, tol: f64) -> Result<Inflection> {
    for _ in 0..REFINE_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = Sign::of(&curve.second(mid)?);
        match s {
            Sign::Indeterminate => {
                let e = curve.second(mid)?;
                if e.std_error == 0.0 {
                    return Ok(Inflection {
                        x: mid,
                        bracket: Interval::new(mid, mid),
                    });
                }
                // noise floor reached; report the current bracket
                break;
            }
            s if s == lo_sign => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(Inflection {
        x: 0.5 * (lo + hi),
        bracket: Interval::new(lo, hi),
    })
}

/// One row of a universal-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub x: f64,
    pub order: u8,
    /// Derivative of the error probability (sign-corrected for success
    /// curves).
    pub value: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
    /// `value - lower`; negative means the lower bound is violated.
    pub lower_margin: f64,
    /// `upper - value`.
    pub upper_margin: f64,
    /// Allowed statistical slack, `3 std_error` plus rounding.
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub variable: Variable,
    pub dimension: usize,
    pub rows: Vec<BoundRow>,
    pub violations: usize,
}

impl BoundsReport {
    pub fn all_ok(&self) -> bool {
        self.violations == 0
    }
}

/// Checks the universal first- and second-derivative bounds for dimension
/// `n` at every grid point.
pub fn derivative_bounds_check(curve: &ErrorCurve, n: usize, grid: &[f64]) -> Result<BoundsReport> {
    let variable = curve.variable();
    if variable == Variable::Amplitude {
        return Err(Error::Unsupported("derivative bounds are stated in SNR and noise power".into()));
    }
    if n == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let k = bound_constants(n);
    let sign = match curve.quantity() {
        Quantity::Error => 1.0,
        Quantity::Correct => -1.0,
    };
    let mut rows = Vec::with_capacity(2 * grid.len());
    for &x in grid {
        let d = curve.derivatives(x)?;
        let (b1, b2) = match variable {
            Variable::Snr => ((-k.c_n / x, 0.0), (k.snr_lower / (x * x), k.snr_upper / (x * x))),
            _ => ((0.0, k.c_n / x), (k.noise_lower / (x * x), k.noise_upper / (x * x))),
        };
        for (order, est, (lower, upper)) in [(1u8, d.first, b1), (2u8, d.second, b2)] {
            let value = sign * est.value;
            let rounding = 1e-12 * (lower.abs() + upper.abs() + value.abs());
            let slack = SIGMA_LEVEL * est.std_error + rounding;
            let lower_margin = value - lower;
            let upper_margin = upper - value;
            rows.push(BoundRow {
                x,
                order,
                value,
                std_error: est.std_error,
                lower,
                upper,
                lower_margin,
                upper_margin,
                slack,
                ok: lower_margin >= -slack && upper_margin >= -slack,
            });
        }
    }
    let violations = rows.iter().filter(|r| !r.ok).count();
    Ok(BoundsReport {
        variable,
        dimension: n,
        rows,
        violations,
    })
}

/// Which midpoint inequality to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Convex,
    Concave,
    LogConvex,
    LogConcave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MidpointRow {
    pub x1: f64,
    pub x2: f64,
    /// Non-negative when the inequality holds for the pair.
    pub margin: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointReport {
    pub shape: Shape,
    pub rows: Vec<MidpointRow>,
    pub min_margin: f64,
    pub violations: usize,
}

impl MidpointReport {
    pub fn all_ok(&self) -> bool {
        self.violations == 0
    }
}

/// Midpoint test of `shape` for `eval` over grid pairs at strides
/// `1, 2, 4, ...`, with `3 sigma` slack for sampled values and `tol`
/// absolute slack on top.
pub fn midpoint_check<F>(shape: Shape, grid: &[f64], tol: f64, eval: F) -> Result<MidpointReport>
where
    F: Fn(f64) -> Result<Estimate>,
{
    let log = matches!(shape, Shape::LogConcave | Shape::LogConvex);
    let mut cache: Vec<Estimate> = Vec::with_capacity(grid.len());
    for &x in grid {
        cache.push(eval(x)?);
    }
    let transform = |e: Estimate, x: f64| -> Result<(f64, f64)> {
        if log {
            if !(e.value > 0.0) {
                return Err(Error::Domain(format!("log test needs positive values, got {} at {x}", e.value)));
            }
            Ok((e.value.ln(), e.std_error / e.value))
        } else {
            Ok((e.value, e.std_error))
        }
    };
    let mut rows = Vec::new();
    let mut stride = 1;
    while stride < grid.len() {
        for i in 0..grid.len() - stride {
            let (x1, x2) = (grid[i], grid[i + stride]);
            let (a, sa) = transform(cache[i], x1)?;
            let (b, sb) = transform(cache[i + stride], x2)?;
            let xm = 0.5 * (x1 + x2);
            let (m, sm) = transform(eval(xm)?, xm)?;
            let gap = 0.5 * (a + b) - m;
            let margin = match shape {
                Shape::Convex | Shape::LogConvex => gap,
                Shape::Concave | Shape::LogConcave => -gap,
            };
            let rounding = 1e-13 * (a.abs() + b.abs() + m.abs());
            let slack = SIGMA_LEVEL * (sm * sm + 0.25 * (sa * sa + sb * sb)).sqrt() + rounding + tol;
            rows.push(MidpointRow {
                x1,
                x2,
                margin,
                slack,
                ok: margin >= -slack,
            });
        }
        stride *= 2;
    }
    let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let violations = rows.iter().filter(|r| !r.ok).count();
    Ok(MidpointReport {
        shape,
        rows,
        min_margin,
        violations,
    })
}

/// Midpoint log-concavity of a success-probability curve on `grid`.
pub fn log_concavity_check(curve: &ErrorCurve, grid: &[f64]) -> Result<MidpointReport> {
    midpoint_check(Shape::LogConcave, grid, 0.0, |x| curve.value(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{builtin, BuiltinFamily};
    use crate::engine::{ClosedForm, EstimatorConfig, Target};
    use std::sync::Arc;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn qpsk_is_convex_in_snr_and_has_noise_convex_region() {
        let c = builtin(BuiltinFamily::Psk, 4, None).unwrap();
        let r = classify(&c, Variable::Snr, ReportTarget::SerAverage).unwrap();
        assert_eq!(r.guaranteed_convex, vec![Interval::whole()]);
        assert!(r.indeterminate.is_empty());
        let p = classify(&c, Variable::NoisePower, ReportTarget::SerAverage).unwrap();
        let to = p.threshold("noise_convex_to").unwrap();
        assert!(close(to, 0.5 / (4.0 + 8f64.sqrt()), 1e-15));
        assert!(to > 0.0);
        assert_eq!(p.low_side, LowSide::NotApplicable);
    }

    #[test]
    fn octahedron_thresholds() {
        let c = builtin(BuiltinFamily::Biorthogonal, 6, None).unwrap();
        let r = classify(&c, Variable::Snr, ReportTarget::SerAverage).unwrap();
        let th = r.threshold("snr_convex_from").unwrap();
        assert!(close(th, 2.0 * (3.0 + 6f64.sqrt()), 1e-12), "{th}");
        assert_eq!(r.low_side, LowSide::NotApplicable);
        assert!(r.guaranteed_concave.is_empty());
        assert_eq!(r.indeterminate, vec![Interval::new(0.0, th)]);
    }

    #[test]
    fn bpsk_and_pam_noise_thresholds() {
        let bpsk = builtin(BuiltinFamily::Pam, 2, None).unwrap();
        let r = classify(&bpsk, Variable::NoisePower, ReportTarget::SerAverage).unwrap();
        assert!(close(r.threshold("noise_convex_to").unwrap(), 1.0 / (3.0 + 6f64.sqrt()), 1e-15));
        let pam = builtin(BuiltinFamily::Pam, 4, None).unwrap();
        let r = classify(&pam, Variable::NoisePower, ReportTarget::SerConditional { index: 1 }).unwrap();
        assert!(close(r.threshold("noise_convex_to").unwrap(), 0.2 / (3.0 + 6f64.sqrt()), 1e-12));
        assert!(close(r.threshold("noise_concave_from").unwrap(), 0.2 / (3.0 - 6f64.sqrt()), 1e-12));
        assert!(close(0.2 / (3.0 + 6f64.sqrt()), 0.036_700, 1e-6));
        assert!(close(0.2 / (3.0 - 6f64.sqrt()), 0.363_30, 1e-5));
    }

    #[test]
    fn amplitude_classification() {
        let bpsk = builtin(BuiltinFamily::Pam, 2, None).unwrap();
        let r = classify(&bpsk, Variable::Amplitude, ReportTarget::SerAverage).unwrap();
        assert_eq!(r.guaranteed_convex, vec![Interval::whole()]);
        let qpsk = builtin(BuiltinFamily::Psk, 4, None).unwrap();
        let r = classify(&qpsk, Variable::Amplitude, ReportTarget::SerAverage).unwrap();
        let from = r.threshold("amplitude_convex_from").unwrap();
        assert!(close(from, ((5.0 + 17f64.sqrt()) / 2.0).sqrt() / 0.5f64.sqrt(), 1e-12));
    }

    #[test]
    fn thresholds_rescale_with_geometry() {
        let c = builtin(BuiltinFamily::SphereTest, 7, None).unwrap();
        let pts: Vec<Vec<f64>> = c.points().map(|p| p.iter().map(|v| 2.0 * v).collect()).collect();
        let scaled = Constellation::new(3, pts).unwrap();
        for target in [ReportTarget::SerAverage, ReportTarget::SerConditional { index: 0 }] {
            let a = classify(&c, Variable::Snr, target).unwrap();
            let b = classify(&scaled, Variable::Snr, target).unwrap();
            let ra = a.threshold("snr_convex_from").unwrap() / b.threshold("snr_convex_from").unwrap();
            assert!(close(ra, 4.0, 1e-12));
        }
        let inner = classify(&c, Variable::Snr, ReportTarget::SerConditional { index: 0 }).unwrap();
        assert_eq!(inner.low_side, LowSide::Available);
        assert_eq!(inner.guaranteed_concave.len(), 1);
    }

    #[test]
    fn pep_classification() {
        let c = builtin(BuiltinFamily::Pam, 4, None).unwrap();
        // outer -> inner: inner region bounded, d_max = 1/sqrt5
        let r = classify(&c, Variable::Snr, ReportTarget::Pep { from: 0, to: 1 }).unwrap();
        assert_eq!(r.low_side, LowSide::Available);
        let d = 2.0 / 5f64.sqrt() + 1.0 / 5f64.sqrt();
        assert!(close(r.threshold("snr_concave_to").unwrap(), (1.0 + 2f64.sqrt()) / (d * d), 1e-12));
        let r = classify(&c, Variable::Snr, ReportTarget::Pep { from: 1, to: 0 }).unwrap();
        assert_eq!(r.low_side, LowSide::NotApplicable);
        assert!(classify(&c, Variable::NoisePower, ReportTarget::Pep { from: 1, to: 0 }).is_err());
        assert!(classify(&c, Variable::Snr, ReportTarget::Pep { from: 1, to: 1 }).is_err());
        let ber = classify(&c, Variable::Snr, ReportTarget::Ber).unwrap();
        assert!(close(ber.threshold("snr_convex_from").unwrap(), (1.0 + 2f64.sqrt()) / 0.2, 1e-12));
    }

    #[test]
    fn bpsk_noise_power_inflection() {
        let curve = ErrorCurve::closed_form(ClosedForm::Bpsk, Variable::NoisePower).unwrap();
        let roots = find_inflections(&curve, Interval::new(0.01, 10.0), 1e-12).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].x - 1.0 / 3.0).abs() < 1e-10, "{:?}", roots);
        let qpsk = ErrorCurve::closed_form(ClosedForm::Qpsk, Variable::Snr).unwrap();
        assert!(find_inflections(&qpsk, Interval::new(0.01, 100.0), 1e-9).unwrap().is_empty());
    }

    #[test]
    fn located_inflection_inside_indeterminate_interval() {
        let c = builtin(BuiltinFamily::Pam, 2, None).unwrap();
        let mut r = classify(&c, Variable::NoisePower, ReportTarget::SerAverage).unwrap();
        let curve = ErrorCurve::closed_form(ClosedForm::Bpsk, Variable::NoisePower).unwrap();
        r.locate_inflections(&curve, 3.0, 1e-10).unwrap();
        assert_eq!(r.inflection_points.len(), 1);
        assert!(r.indeterminate[0].contains(r.inflection_points[0].x));
    }

    #[test]
    fn noisy_curve_is_refused() {
        let c = Arc::new(builtin(BuiltinFamily::Pam, 2, None).unwrap());
        let cfg = EstimatorConfig::new(1000, 1);
        let curve = ErrorCurve::monte_carlo(c, Target::Ser, Variable::NoisePower, cfg).unwrap();
        let e = find_inflections(&curve, Interval::new(0.1, 1.0), 1e-6).unwrap_err();
        assert!(matches!(e, Error::InsufficientPrecision(_)), "{e}");
    }

    #[test]
    fn bounds_hold_for_closed_forms() {
        let grid = geometric_grid(0.1, 100.0, 8);
        for (fam, n) in [(ClosedForm::Bpsk, 1), (ClosedForm::Qpsk, 2), (ClosedForm::Biorthogonal { dimension: 3 }, 3)] {
            for v in [Variable::Snr, Variable::NoisePower] {
                let curve = ErrorCurve::closed_form(fam, v).unwrap();
                let rep = derivative_bounds_check(&curve, n, &grid).unwrap();
                assert!(rep.all_ok(), "{fam} {v}: {:?}", rep.rows.iter().find(|r| !r.ok));
            }
        }
    }

    #[test]
    fn sphere_region_is_tight() {
        for n in [1usize, 2, 3, 6] {
            let gamma = 2.0;
            let k = bound_constants(n);
            let nf = n as f64;
            let slope = ErrorCurve::closed_form(
                ClosedForm::SphereRegion { dimension: n, radius: (nf / gamma).sqrt() },
                Variable::Snr,
            )
            .unwrap();
            let row = derivative_bounds_check(&slope, n, &[gamma]).unwrap().rows[0];
            assert!(row.lower_margin.abs() < 1e-13, "{row:?}");
            let up = ErrorCurve::closed_form(
                ClosedForm::SphereRegion { dimension: n, radius: ((nf + (2.0 * nf).sqrt()) / gamma).sqrt() },
                Variable::Snr,
            )
            .unwrap();
            let row = derivative_bounds_check(&up, n, &[gamma]).unwrap().rows[1];
            assert!(row.upper_margin.abs() < 1e-13, "{row:?}");
            if n > 2 {
                let low = ErrorCurve::closed_form(
                    ClosedForm::SphereRegion { dimension: n, radius: ((nf - (2.0 * nf).sqrt()) / gamma).sqrt() },
                    Variable::Snr,
                )
                .unwrap();
                let row = derivative_bounds_check(&low, n, &[gamma]).unwrap().rows[1];
                assert!(row.lower_margin.abs() < 1e-13, "{row:?}");
            }
            assert!(k.snr_upper > 0.0);
        }
    }

    #[test]
    fn midpoint_shapes() {
        let grid = geometric_grid(0.1, 20.0, 20);
        let bpsk_pc = ErrorCurve::closed_form(ClosedForm::Bpsk, Variable::Snr).unwrap().complement();
        assert!(log_concavity_check(&bpsk_pc, &grid).unwrap().all_ok());
        let constant = midpoint_check(Shape::LogConcave, &grid, 0.0, |_| Ok(Estimate::exact(0.3))).unwrap();
        assert_eq!(constant.min_margin, 0.0);
        let linear = midpoint_check(Shape::Convex, &grid, 0.0, |x| Ok(Estimate::exact(2.0 * x + 1.0))).unwrap();
        assert!(linear.all_ok());
        assert!(linear.min_margin.abs() < 1e-13);
        let concave = midpoint_check(Shape::Convex, &grid, 0.0, |x| Ok(Estimate::exact(x.ln()))).unwrap();
        assert!(!concave.all_ok());
    }

    #[test]
    fn serialized_intervals_spell_infinity() {
        let s = serde_json::to_string(&Interval::whole()).unwrap();
        assert_eq!(s, r#"{"lo":0.0,"hi":"inf"}"#);
    }
}
