//! Property suite for the Gaussian tail function: log-concavity,
//! curvature bounds and convexity of its squares, checked on dense grids.

use serde::Serialize;

use crate::convexity::{midpoint_check, Shape};
use crate::engine::Estimate;
use crate::error::Result;
use crate::gaussian::{
    q, q_bound_31_margin, q_inv_sqrt_second_derivative, q_prime, q_second, q_sqrt_derivatives,
    qsqrt_log_convexity_floor, qsqrt_log_second_derivative, Q_INV_SQRT_INFLECTION,
};

/// Grid points per tested interval.
pub const POINTS_PER_INTERVAL: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QCheck {
    pub name: &'static str,
    /// Number of inequalities evaluated.
    pub evaluations: usize,
    /// Smallest margin; non-negative when the property holds.
    pub min_margin: f64,
    pub passed: bool,
}

fn linear(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn midpoint(name: &'static str, shape: Shape, grid: &[f64], f: impl Fn(f64) -> f64) -> Result<QCheck> {
    let r = midpoint_check(shape, grid, 0.0, |x| Ok(Estimate::exact(f(x))))?;
    Ok(QCheck {
        name,
        evaluations: r.rows.len(),
        min_margin: r.min_margin,
        passed: r.all_ok(),
    })
}

/// Pointwise check of `margin(x) >= -tol(x)` with a relative rounding
/// allowance.
fn pointwise(name: &'static str, grid: &[f64], margin: impl Fn(f64) -> (f64, f64)) -> QCheck {
    let mut min_margin = f64::INFINITY;
    let mut passed = true;
    for &x in grid {
        let (m, scale) = margin(x);
        min_margin = min_margin.min(m);
        if m < -1e-12 * scale.abs() - 1e-300 {
            passed = false;
        }
    }
    QCheck {
        name,
        evaluations: grid.len(),
        min_margin,
        passed,
    }
}

/// Runs every check with `points` grid points per interval.
pub fn q_function_suite(points: usize) -> Result<Vec<QCheck>> {
    let points = points.max(3);
    let symmetric = linear(-5.0, 5.0, points);
    let positive = linear(0.0, 6.0, points);
    let snr = linear(0.01, 30.0, points);
    let mut out = vec![
        midpoint("Q log-concave", Shape::LogConcave, &symmetric, q)?,
        midpoint("1-Q log-concave", Shape::LogConcave, &symmetric, |x| q(-x))?,
        pointwise("Q'' >= 0 for x >= 0", &positive, |x| (q_second(x), q_second(x))),
        pointwise("Q'' <= Q'^2 / Q for x >= 0", &positive, |x| {
            let cap = q_prime(x).powi(2) / q(x);
            (cap - q_second(x), cap)
        }),
        midpoint("Q(sqrt g) log-convex", Shape::LogConvex, &snr, |g| q(g.sqrt()))?,
    ];
    let mut log_second_ok = true;
    let mut log_second_min = f64::INFINITY;
    for &g in &snr {
        let v = qsqrt_log_second_derivative(g)?;
        log_second_min = log_second_min.min(v);
        log_second_ok &= v >= 0.0;
    }
    out.push(QCheck {
        name: "(ln Q(sqrt g))'' >= 0",
        evaluations: snr.len(),
        min_margin: log_second_min,
        passed: log_second_ok,
    });
    out.push(pointwise("Q(x) >= x phi(x) / (1 + x^2)", &linear(0.0, 10.0, points), |x| {
        (q_bound_31_margin(x), q(x))
    }));
    out.push(pointwise("Q(sqrt g)'' >= (Q(sqrt g)')^2 / Q(sqrt g)", &snr, |g| {
        let (_, _, d2) = q_sqrt_derivatives(g);
        (d2 - qsqrt_log_convexity_floor(g), d2)
    }));
    out.push(midpoint("Q^2 log-concave", Shape::LogConcave, &symmetric, |x| q(x).powi(2))?);
    out.push(midpoint("(1-Q)^2 log-concave", Shape::LogConcave, &symmetric, |x| q(-x).powi(2))?);
    out.push(midpoint("Q(sqrt g)^2 log-convex", Shape::LogConvex, &snr, |g| q(g.sqrt()).powi(2))?);
    // Q itself is convex only for x >= 0, and so is its square
    out.push(midpoint("Q^2 convex for x >= 0", Shape::Convex, &positive, |x| q(x).powi(2))?);
    out.push(midpoint("Q(sqrt x)^2 convex", Shape::Convex, &snr, |x| q(x.sqrt()).powi(2))?);
    // Q(1/sqrt x): convex below the inflection, concave above
    let below = linear(1e-2, Q_INV_SQRT_INFLECTION, points);
    let above = linear(Q_INV_SQRT_INFLECTION, 10.0, points);
    out.push(midpoint("Q(1/sqrt x) convex below 1/3", Shape::Convex, &below, |x| q(1.0 / x.sqrt()))?);
    out.push(midpoint("Q(1/sqrt x) concave above 1/3", Shape::Concave, &above, |x| q(1.0 / x.sqrt()))?);
    let h = 1e-9;
    let flips = q_inv_sqrt_second_derivative(Q_INV_SQRT_INFLECTION - h) > 0.0
        && q_inv_sqrt_second_derivative(Q_INV_SQRT_INFLECTION + h) < 0.0;
    out.push(QCheck {
        name: "Q(1/sqrt x)'' changes sign at 1/3",
        evaluations: 2,
        min_margin: if flips { 0.0 } else { -1.0 },
        passed: flips,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in q_function_suite(POINTS_PER_INTERVAL).unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn suite_detects_a_false_claim() {
        // Q is not log-convex, and Q^2 is concave for negative arguments
        let r = midpoint("Q log-convex", Shape::LogConvex, &linear(-2.0, 2.0, 50), q).unwrap();
        assert!(!r.passed);
        let r = midpoint("Q^2 convex", Shape::Convex, &linear(-5.0, 0.0, 50), |x| q(x).powi(2)).unwrap();
        assert!(!r.passed);
    }
}
