//! Adaptive Gauss–Kronrod (7, 15) integration.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the per-panel Kronrod–Gauss differences.
    pub error: f64,
    pub evaluations: usize,
}

fn panel<F: Fn(f64) -> (f64, f64)>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, ac) = f(c);
    let mut k = WGK[7] * fc;
    let mut aux = WGK[7] * ac;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (l, al) = f(c - dx);
        let (r, ar) = f(c + dx);
        let s = l + r;
        k += WGK[j] * s;
        aux += WGK[j] * (al + ar);
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs(), aux * h)
}

/// Integrates `f` over `[a, b]`, bisecting the panel with the largest error
/// estimate until the total error is below `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    integrate_with_aux(|x| (f(x), 0.0), a, b, abs_tol, rel_tol).map(|(i, _)| i)
}

/// Like [`integrate`] for the first component of `f`; the second component
/// is integrated with the Kronrod rule on the same panels and returned
/// alongside (no error control of its own).
pub fn integrate_with_aux<F: Fn(f64) -> (f64, f64)>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(Integral, f64)> {
    const MAX_PANELS: usize = 2000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        let zero = Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
        return Ok((zero, 0.0));
    }
    let (v, e, x) = panel(&f, a, b);
    let mut panels = vec![(a, b, v, e, x)];
    let mut evaluations = 15;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if !value.is_finite() {
            return Err(Error::Domain("integrand is not finite on the interval".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            let aux = panels.iter().map(|p| p.4).sum();
            let integral = Integral {
                value,
                error,
                evaluations,
            };
            return Ok((integral, aux));
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::NonConvergence(format!(
                "quadrature error {error:.3e} after {MAX_PANELS} panels"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(k, _)| k)
            .expect("non-empty");
        let (lo, hi, ..) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1, x1) = panel(&f, lo, mid);
        let (v2, e2, x2) = panel(&f, mid, hi);
        evaluations += 30;
        panels.push((lo, mid, v1, e1, x1));
        panels.push((mid, hi, v2, e2, x2));
    }
}
