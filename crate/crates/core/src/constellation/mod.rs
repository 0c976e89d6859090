//! Constellations, their maximum-likelihood decision regions and the
//! distance quantities that set every convexity threshold.

mod builtin;
mod document;
mod region;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{builtin, BuiltinFamily};
pub use document::{load_constellation, ConstellationDocument};
pub use region::{
    decision_region, decision_region_with, geometry_summary, DecisionRegion, Extent,
    GeometrySummary, Halfspace, VERTEX_ENUMERATION_MAX_DIM, VERTEX_ENUMERATION_MAX_POINTS,
};

const PRIOR_SUM_TOL: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-9;

/// A finite point set in `n`-dimensional real space with prior
/// probabilities and optional bit labels.
///
/// Immutable once built; share it by reference or `Arc` across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    dimension: usize,
    /// Row-major `M x n`.
    coords: Vec<f64>,
    priors: Vec<f64>,
    bit_labels: Option<Vec<u64>>,
    bits_per_symbol: u32,
    /// Mean energy before an explicit renormalization, if one was requested.
    renormalized_from: Option<f64>,
    name: Option<String>,
}

impl Constellation {
    /// Validates and builds a constellation with uniform priors.
    pub fn new(dimension: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        Self::with_priors(dimension, points, vec![1.0 / m.max(1) as f64; m])
    }

    pub fn with_priors(dimension: usize, points: Vec<Vec<f64>>, priors: Vec<f64>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::doc("dimension", "must be a positive integer"));
        }
        let m = points.len();
        if m < 2 {
            return Err(Error::doc("points", format!("need at least 2 points, got {m}")));
        }
        let mut coords = Vec::with_capacity(m * dimension);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dimension {
                return Err(Error::doc(
                    format!("points[{i}]"),
                    format!("has {} coordinates, dimension is {dimension}", p.len()),
                ));
            }
            if let Some(k) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::doc(format!("points[{i}][{k}]"), "not a finite number"));
            }
            coords.extend_from_slice(p);
        }
        for i in 0..m {
            for j in 0..i {
                let same = (0..dimension).all(|k| coords[i * dimension + k] == coords[j * dimension + k]);
                if same {
                    return Err(Error::doc(
                        format!("points[{i}]"),
                        format!("duplicate of points[{j}]"),
                    ));
                }
            }
        }
        if priors.len() != m {
            return Err(Error::doc(
                "priors",
                format!("expected {m} entries, got {}", priors.len()),
            ));
        }
        if let Some(k) = priors.iter().position(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::doc(format!("priors[{k}]"), "must be a non-negative number"));
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::doc("priors", format!("prior sum ≠ 1 (sum is {sum})")));
        }
        Ok(Constellation {
            dimension,
            coords,
            priors,
            bit_labels: None,
            bits_per_symbol: 0,
            renormalized_from: None,
            name: None,
        })
    }

    /// Attaches bit labels, given as integers of `log2(M)` bits each.
    pub fn with_labels(mut self, labels: Vec<u64>) -> Result<Self> {
        let m = self.len();
        if !m.is_power_of_two() {
            return Err(Error::doc("bit_labels", format!("M = {m} is not a power of two")));
        }
        if labels.len() != m {
            return Err(Error::doc(
                "bit_labels",
                format!("expected {m} labels, got {}", labels.len()),
            ));
        }
        let bits = m.trailing_zeros();
        for (i, &l) in labels.iter().enumerate() {
            if l >> bits != 0 {
                return Err(Error::doc(format!("bit_labels[{i}]"), "label wider than log2(M) bits"));
            }
            if labels[..i].contains(&l) {
                return Err(Error::doc(format!("bit_labels[{i}]"), "duplicate label"));
            }
        }
        self.bit_labels = Some(labels);
        self.bits_per_symbol = bits;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Scales the points to unit mean energy `(1/M) sum |s_i|^2 = 1` and
    /// records the original energy.
    pub fn renormalized(mut self) -> Self {
        let e = self.mean_energy();
        if e > 0.0 && (e - 1.0).abs() > 0.0 {
            let s = 1.0 / e.sqrt();
            self.coords.iter_mut().for_each(|v| *v *= s);
            self.renormalized_from = Some(e);
        }
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of points `M`.
    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dimension)
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn bit_labels(&self) -> Option<&[u64]> {
        self.bit_labels.as_deref()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn renormalized_from(&self) -> Option<f64> {
        self.renormalized_from
    }

    /// `(1/M) sum_i |s_i|^2`.
    pub fn mean_energy(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    pub fn is_normalized(&self) -> bool {
        (self.mean_energy() - 1.0).abs() <= ENERGY_TOL
    }

    pub fn has_uniform_priors(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.priors.iter().all(|p| (p - u).abs() <= 1e-15)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist2(self.point(i), self.point(j)).sqrt()
    }

    /// Hamming distance between the labels of points `i` and `j`.
    pub fn hamming(&self, i: usize, j: usize) -> Option<u32> {
        self.bit_labels
            .as_ref()
            .map(|l| (l[i] ^ l[j]).count_ones())
    }

    /// Minimum-distance (maximum-likelihood in AWGN) detection.
    pub fn ml_detect(&self, r: &[f64]) -> Result<usize> {
        if r.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: r.len(),
            });
        }
        Ok(self.detect(r))
    }

    /// Unchecked detection. Ties resolve to the lowest index.
    #[inline]
    pub(crate) fn detect(&self, r: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points().enumerate() {
            let d = dist2(r, p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Detection of `s_i + xi` without materializing the received vector.
    #[cfg(test)]
    pub(crate) fn detect_offset(&self, i: usize, xi: &[f64]) -> usize {
        let s = self.point(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.points().enumerate() {
            let mut d = 0.0;
            for ((&a, &b), &x) in s.iter().zip(p).zip(xi) {
                let t = a + x - b;
                d += t * t;
            }
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Detection of `s_i + sigma z`.
    #[inline]
    pub(crate) fn detect_scaled(&self, i: usize, z: &[f64], sigma: f64) -> usize {
        let s = self.point(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.points().enumerate() {
            let mut d = 0.0;
            for ((&a, &b), &x) in s.iter().zip(p).zip(z) {
                let t = a - b + sigma * x;
                d += t * t;
            }
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
