//! Voronoi decision regions as halfspace lists around the owning point.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::Constellation;
use crate::error::{Error, Result};

/// Vertex enumeration for `d_max` runs only up to this dimension ...
pub const VERTEX_ENUMERATION_MAX_DIM: usize = 4;
/// ... and this many points.
pub const VERTEX_ENUMERATION_MAX_POINTS: usize = 64;

const FEASIBILITY_TOL: f64 = 1e-9;

/// One face `a . x <= b` of a decision region, in coordinates centred on the
/// owning point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    /// Unit normal `(s_j - s_i)/|s_j - s_i|`.
    pub normal: Vec<f64>,
    /// `|s_j - s_i| / 2`.
    pub offset: f64,
    pub neighbor: usize,
}

/// A distance that may be unbounded or beyond what is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extent {
    Finite(f64),
    Infinite,
    /// Bounded region, but too large for vertex enumeration.
    Unknown,
}

impl Extent {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extent::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extent::Infinite)
    }

    /// Maximum in the order `Finite < Unknown < Infinite`.
    fn max(self, other: Extent) -> Extent {
        match (self, other) {
            (Extent::Infinite, _) | (_, Extent::Infinite) => Extent::Infinite,
            (Extent::Unknown, _) | (_, Extent::Unknown) => Extent::Unknown,
            (Extent::Finite(a), Extent::Finite(b)) => Extent::Finite(a.max(b)),
        }
    }
}

/// `Omega_i = {x : A x <= b}` with the origin moved to `s_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRegion {
    pub owner: usize,
    pub dimension: usize,
    pub halfspaces: Vec<Halfspace>,
    /// Distance from the origin to the nearest face, `min_j b_j`.
    pub d_min: f64,
    /// `sup |x|` over the region.
    pub d_max: Extent,
    pub pruned: bool,
}

impl DecisionRegion {
    /// Membership of a point given in region coordinates (relative to `s_i`).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces
            .iter()
            .all(|h| dot(&h.normal, x) <= h.offset)
    }

    pub fn is_bounded(&self) -> Option<bool> {
        match self.d_max {
            Extent::Finite(_) | Extent::Unknown => Some(true),
            Extent::Infinite => Some(false),
        }
    }
}

/// Decision region of point `i` with redundant faces pruned.
pub fn decision_region(c: &Constellation, i: usize) -> Result<DecisionRegion> {
    decision_region_with(c, i, true)
}

pub fn decision_region_with(c: &Constellation, i: usize, prune: bool) -> Result<DecisionRegion> {
    let m = c.len();
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, len: m });
    }
    let n = c.dimension();
    let si = c.point(i);
    let all: Vec<Halfspace> = (0..m)
        .filter(|&j| j != i)
        .map(|j| {
            let diff: Vec<f64> = c.point(j).iter().zip(si).map(|(a, b)| a - b).collect();
            let len = dot(&diff, &diff).sqrt();
            Halfspace {
                normal: diff.iter().map(|v| v / len).collect(),
                offset: len / 2.0,
                neighbor: j,
            }
        })
        .collect();
    let d_min = all.iter().map(|h| h.offset).fold(f64::INFINITY, f64::min);
    let kept = if prune { prune_redundant(n, all.clone()) } else { all.clone() };
    let d_max = if !is_bounded(n, &kept) {
        Extent::Infinite
    } else if n <= VERTEX_ENUMERATION_MAX_DIM && m <= VERTEX_ENUMERATION_MAX_POINTS {
        Extent::Finite(max_vertex_norm(n, &kept))
    } else {
        Extent::Unknown
    };
    Ok(DecisionRegion {
        owner: i,
        dimension: n,
        halfspaces: kept,
        d_min,
        d_max,
        pruned: prune,
    })
}

fn lp_max(n: usize, objective: &[f64], faces: &[&Halfspace]) -> Option<f64> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = objective
        .iter()
        .map(|&c| p.add_var(c, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    debug_assert_eq!(vars.len(), n);
    for h in faces {
        let expr: Vec<_> = vars.iter().copied().zip(h.normal.iter().copied()).collect();
        p.add_constraint(expr, ComparisonOp::Le, h.offset);
    }
    match p.solve() {
        // an unbounded objective comes back either as an error or as +inf
        Ok(sol) if sol.objective().is_finite() => Some(sol.objective()),
        _ => None,
    }
}

/// Removes faces implied by the others, one at a time so that duplicated
/// faces keep one representative.
fn prune_redundant(n: usize, faces: Vec<Halfspace>) -> Vec<Halfspace> {
    let mut keep = vec![true; faces.len()];
    for j in 0..faces.len() {
        let others: Vec<&Halfspace> = faces
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j && keep[k])
            .map(|(_, h)| h)
            .collect();
        if others.is_empty() {
            continue;
        }
        if let Some(best) = lp_max(n, &faces[j].normal, &others) {
            if best <= faces[j].offset + FEASIBILITY_TOL * (1.0 + faces[j].offset) {
                keep[j] = false;
            }
        }
    }
    faces
        .into_iter()
        .zip(keep)
        .filter_map(|(h, k)| k.then_some(h))
        .collect()
}

/// Bounded iff every coordinate is bounded above and below.
fn is_bounded(n: usize, faces: &[Halfspace]) -> bool {
    let refs: Vec<&Halfspace> = faces.iter().collect();
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut obj = vec![0.0; n];
            obj[k] = sign;
            if lp_max(n, &obj, &refs).is_none() {
                return false;
            }
        }
    }
    true
}

/// Largest vertex norm of a bounded polytope, by brute-force enumeration of
/// `n`-subsets of faces.
fn max_vertex_norm(n: usize, faces: &[Halfspace]) -> f64 {
    let mut best: f64 = 0.0;
    let mut idx: Vec<usize> = (0..n).collect();
    let f = faces.len();
    if f < n {
        return f64::INFINITY;
    }
    loop {
        if let Some(x) = solve_square(n, &idx, faces) {
            let feasible = faces
                .iter()
                .all(|h| dot(&h.normal, &x) <= h.offset + FEASIBILITY_TOL * (1.0 + h.offset));
            if feasible {
                best = best.max(dot(&x, &x).sqrt());
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < f - n + k {
                idx[k] += 1;
                for t in k + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Solves `a_j . x = b_j` for the selected faces; `None` when singular.
fn solve_square(n: usize, rows: &[usize], faces: &[Halfspace]) -> Option<Vec<f64>> {
    let mut a = vec![0.0; n * (n + 1)];
    for (r, &j) in rows.iter().enumerate() {
        a[r * (n + 1)..r * (n + 1) + n].copy_from_slice(&faces[j].normal);
        a[r * (n + 1) + n] = faces[j].offset;
    }
    let w = n + 1;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x * w + col].abs().total_cmp(&a[y * w + col].abs()))?;
        if a[piv * w + col].abs() < 1e-10 {
            return None;
        }
        if piv != col {
            for k in 0..w {
                a.swap(piv * w + k, col * w + k);
            }
        }
        for r in 0..n {
            if r != col {
                let factor = a[r * w + col] / a[col * w + col];
                if factor != 0.0 {
                    for k in col..w {
                        a[r * w + k] -= factor * a[col * w + k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|r| a[r * w + n] / a[r * w + r]).collect())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-point and global `d_min` / `d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub d_min_per_point: Vec<f64>,
    pub d_max_per_point: Vec<Extent>,
    pub d_min: f64,
    pub d_max: Extent,
}

pub fn geometry_summary(c: &Constellation) -> GeometrySummary {
    let regions: Vec<DecisionRegion> = (0..c.len())
        .map(|i| decision_region(c, i).expect("index in range"))
        .collect();
    let d_min_per_point: Vec<f64> = regions.iter().map(|r| r.d_min).collect();
    let d_max_per_point: Vec<Extent> = regions.iter().map(|r| r.d_max).collect();
    let d_min = d_min_per_point.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = d_max_per_point
        .iter()
        .copied()
        .fold(Extent::Finite(0.0), Extent::max);
    GeometrySummary {
        d_min_per_point,
        d_max_per_point,
        d_min,
        d_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{builtin, BuiltinFamily};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn bpsk_region() {
        let c = Constellation::new(1, vec![vec![1.0], vec![-1.0]]).unwrap();
        let r = decision_region(&c, 0).unwrap();
        assert_eq!(r.halfspaces.len(), 1);
        assert_eq!(r.halfspaces[0].normal, vec![-1.0]);
        assert_eq!(r.halfspaces[0].offset, 1.0);
        assert_eq!(r.d_min, 1.0);
        assert_eq!(r.d_max, Extent::Infinite);
        let g = geometry_summary(&c);
        assert_eq!(g.d_min, 1.0);
        assert_eq!(g.d_max, Extent::Infinite);
    }

    #[test]
    fn qpsk_regions() {
        let c = builtin(BuiltinFamily::Psk, 4, None).unwrap();
        for i in 0..4 {
            let r = decision_region(&c, i).unwrap();
            assert!((r.d_min - H).abs() < 1e-15);
            assert_eq!(r.d_max, Extent::Infinite);
            // the diagonal neighbour only touches the corner
            assert_eq!(r.halfspaces.len(), 2);
        }
        let g = geometry_summary(&c);
        assert!((g.d_min - H).abs() < 1e-15);
    }

    #[test]
    fn pam4_inner_region_is_bounded() {
        let c = builtin(BuiltinFamily::Pam, 4, None).unwrap();
        let inner = decision_region(&c, 1).unwrap();
        let want = 1.0 / 5f64.sqrt();
        assert!((inner.d_min - want).abs() < 1e-15);
        match inner.d_max {
            Extent::Finite(v) => assert!((v - want).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(decision_region(&c, 0).unwrap().d_max, Extent::Infinite);
    }

    #[test]
    fn octahedron_geometry() {
        let c = builtin(BuiltinFamily::Biorthogonal, 6, None).unwrap();
        let g = geometry_summary(&c);
        assert!((g.d_min - H).abs() < 1e-15);
        assert_eq!(g.d_max, Extent::Infinite);
    }

    #[test]
    fn sphere_test_inner_cube() {
        // inner region is the cube of half-width r/2 with r = sqrt(7/6)
        let c = builtin(BuiltinFamily::SphereTest, 7, None).unwrap();
        let r = decision_region(&c, 0).unwrap();
        let half = (7.0f64 / 6.0).sqrt() / 2.0;
        assert!((r.d_min - half).abs() < 1e-14);
        let dmax = r.d_max.finite().unwrap();
        assert!((dmax - half * 3f64.sqrt()).abs() < 1e-9, "{dmax}");
        assert_eq!(r.halfspaces.len(), 6);
    }

    #[test]
    fn out_of_range() {
        let c = builtin(BuiltinFamily::Pam, 2, None).unwrap();
        assert!(matches!(decision_region(&c, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn hexagonal_cell_bounded() {
        // centre of a hexagon with six neighbours at unit distance
        let mut pts = vec![vec![0.0, 0.0]];
        for k in 0..6 {
            let t = k as f64 * std::f64::consts::PI / 3.0;
            pts.push(vec![t.cos(), t.sin()]);
        }
        // second shell whose faces are all redundant for the centre
        for k in 0..6 {
            let t = k as f64 * std::f64::consts::PI / 3.0 + 0.5;
            pts.push(vec![3.0 * t.cos(), 3.0 * t.sin()]);
        }
        let c = Constellation::new(2, pts).unwrap();
        let r = decision_region(&c, 0).unwrap();
        assert_eq!(r.halfspaces.len(), 6);
        let circum = 0.5 / (std::f64::consts::PI / 6.0).cos();
        assert!((r.d_max.finite().unwrap() - circum).abs() < 1e-9);
    }

    fn check_membership_agreement(c: &Constellation, samples: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = c.dimension();
        let pruned: Vec<_> = (0..c.len()).map(|i| decision_region(c, i).unwrap()).collect();
        let full: Vec<_> = (0..c.len()).map(|i| decision_region_with(c, i, false).unwrap()).collect();
        let mut shifted = vec![0.0; n];
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.5..2.5)).collect();
            let det = c.detect(&x);
            let mut claims = 0;
            for i in 0..c.len() {
                for (k, v) in shifted.iter_mut().enumerate() {
                    *v = x[k] - c.point(i)[k];
                }
                let a = pruned[i].contains(&shifted);
                let b = full[i].contains(&shifted);
                assert_eq!(a, b, "pruning changed region {i}");
                assert_eq!(a, det == i, "halfspace test disagrees with detector");
                claims += a as usize;
            }
            assert_eq!(claims, 1);
        }
    }

    #[test]
    fn regions_tile_space_and_match_detector() {
        for (f, m) in [
            (BuiltinFamily::Qam, 16),
            (BuiltinFamily::Psk, 8),
            (BuiltinFamily::Pam, 4),
            (BuiltinFamily::Biorthogonal, 6),
            (BuiltinFamily::SphereTest, 7),
        ] {
            let c = builtin(f, m, None).unwrap();
            check_membership_agreement(&c, 10_000, m as u64);
        }
    }

    #[test]
    fn random_constellations_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for trial in 0..6 {
            let n = 1 + trial % 4;
            let m = 3 + trial * 2;
            let pts: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let c = Constellation::new(n, pts).unwrap().renormalized();
            check_membership_agreement(&c, 10_000, trial as u64);
            // d_min,i is exactly half the nearest-neighbour distance
            for i in 0..m {
                let nn = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| c.distance(i, j))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(decision_region(&c, i).unwrap().d_min, nn / 2.0);
            }
        }
    }
}
