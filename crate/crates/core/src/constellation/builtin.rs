use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Constellation;
use crate::error::{Error, Result};

/// Built-in constellation families. All are returned at unit mean energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinFamily {
    /// `M` equally spaced points on a line, Gray labelled.
    Pam,
    /// `M` points on the unit circle at phases `(2k+1) pi / M`, Gray labelled.
    Psk,
    /// Square `L x L` grid, Gray labelled per axis.
    Qam,
    /// Unit vectors `e_1 .. e_M` in `M` dimensions.
    Orthogonal,
    /// `+-e_k` in `M/2` dimensions, ordered `e_1, -e_1, e_2, -e_2, ..`.
    Biorthogonal,
    /// The origin surrounded by `+-e_k` in `n = (M-1)/2` dimensions. Point 0
    /// owns a bounded cubic decision region, which makes the small-SNR side of
    /// the convexity analysis reachable in any dimension.
    SphereTest,
}

impl FromStr for BuiltinFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "pam" => BuiltinFamily::Pam,
            "psk" => BuiltinFamily::Psk,
            "qam" => BuiltinFamily::Qam,
            "orthogonal" => BuiltinFamily::Orthogonal,
            "biorthogonal" => BuiltinFamily::Biorthogonal,
            "sphere_test" | "sphere-test" => BuiltinFamily::SphereTest,
            other => return Err(Error::Unsupported(format!("unknown constellation family `{other}`"))),
        })
    }
}

impl fmt::Display for BuiltinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BuiltinFamily::Pam => "pam",
            BuiltinFamily::Psk => "psk",
            BuiltinFamily::Qam => "qam",
            BuiltinFamily::Orthogonal => "orthogonal",
            BuiltinFamily::Biorthogonal => "biorthogonal",
            BuiltinFamily::SphereTest => "sphere_test",
        };
        f.write_str(s)
    }
}

fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

fn unsupported(family: BuiltinFamily, order: usize, why: &str) -> Error {
    Error::Unsupported(format!("{family} with order {order}: {why}"))
}

/// Builds a member of a built-in family. `dimension` is only consulted by
/// the families whose dimension follows from the order (biorthogonal,
/// sphere_test); when given it must agree.
pub fn builtin(family: BuiltinFamily, order: usize, dimension: Option<usize>) -> Result<Constellation> {
    if order < 2 {
        return Err(unsupported(family, order, "need at least two points"));
    }
    let (n, points, labels): (usize, Vec<Vec<f64>>, Option<Vec<u64>>) = match family {
        BuiltinFamily::Pam => {
            let pts = (0..order)
                .map(|k| vec![2.0 * k as f64 - (order as f64 - 1.0)])
                .collect();
            let labels = order
                .is_power_of_two()
                .then(|| (0..order as u64).map(gray).collect());
            (1, pts, labels)
        }
        BuiltinFamily::Psk => {
            let pts = (0..order)
                .map(|k| {
                    let t = (2 * k + 1) as f64 * PI / order as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            let labels = order
                .is_power_of_two()
                .then(|| (0..order as u64).map(gray).collect());
            (2, pts, labels)
        }
        BuiltinFamily::Qam => {
            let side = (order as f64).sqrt().round() as usize;
            if side * side != order || side < 2 {
                return Err(unsupported(family, order, "order must be a square"));
            }
            let level = |a: usize| 2.0 * a as f64 - (side as f64 - 1.0);
            let mut pts = Vec::with_capacity(order);
            let mut labels = Vec::with_capacity(order);
            let half_bits = side.trailing_zeros();
            for a in 0..side {
                for b in 0..side {
                    pts.push(vec![level(a), level(b)]);
                    labels.push((gray(a as u64) << half_bits) | gray(b as u64));
                }
            }
            (2, pts, side.is_power_of_two().then_some(labels))
        }
        BuiltinFamily::Orthogonal => {
            if let Some(d) = dimension {
                if d != order {
                    return Err(unsupported(family, order, "dimension must equal the order"));
                }
            }
            let pts = (0..order)
                .map(|k| {
                    let mut v = vec![0.0; order];
                    v[k] = 1.0;
                    v
                })
                .collect();
            let labels = order.is_power_of_two().then(|| (0..order as u64).collect());
            (order, pts, labels)
        }
        BuiltinFamily::Biorthogonal => {
            if order % 2 != 0 {
                return Err(unsupported(family, order, "order must be even"));
            }
            let n = order / 2;
            if let Some(d) = dimension {
                if d != n {
                    return Err(unsupported(family, order, "dimension must be half the order"));
                }
            }
            let mut pts = Vec::with_capacity(order);
            for k in 0..n {
                for sign in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[k] = sign;
                    pts.push(v);
                }
            }
            let labels = order.is_power_of_two().then(|| (0..order as u64).collect());
            (n, pts, labels)
        }
        BuiltinFamily::SphereTest => {
            if order % 2 != 1 || order < 3 {
                return Err(unsupported(family, order, "order must be 2n + 1"));
            }
            let n = (order - 1) / 2;
            if let Some(d) = dimension {
                if d != n {
                    return Err(unsupported(family, order, "dimension must be (order - 1) / 2"));
                }
            }
            let mut pts = vec![vec![0.0; n]];
            for k in 0..n {
                for sign in [1.0, -1.0] {
                    let mut v = vec![0.0; n];
                    v[k] = sign;
                    pts.push(v);
                }
            }
            (n, pts, None)
        }
    };
    let mut c = Constellation::new(n, points)?;
    let e = c.mean_energy();
    let s = 1.0 / e.sqrt();
    c.coords.iter_mut().for_each(|v| *v *= s);
    if let Some(l) = labels {
        c = c.with_labels(l)?;
    }
    Ok(c.with_name(format!("{family}{order}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_on_unit_circle() {
        let c = builtin(BuiltinFamily::Psk, 4, None).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.dimension(), 2);
        for p in c.points() {
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
            assert!((p[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
        // Gray: neighbours differ in one bit.
        for k in 0..4 {
            assert_eq!(c.hamming(k, (k + 1) % 4), Some(1));
        }
    }

    #[test]
    fn octahedron() {
        let c = builtin(BuiltinFamily::Biorthogonal, 6, Some(3)).unwrap();
        assert_eq!(c.dimension(), 3);
        for p in c.points() {
            assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(builtin(BuiltinFamily::Biorthogonal, 6, Some(2)).is_err());
    }

    #[test]
    fn invalid_orders() {
        assert!(matches!(builtin(BuiltinFamily::Qam, 15, None), Err(Error::Unsupported(_))));
        assert!(builtin(BuiltinFamily::Biorthogonal, 5, None).is_err());
        assert!(builtin(BuiltinFamily::SphereTest, 6, None).is_err());
        assert!(builtin(BuiltinFamily::Pam, 1, None).is_err());
    }

    #[test]
    fn all_families_unit_energy() {
        let cases = [
            (BuiltinFamily::Pam, 2),
            (BuiltinFamily::Pam, 4),
            (BuiltinFamily::Pam, 3),
            (BuiltinFamily::Psk, 8),
            (BuiltinFamily::Qam, 16),
            (BuiltinFamily::Qam, 64),
            (BuiltinFamily::Orthogonal, 4),
            (BuiltinFamily::Biorthogonal, 8),
            (BuiltinFamily::SphereTest, 7),
        ];
        for (f, m) in cases {
            let c = builtin(f, m, None).unwrap();
            assert!(c.is_normalized(), "{f}{m}");
            assert_eq!(c.len(), m);
        }
    }

    #[test]
    fn qam16_gray_neighbours() {
        let c = builtin(BuiltinFamily::Qam, 16, None).unwrap();
        let dmin = 2.0 * (3.0 / 30.0f64).sqrt();
        for i in 0..16 {
            for j in 0..16 {
                if i != j && (c.distance(i, j) - dmin).abs() < 1e-12 {
                    assert_eq!(c.hamming(i, j), Some(1));
                }
            }
        }
    }

    #[test]
    fn family_names_parse() {
        for f in ["pam", "PSK", "qam", "orthogonal", "biorthogonal", "sphere_test"] {
            let fam: BuiltinFamily = f.parse().unwrap();
            assert_eq!(fam.to_string(), f.to_ascii_lowercase());
        }
        assert!("hex".parse::<BuiltinFamily>().is_err());
    }
}
