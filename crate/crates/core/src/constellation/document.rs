//! JSON constellation documents.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "points": [[0.7071, 0.7071], [-0.7071, 0.7071], [-0.7071, -0.7071], [0.7071, -0.7071]],
//!   "priors": [0.25, 0.25, 0.25, 0.25],
//!   "bit_labels": ["00", "01", "11", "10"],
//!   "normalize": false,
//!   "name": "qpsk"
//! }
//! ```
//!
//! `priors` defaults to uniform, `bit_labels` to none. `normalize: true`
//! rescales the points to unit mean energy; the original energy is kept on
//! the loaded constellation and written back as `renormalized_from`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Constellation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationDocument {
    pub dimension: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renormalized_from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl ConstellationDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::doc(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })
    }

    pub fn into_constellation(self) -> Result<Constellation> {
        let m = self.points.len();
        let priors = self.priors.unwrap_or_else(|| vec![1.0 / m.max(1) as f64; m]);
        let mut c = Constellation::with_priors(self.dimension, self.points, priors)?;
        if let Some(labels) = self.bit_labels {
            if !m.is_power_of_two() {
                return Err(Error::doc("bit_labels", format!("M = {m} is not a power of two")));
            }
            let bits = m.trailing_zeros() as usize;
            let mut parsed = Vec::with_capacity(labels.len());
            for (i, s) in labels.iter().enumerate() {
                if s.len() != bits {
                    return Err(Error::doc(
                        format!("bit_labels[{i}]"),
                        format!("label length mismatch: `{s}` has {} bits, expected {bits}", s.len()),
                    ));
                }
                let v = u64::from_str_radix(s, 2).map_err(|_| {
                    Error::doc(format!("bit_labels[{i}]"), format!("`{s}` is not a binary string"))
                })?;
                parsed.push(v);
            }
            c = c.with_labels(parsed)?;
        }
        if let Some(name) = self.name {
            c = c.with_name(name);
        }
        if self.normalize {
            c = c.renormalized();
        } else if let Some(e) = self.renormalized_from {
            c.renormalized_from = Some(e);
        }
        Ok(c)
    }

    pub fn from_constellation(c: &Constellation) -> Self {
        let bits = c.bits_per_symbol() as usize;
        ConstellationDocument {
            dimension: c.dimension(),
            points: c.points().map(|p| p.to_vec()).collect(),
            priors: Some(c.priors().to_vec()),
            bit_labels: c
                .bit_labels()
                .map(|l| l.iter().map(|v| format!("{v:0bits$b}")).collect()),
            normalize: false,
            renormalized_from: c.renormalized_from(),
            name: c.name().map(str::to_owned),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Parses and validates a constellation document.
pub fn load_constellation(text: &str) -> Result<Constellation> {
    ConstellationDocument::parse(text)?.into_constellation()
}

impl Constellation {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        load_constellation(&text)
    }

    pub fn to_document(&self) -> ConstellationDocument {
        ConstellationDocument::from_constellation(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_document() {
        let c = load_constellation(r#"{"dimension": 1, "points": [[1], [-1]]}"#).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.is_normalized());
        assert_eq!(c.priors(), &[0.5, 0.5]);
    }

    #[test]
    fn qpsk_document_with_labels() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(
            r#"{{"dimension": 2, "points": [[{h},{h}],[-{h},{h}],[-{h},-{h}],[{h},-{h}]],
                "bit_labels": ["00","01","11","10"]}}"#
        );
        let c = load_constellation(&text).unwrap();
        assert_eq!((c.len(), c.dimension()), (4, 2));
        assert_eq!(c.hamming(0, 2), Some(2));
    }

    #[test]
    fn prior_sum_error() {
        let e = load_constellation(r#"{"dimension": 1, "points": [[1], [-1]], "priors": [0.6, 0.6]}"#)
            .unwrap_err();
        assert!(e.to_string().contains("prior sum ≠ 1"), "{e}");
    }

    #[test]
    fn label_length_error() {
        let e = load_constellation(r#"{"dimension": 1, "points": [[1], [-1]], "bit_labels": ["0", "10"]}"#)
            .unwrap_err();
        assert!(matches!(&e, Error::Document { path, message } if path == "bit_labels[1]" && message.contains("length mismatch")));
    }

    #[test]
    fn malformed_json() {
        let e = load_constellation(r#"{"dimension": 1, "points": [[1], "#).unwrap_err();
        assert!(matches!(e, Error::Document { .. }));
        let e = load_constellation(r#"{"dimension": 1, "points": [[1],[2]], "colour": 3}"#).unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn normalize_on_request() {
        let c = load_constellation(r#"{"dimension": 1, "points": [[2], [-2]], "normalize": true}"#).unwrap();
        assert!(c.is_normalized());
        assert_eq!(c.renormalized_from(), Some(4.0));
        let back = load_constellation(&c.to_document().to_json()).unwrap();
        assert_eq!(back, c);
    }
}
