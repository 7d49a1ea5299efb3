use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{check_beta, CalibrationError, Mat3, Result};
use crate::Rgb;

/// Consistency tolerance for `Q·M⁻¹·N = I` when a bundle is constructed or
/// loaded.
const N_CONSISTENCY_TOLERANCE: f64 = 1e-6;

/// Solver diagnostics carried alongside the matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(with = "finite_or_null")]
    pub cond_sl: f64,
    /// Infinite (serialized as `null`) for a singular `Q`.
    #[serde(with = "finite_or_null")]
    pub cond_q: f64,
    pub residual: f64,
    pub q_rank: usize,
    pub out_of_gamut_fraction: f64,
    pub clamped_predictions: usize,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            cond_sl: 1.0,
            cond_q: 1.0,
            residual: 0.0,
            q_rank: 3,
            out_of_gamut_fraction: 0.0,
            clamped_predictions: 0,
        }
    }
}

mod finite_or_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// The solved stage pipeline.
///
/// Serialized as `{"M", "Q", "N" (or null), "beta", "black_offset",
/// "diagnostics"}` with row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BundleFields", into = "BundleFields")]
pub struct CalibrationBundle {
    pub m: Mat3,
    pub q: Mat3,
    /// `None` when `Q` could not be inverted; in-frustum content then uses `M`.
    pub n: Option<Mat3>,
    pub beta: f64,
    pub black_offset: Rgb,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
struct BundleFields {
    #[serde(rename = "M")]
    m: Mat3,
    #[serde(rename = "Q")]
    q: Mat3,
    #[serde(rename = "N")]
    n: Option<Mat3>,
    beta: f64,
    black_offset: Rgb,
    diagnostics: Diagnostics,
}

impl TryFrom<BundleFields> for CalibrationBundle {
    type Error = CalibrationError;

    fn try_from(f: BundleFields) -> Result<Self> {
        CalibrationBundle::new(f.m, f.q, f.n, f.beta, f.black_offset, f.diagnostics)
    }
}

impl From<CalibrationBundle> for BundleFields {
    fn from(b: CalibrationBundle) -> Self {
        BundleFields {
            m: b.m,
            q: b.q,
            n: b.n,
            beta: b.beta,
            black_offset: b.black_offset,
            diagnostics: b.diagnostics,
        }
    }
}

impl CalibrationBundle {
    pub fn new(
        m: Mat3,
        q: Mat3,
        n: Option<Mat3>,
        beta: f64,
        black_offset: Rgb,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        check_beta(beta)?;
        if !m.is_finite() || !q.is_finite() || n.is_some_and(|n| !n.is_finite()) {
            return Err(CalibrationError::Bundle("non-finite matrix entry".into()));
        }
        if black_offset.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CalibrationError::Bundle(format!(
                "black offset {black_offset:?} must be non-negative"
            )));
        }
        if let Some(n) = n {
            let sl = m
                .inverse()
                .ok_or_else(|| CalibrationError::Bundle("M is singular".into()))?;
            let err = (q * sl * n - Mat3::IDENTITY).max_abs();
            if !(err <= N_CONSISTENCY_TOLERANCE) {
                return Err(CalibrationError::Bundle(format!(
                    "N is inconsistent with M and Q (|Q·M⁻¹·N − I| = {err:e})"
                )));
            }
        }
        Ok(Self {
            m,
            q,
            n,
            beta,
            black_offset,
            diagnostics,
        })
    }

    /// The in-frustum matrix actually used: `N`, or `M` as fallback.
    pub fn n_effective(&self) -> Mat3 {
        self.n.unwrap_or(self.m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CalibrationBundle {
        let m = Mat3([[1.3, -0.2, 0.01], [-0.1, 1.2, -0.1], [0.0, -0.1, 1.1]]);
        let q = Mat3([[0.9, 0.05, 0.0], [0.02, 0.95, 0.03], [0.0, 0.04, 0.97]]);
        let n = m * q.inverse().unwrap();
        CalibrationBundle::new(m, q, Some(n), 0.311, [0.02, 0.03, 0.04], Diagnostics::default())
            .unwrap()
    }

    #[test]
    fn json_layout_and_round_trip() {
        let b = sample();
        let json = b.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["M", "Q", "N", "beta", "black_offset", "diagnostics"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["M"][0][1], serde_json::json!(-0.2));
        assert_eq!(CalibrationBundle::from_json(&json).unwrap(), b);
    }

    #[test]
    fn null_n_and_infinite_cond() {
        let mut b = sample();
        b.n = None;
        b.diagnostics.cond_q = f64::INFINITY;
        let json = b.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["N"].is_null());
        assert!(v["diagnostics"]["cond_q"].is_null());
        let back = CalibrationBundle::from_json(&json).unwrap();
        assert_eq!(back.diagnostics.cond_q, f64::INFINITY);
        assert_eq!(back.n_effective(), b.m);
    }

    #[test]
    fn rejects_bad_beta_and_inconsistent_n() {
        let b = sample();
        let json = b.to_json().replace("\"beta\": 0.311", "\"beta\": 0.0");
        assert!(CalibrationBundle::from_json(&json).is_err());
        assert!(CalibrationBundle::new(b.m, b.q, Some(b.m), 0.3, [0.0; 3], b.diagnostics).is_err());
        assert!(CalibrationBundle::new(b.m, b.q, None, 1.5, [0.0; 3], b.diagnostics).is_err());
        assert!(CalibrationBundle::new(b.m, b.q, None, 0.3, [-0.1, 0.0, 0.0], b.diagnostics).is_err());
    }
}
