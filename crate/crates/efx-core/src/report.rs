//! Machine-readable reports with a reproducibility contract.
//!
//! Every real number in a report is serialized as a decimal string with 17
//! significant digits, which round-trips any finite f64 exactly. Maps use
//! sorted keys. The report digest is a SHA-256 over the canonical body,
//! which excludes the wall-clock timestamp, so re-running the same inputs
//! with the same seed reproduces the digest and the body bytes.

use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkers::{ModulusCurve, SecondOrderTable};
use crate::error::{EfxError, Result};

/// An f64 that serializes as a 17-significant-digit decimal string.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Real(pub f64);

/// Renders with 17 significant digits, enough to reproduce the exact bits on
/// parse.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real(x)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_real(self.0))
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_real(self.0))
    }
}

struct RealVisitor;

impl Visitor<'_> for RealVisitor {
    type Value = Real;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a decimal string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
        Ok(Real(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
        Ok(Real(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
        Ok(Real(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
        match v {
            "inf" | "+inf" => Ok(Real(f64::INFINITY)),
            "-inf" => Ok(Real(f64::NEG_INFINITY)),
            "NaN" => Ok(Real(f64::NAN)),
            _ => v
                .parse::<f64>()
                .map(Real)
                .map_err(|_| E::custom(format!("not a decimal number: {v}"))),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Real, D::Error> {
        deserializer.deserialize_any(RealVisitor)
    }
}

/// Outcome of one analysis in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisOutcome {
    /// The asserted property holds.
    Pass,
    /// The asserted property fails; the process exit code becomes 1.
    Fail,
    /// A stated hypothesis of the check does not hold for these inputs.
    NotApplicable,
    /// A computation without an assertion attached.
    Info,
}

/// One executed analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub index: usize,
    pub analysis: String,
    pub outcome: AnalysisOutcome,
    /// Analysis-specific payload; keys are sorted on serialization.
    pub details: serde_json::Value,
}

/// Pass/fail tallies over a report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
    pub info: usize,
}

/// A full toolkit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub toolkit_version: String,
    pub scenario_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub analyses: Vec<AnalysisResult>,
    pub summary: Summary,
    pub report_digest: String,
    pub generated_at: u64,
}

#[derive(Serialize)]
struct BodyView<'a> {
    toolkit_version: &'a str,
    scenario_digest: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: &'a Option<u64>,
    analyses: &'a [AnalysisResult],
    summary: &'a Summary,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Report {
    pub fn assemble(
        scenario_digest: String,
        seed: Option<u64>,
        analyses: Vec<AnalysisResult>,
    ) -> Report {
        let mut summary = Summary::default();
        for a in &analyses {
            match a.outcome {
                AnalysisOutcome::Pass => summary.passed += 1,
                AnalysisOutcome::Fail => summary.failed += 1,
                AnalysisOutcome::NotApplicable => summary.not_applicable += 1,
                AnalysisOutcome::Info => summary.info += 1,
            }
        }
        let mut report = Report {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario_digest,
            seed,
            analyses,
            summary,
            report_digest: String::new(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        report.report_digest = format!("sha256:{}", sha256_hex(report.body_json().as_bytes()));
        report
    }

    /// Canonical serialization of everything the digest covers (no
    /// timestamp, no digest field).
    pub fn body_json(&self) -> String {
        let body = BodyView {
            toolkit_version: &self.toolkit_version,
            scenario_digest: &self.scenario_digest,
            seed: &self.seed,
            analyses: &self.analyses,
            summary: &self.summary,
        };
        serde_json::to_string_pretty(&body).expect("report serialization cannot fail")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Report> {
        serde_json::from_slice(bytes)
            .map_err(|e| EfxError::Scenario(format!("report does not parse: {e}")))
    }

    pub fn all_assertions_pass(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Curve payload embedded in analysis details.
pub fn curve_to_json(curve: &ModulusCurve) -> serde_json::Value {
    serde_json::Value::Array(
        curve
            .breakpoints()
            .iter()
            .map(|&(k, v)| {
                serde_json::Value::Array(vec![
                    serde_json::Value::String(format_real(k)),
                    serde_json::Value::String(format_real(v)),
                ])
            })
            .collect(),
    )
}

/// Table payload for a two-parameter modulus.
pub fn table_to_json(table: &SecondOrderTable) -> serde_json::Value {
    let axis = |v: &[f64]| {
        serde_json::Value::Array(
            v.iter()
                .map(|&x| serde_json::Value::String(format_real(x)))
                .collect(),
        )
    };
    let mut obj = serde_json::Map::new();
    obj.insert("eps0".into(), axis(&table.eps0));
    obj.insert("eps1".into(), axis(&table.eps1));
    obj.insert(
        "values".into(),
        serde_json::Value::Array(
            table
                .values
                .iter()
                .map(|row| axis(row))
                .collect(),
        ),
    );
    serde_json::Value::Object(obj)
}

/// Renders one modulus curve as CSV: an `epsilon,value` header, a leading
/// zero row when the curve starts above zero (the empty-set convention), and
/// one row per breakpoint, all at 17 significant digits.
pub fn curve_csv(breakpoints: &[(f64, f64)]) -> String {
    let mut out = String::from("epsilon,value\n");
    if let Some(&(first, _)) = breakpoints.first() {
        if first > 0.0 {
            out.push_str(&format!("{},{}\n", format_real(0.0), format_real(0.0)));
        }
    }
    for &(k, v) in breakpoints {
        out.push_str(&format!("{},{}\n", format_real(k), format_real(v)));
    }
    out
}

/// Extracts every curve payload from a parsed report as
/// `(file stem, csv content)` pairs, in report order.
pub fn extract_curves(report: &Report) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for result in &report.analyses {
        let serde_json::Value::Object(map) = &result.details else {
            continue;
        };
        for (key, value) in map {
            if let Some(points) = parse_curve_value(value) {
                let stem = format!("{:03}_{}_{}", result.index, result.analysis, key);
                out.push((stem, curve_csv(&points)));
            }
        }
    }
    out
}

fn parse_curve_value(value: &serde_json::Value) -> Option<Vec<(f64, f64)>> {
    let serde_json::Value::Array(rows) = value else {
        return None;
    };
    if rows.is_empty() {
        return None;
    }
    let mut points = Vec::with_capacity(rows.len());
    for row in rows {
        let serde_json::Value::Array(pair) = row else {
            return None;
        };
        if pair.len() != 2 {
            return None;
        }
        let (serde_json::Value::String(a), serde_json::Value::String(b)) = (&pair[0], &pair[1])
        else {
            return None;
        };
        points.push((a.parse().ok()?, b.parse().ok()?));
    }
    Some(points)
}
