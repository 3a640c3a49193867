use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentKind;
use super::LabError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How a metric is judged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// value <= tolerance.
    AtMost,
    /// value < tolerance.
    LessThan,
    /// Recorded, not asserted.
    Report,
}

/// What a passing metric establishes: an exact identity (up to round-off or
/// quadrature), agreement with an independent oracle, or an asymptotic trend
/// on a finite grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verification {
    #[serde(rename = "identity-verified")]
    Identity,
    #[serde(rename = "oracle-verified")]
    Oracle,
    #[serde(rename = "trend-verified")]
    Trend,
    Diagnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    /// `None` when the computation produced a non-finite number.
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub check: Check,
    pub verification: Verification,
    /// `None` for reported-only metrics.
    pub pass: Option<bool>,
}

impl Metric {
    pub fn checked(name: &str, value: f64, check: Check, tolerance: f64, verification: Verification) -> Self {
        let pass = value.is_finite()
            && match check {
                Check::AtMost => value <= tolerance,
                Check::LessThan => value < tolerance,
                Check::Report => true,
            };
        Metric {
            name: name.to_string(),
            value: value.is_finite().then_some(value),
            tolerance: Some(tolerance),
            check,
            verification,
            pass: Some(pass),
        }
    }

    pub fn reported(name: &str, value: f64) -> Self {
        Metric {
            name: name.to_string(),
            value: value.is_finite().then_some(value),
            tolerance: None,
            check: Check::Report,
            verification: Verification::Diagnostic,
            pass: None,
        }
    }
}

/// One grid point, or one trend over several grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub config_hash: String,
    pub seed: u64,
    pub params: BTreeMap<String, Value>,
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.metrics.iter().all(|m| m.pass != Some(false))
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub target_os: String,
    pub target_arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            target_os: std::env::consts::OS.to_string(),
            target_arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub environment: Environment,
    pub records: Vec<Record>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Builds records that share the report's provenance.
pub(crate) struct Recorder {
    hash: String,
    seed: u64,
    pub records: Vec<Record>,
}

impl Recorder {
    pub fn new(hash: String, seed: u64) -> Self {
        Recorder { hash, seed, records: Vec::new() }
    }

    /// Runs one grid point; an error is stored in the record.
    pub fn point<F>(&mut self, params: BTreeMap<String, Value>, f: F) -> Option<&Record>
    where
        F: FnOnce() -> Result<Vec<Metric>, LabError>,
    {
        let (metrics, error) = match f() {
            Ok(m) => (m, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        if let Some(e) = &error {
            log::warn!("grid point {} failed: {e}", serde_json::to_string(&params).unwrap_or_default());
        }
        self.records.push(Record { config_hash: self.hash.clone(), seed: self.seed, params, metrics, error });
        self.records.last()
    }
}

/// params! { "r" => 50.0, "n" => 1 }
macro_rules! params {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = std::collections::BTreeMap::<String, serde_json::Value>::new();
        $( m.insert($k.to_string(), serde_json::json!($v)); )*
        m
    }};
}
pub(crate) use params;

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(Record::passed)
    }

    /// The result data without environment metadata.
    pub fn data_json(&self) -> String {
        serde_json::to_string(&(&self.experiment_id, &self.kind, &self.config_hash, self.seed, &self.records))
            .expect("records serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let r: ExperimentReport = serde_json::from_str(text).map_err(|e| LabError::Report(e.to_string()))?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(LabError::Report(format!(
                "schema version {} (this build reads {REPORT_SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// One row per (grid point, metric): experiment_id, params_json, metric,
    /// value, tolerance, pass. A failed grid point gives a single `error` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LabError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| LabError::Io(e.to_string());
        w.write_record(["experiment_id", "params_json", "metric", "value", "tolerance", "pass"]).map_err(io)?;
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for rec in &self.records {
            let params = serde_json::to_string(&rec.params).expect("params serialize");
            if let Some(e) = &rec.error {
                w.write_record([self.experiment_id.as_str(), &params, "error", "", "", "false"]).map_err(io)?;
                log::debug!("error row: {e}");
                continue;
            }
            for m in &rec.metrics {
                let pass = m.pass.map(|p| p.to_string()).unwrap_or_default();
                w.write_record([
                    self.experiment_id.as_str(),
                    &params,
                    &m.name,
                    &num(m.value),
                    &num(m.tolerance),
                    &pass,
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| LabError::Io(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
