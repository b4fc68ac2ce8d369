//! Versioned JSON report and CSV sweep output.

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::problem::Complex;

pub const SCHEMA_VERSION: &str = "usd-embed/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub command: String,
    pub seed: u64,
    /// Factor applied to the default tolerance bundle.
    pub tolerance_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputEcho>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub singular_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Costs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<AncillaDims>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomEcho>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cost_sweep: Vec<CostRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atom_sweep: Vec<AtomRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub dim: usize,
    pub states: Vec<Vec<Complex>>,
    pub probs: Vec<f64>,
    pub priors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub spectral: f64,
    pub hilbert_schmidt: f64,
    /// `spectral` or `hs`.
    pub norm: String,
    pub selected: f64,
    /// `1 - s_min²`.
    pub max_transfer_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncillaDims {
    pub canonical: usize,
    pub reduced: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementStats {
    pub trials: u64,
    pub conclusive: Vec<u64>,
    pub inconclusive: u64,
    pub errors: u64,
    pub inconclusive_frequency: f64,
    pub expected_inconclusive: f64,
    pub sigma: f64,
    /// Absent when the expected rate is exactly 0 or 1 and the observed one differs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomEcho {
    pub levels: [f64; 3],
    pub dipoles: [Complex; 2],
    pub max_amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub overlap: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub overlap: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl ReportFile {
    pub fn new(command: &str, seed: u64, tolerance_scale: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: command.into(),
            seed,
            tolerance_scale,
            inputs: None,
            singular_values: Vec::new(),
            costs: None,
            ancilla: None,
            measurement: None,
            atom: None,
            cost_sweep: Vec::new(),
            atom_sweep: Vec::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn push_check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Pretty JSON. Fails if any number is non-finite, since JSON would
    /// silently turn it into `null`.
    pub fn to_json(&self) -> Result<String, CliError> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Validation(e.to_string()))?;
        if let Some(path) = find_null(&value, String::new()) {
            return Err(CliError::Validation(format!("report field {path} is not finite")));
        }
        serde_json::to_string_pretty(&value).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let report: Self = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("report: {e}")))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "report: unsupported schema_version {:?}",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Sweep rows as CSV, if the report has any.
    pub fn csv(&self) -> Result<Option<String>, CliError> {
        if !self.atom_sweep.is_empty() {
            to_csv(&self.atom_sweep).map(Some)
        } else if !self.cost_sweep.is_empty() {
            to_csv(&self.cost_sweep).map(Some)
        } else {
            Ok(None)
        }
    }
}

fn find_null(v: &serde_json::Value, path: String) -> Option<String> {
    use serde_json::Value;
    match v {
        Value::Null => Some(path),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, x)| find_null(x, format!("{path}[{i}]"))),
        Value::Object(map) => map.iter().find_map(|(k, x)| {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            find_null(x, p)
        }),
        _ => None,
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Validation(e.to_string()))
}
