use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationSet;
use crate::circuit::{CircuitRecord, CompilationRecord};
use crate::execution::ExecutionRecord;
use crate::validation::{Violation, Violations};
use crate::CoreError;

pub const MAX_EXPERIMENT_NAME_BYTES: usize = 500;
pub const MAX_KEY_BYTES: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lifecycle {
    Active,
    Deleted,
}

/// A named collection of runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment {
    pub experiment_id: String,
    pub name: String,
    pub creation_time: i64,
    pub lifecycle: Lifecycle,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

impl Experiment {
    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        if !crate::is_hex_id(&self.experiment_id) {
            out.push(Violation::new("experiment_id", "32-char lowercase hex"));
        }
        out.extend(validate_experiment_name(&self.name).err().into_iter().flat_map(|v| v.0));
        if self.creation_time <= 0 {
            out.push(Violation::new("creation_time", "creation_time > 0"));
        }
        Violations::check(out)
    }
}

pub fn validate_experiment_name(name: &str) -> Result<(), Violations> {
    let mut out = Vec::new();
    if name.is_empty() {
        out.push(Violation::new("name", "name non-empty"));
    } else if name.len() > MAX_EXPERIMENT_NAME_BYTES {
        out.push(Violation::new("name", "name ≤ 500 bytes"));
    }
    Violations::check(out)
}

/// Param, tag and metric keys: non-empty and at most 250 bytes.
pub fn validate_key(field: &str, key: &str) -> Result<(), Violations> {
    if key.is_empty() {
        Err(Violations(vec![Violation::new(field, "key non-empty")]))
    } else if key.len() > MAX_KEY_BYTES {
        Err(Violations(vec![Violation::new(field, "key ≤ 250 bytes")]))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Running,
    Finished,
    Failed,
    Killed,
}

impl RunStatus {
    pub fn is_terminal(self) -> bool {
        self != RunStatus::Running
    }

    /// Only RUNNING may move, and only to a terminal state.
    pub fn can_transition_to(self, next: RunStatus) -> bool {
        self == RunStatus::Running && next.is_terminal()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Running => "RUNNING",
            RunStatus::Finished => "FINISHED",
            RunStatus::Failed => "FAILED",
            RunStatus::Killed => "KILLED",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "RUNNING" => Ok(RunStatus::Running),
            "FINISHED" => Ok(RunStatus::Finished),
            "FAILED" => Ok(RunStatus::Failed),
            "KILLED" => Ok(RunStatus::Killed),
            other => Err(CoreError::Argument(format!("unknown run status {other:?}"))),
        }
    }
}

/// One logged metric value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub key: String,
    pub value: f64,
    pub timestamp: i64,
    #[serde(default)]
    pub step: i64,
}

impl MetricPoint {
    pub fn new(key: impl Into<String>, value: f64, timestamp: i64, step: i64) -> Result<Self, Violations> {
        let point = Self {
            key: key.into(),
            value,
            timestamp,
            step,
        };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        if let Err(v) = validate_key("key", &self.key) {
            out.extend(v.0);
        }
        if !self.value.is_finite() {
            out.push(Violation::new("value", "value is finite"));
        }
        Violations::check(out)
    }

    /// Total order used to pick the latest point: step, then timestamp, then value.
    pub fn latest_order(&self, other: &Self) -> Ordering {
        self.step
            .cmp(&other.step)
            .then(self.timestamp.cmp(&other.timestamp))
            .then(self.value.total_cmp(&other.value))
    }
}

/// The point that is maximal under [`MetricPoint::latest_order`].
pub fn latest_metric(points: &[MetricPoint]) -> Option<&MetricPoint> {
    points.iter().max_by(|a, b| a.latest_order(b))
}

/// Handle to artifact bytes stored under their SHA-256.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub run_id: String,
    pub path: String,
    pub sha256: String,
    pub size_bytes: u64,
    pub media_type: String,
}

/// Provenance records attached to a run, one slot per category.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compilation: Option<CompilationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionRecord>,
}

impl Provenance {
    pub fn is_empty(&self) -> bool {
        self.circuit.is_none()
            && self.compilation.is_none()
            && self.calibration.is_none()
            && self.execution.is_none()
    }

    /// Validate every present record; field names are prefixed with the category.
    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        if let Some(Err(v)) = self.circuit.as_ref().map(|c| c.validate()) {
            out.extend(v.scoped("circuit").0);
        }
        if let Some(Err(v)) = self.compilation.as_ref().map(|c| c.validate()) {
            out.extend(v.scoped("compilation").0);
        }
        if let Some(Err(v)) = self.calibration.as_ref().map(crate::validate_calibration) {
            out.extend(v.scoped("calibration").0);
        }
        if let Some(Err(v)) = self.execution.as_ref().map(crate::validate_execution_record) {
            out.extend(v.scoped("execution").0);
        }
        Violations::check(out)
    }

    /// Overwrite each category present in `update`.
    pub fn merge(&mut self, update: Provenance) {
        if update.circuit.is_some() {
            self.circuit = update.circuit;
        }
        if update.compilation.is_some() {
            self.compilation = update.compilation;
        }
        if update.calibration.is_some() {
            self.calibration = update.calibration;
        }
        if update.execution.is_some() {
            self.execution = update.execution;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamWrite {
    Inserted,
    Unchanged,
}

/// Unit of tracked work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub run_id: String,
    pub experiment_id: String,
    pub status: RunStatus,
    pub start_time: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<i64>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
    #[serde(default)]
    pub metrics: BTreeMap<String, Vec<MetricPoint>>,
    #[serde(default)]
    pub artifacts: Vec<ArtifactRef>,
    #[serde(default, skip_serializing_if = "Provenance::is_empty")]
    pub provenance: Provenance,
}

impl Run {
    /// A fresh RUNNING run with no data.
    pub fn new(run_id: String, experiment_id: String, start_time: i64) -> Self {
        Self {
            run_id,
            experiment_id,
            status: RunStatus::Running,
            start_time,
            end_time: None,
            params: BTreeMap::new(),
            tags: BTreeMap::new(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
            provenance: Provenance::default(),
        }
    }

    /// Write-once param semantics: equal value is a no-op, a different one conflicts.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<ParamWrite, CoreError> {
        validate_key("key", key)?;
        match self.params.get(key) {
            Some(existing) if existing == value => Ok(ParamWrite::Unchanged),
            Some(existing) => Err(CoreError::ParamConflict {
                key: key.to_string(),
                existing: existing.clone(),
                attempted: value.to_string(),
            }),
            None => {
                self.params.insert(key.to_string(), value.to_string());
                Ok(ParamWrite::Inserted)
            }
        }
    }

    pub fn latest_metric(&self, key: &str) -> Option<&MetricPoint> {
        self.metrics.get(key).and_then(|points| latest_metric(points))
    }

    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        if !crate::is_hex_id(&self.run_id) {
            out.push(Violation::new("run_id", "32-char lowercase hex"));
        }
        if !crate::is_hex_id(&self.experiment_id) {
            out.push(Violation::new("experiment_id", "32-char lowercase hex"));
        }
        match (self.status, self.end_time) {
            (RunStatus::Running, Some(_)) => {
                out.push(Violation::new("end_time", "end_time absent while RUNNING"))
            }
            (_, Some(end)) if end < self.start_time => {
                out.push(Violation::new("end_time", "end_time ≥ start_time"))
            }
            _ => {}
        }
        for key in self.params.keys() {
            if let Err(v) = validate_key("params", key) {
                out.extend(v.0);
            }
        }
        for key in self.tags.keys() {
            if let Err(v) = validate_key("tags", key) {
                out.extend(v.0);
            }
        }
        for (key, points) in &self.metrics {
            for p in points {
                if p.key != *key {
                    out.push(Violation::new(format!("metrics.{key}"), "point key matches history key"));
                }
                if let Err(v) = p.validate() {
                    out.extend(v.scoped(&format!("metrics.{key}")).0);
                }
            }
        }
        for (i, a) in self.artifacts.iter().enumerate() {
            if a.run_id != self.run_id {
                out.push(Violation::new(format!("artifacts[{i}].run_id"), "artifact belongs to run"));
            }
            if i > 0 && self.artifacts[i - 1].path >= a.path {
                out.push(Violation::new("artifacts", "paths unique and sorted"));
            }
        }
        if let Err(v) = self.provenance.validate() {
            out.extend(v.scoped("provenance").0);
        }
        Violations::check(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run() -> Run {
        Run::new(crate::new_id(), crate::new_id(), 1_000)
    }

    #[test]
    fn param_rewrite_semantics() {
        let mut r = run();
        assert_eq!(r.set_param("shots", "500").unwrap(), ParamWrite::Inserted);
        assert_eq!(r.set_param("shots", "500").unwrap(), ParamWrite::Unchanged);
        let err = r.set_param("shots", "600").unwrap_err();
        assert!(matches!(err, CoreError::ParamConflict { .. }));
        assert_eq!(r.params["shots"], "500");
    }

    #[test]
    fn status_transitions() {
        use RunStatus::*;
        for next in [Finished, Failed, Killed] {
            assert!(Running.can_transition_to(next));
            assert!(!next.can_transition_to(Running));
            assert!(!next.can_transition_to(Finished));
        }
        assert!(!Running.can_transition_to(Running));
    }

    #[test]
    fn metric_point_rejects_non_finite() {
        assert!(MetricPoint::new("fidelity", f64::NAN, 1, 0).is_err());
        assert!(MetricPoint::new("fidelity", f64::INFINITY, 1, 0).is_err());
        assert!(MetricPoint::new("fidelity", f64::NEG_INFINITY, 1, 0).is_err());
        assert!(MetricPoint::new("", 1.0, 1, 0).is_err());
        assert!(MetricPoint::new("k".repeat(251), 1.0, 1, 0).is_err());
        assert!(MetricPoint::new("k".repeat(250), 1.0, 1, 0).is_ok());
    }

    #[test]
    fn latest_metric_orders_by_step_then_timestamp_then_value() {
        let p = |v, ts, step| MetricPoint::new("m", v, ts, step).unwrap();
        let pts = vec![p(9.0, 50, 0), p(1.0, 10, 2), p(3.0, 20, 2), p(2.0, 20, 2)];
        assert_eq!(latest_metric(&pts).unwrap().value, 3.0);
        assert!(latest_metric(&[]).is_none());
    }

    #[test]
    fn canonical_json_field_names() {
        let mut r = run();
        r.params.insert("shots".into(), "500".into());
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let obj = v.as_object().unwrap();
        for field in ["run_id", "experiment_id", "status", "start_time", "params", "tags", "metrics", "artifacts"] {
            assert!(obj.contains_key(field), "{field}");
        }
        assert!(!obj.contains_key("end_time"));
        assert_eq!(obj["status"], "RUNNING");
        let back: Run = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn run_validate_catches_time_order() {
        let mut r = run();
        r.status = RunStatus::Finished;
        r.end_time = Some(999);
        assert!(r.validate().is_err());
        r.end_time = Some(1_000);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn experiment_name_bounds() {
        assert!(validate_experiment_name("").is_err());
        assert!(validate_experiment_name(&"x".repeat(501)).is_err());
        assert!(validate_experiment_name("Qx VTT Demo for QCE").is_ok());
    }
}
