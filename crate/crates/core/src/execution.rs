use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::validation::{Violation, Violations};

/// Shots, measured counts histogram and the backend that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
    pub backend_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_set_id: Option<String>,
    pub submitted_at: i64,
    pub completed_at: i64,
}

impl ExecutionRecord {
    /// Construct and validate in one step.
    pub fn new(
        shots: u64,
        counts: BTreeMap<String, u64>,
        backend_name: impl Into<String>,
        calibration_set_id: Option<String>,
        submitted_at: i64,
        completed_at: i64,
    ) -> Result<Self, Violations> {
        let rec = Self {
            shots,
            counts,
            backend_name: backend_name.into(),
            calibration_set_id,
            submitted_at,
            completed_at,
        };
        validate_execution_record(&rec)?;
        Ok(rec)
    }
}

pub fn validate_execution_record(rec: &ExecutionRecord) -> Result<(), Violations> {
    let mut out = Vec::new();
    if rec.shots < 1 {
        out.push(Violation::new("shots", "shots ≥ 1"));
    }
    let sum: u128 = rec.counts.values().map(|&c| c as u128).sum();
    if sum != rec.shots as u128 {
        out.push(Violation::new(
            "counts",
            format!("counts sum {sum} ≠ shots {}", rec.shots),
        ));
    }
    if rec.counts.keys().any(|k| k.is_empty() || !k.bytes().all(|b| b == b'0' || b == b'1')) {
        out.push(Violation::new("counts", "bitstring keys drawn from {0,1}"));
    }
    let mut lengths = rec.counts.keys().map(|k| k.len());
    if let Some(first) = lengths.next() {
        if lengths.any(|l| l != first) {
            out.push(Violation::new("counts", "bitstring keys share one length"));
        }
    }
    if rec.backend_name.is_empty() {
        out.push(Violation::new("backend_name", "backend_name non-empty"));
    }
    if matches!(&rec.calibration_set_id, Some(id) if id.is_empty()) {
        out.push(Violation::new("calibration_set_id", "calibration_set_id non-empty"));
    }
    if rec.completed_at < rec.submitted_at {
        out.push(Violation::new("completed_at", "completed_at ≥ submitted_at"));
    }
    Violations::check(out)
}
