//! Domain model for qtrack: experiments, runs, metric points, and the
//! quantum provenance records (circuit, compilation, calibration, execution)
//! attached to runs.
//!
//! Every type here is an immutable value once constructed. The JSON form
//! produced by `serde` is the canonical on-disk and on-the-wire encoding.

pub mod calibration;
pub mod circuit;
pub mod execution;
pub mod ids;
pub mod run;
pub mod validation;

pub use calibration::{
    diff_calibration, generate_synthetic_calibration, validate_calibration, CalibrationDiff,
    CalibrationSet, GateCalibration, GateDelta, QubitCalibration, QubitDelta,
};
pub use circuit::{
    canonicalize_circuit, circuit_digest, CircuitFormat, CircuitRecord, CompilationRecord,
};
pub use execution::{validate_execution_record, ExecutionRecord};
pub use ids::{is_hex_id, is_sha256_hex, new_id, now_millis};
pub use run::{
    latest_metric, validate_experiment_name, validate_key, ArtifactRef, Experiment, Lifecycle,
    MetricPoint, ParamWrite, Provenance, Run, RunStatus, MAX_EXPERIMENT_NAME_BYTES, MAX_KEY_BYTES,
};
pub use validation::{Violation, Violations};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("source is not valid UTF-8 (first invalid byte at offset {offset})")]
    Encoding { offset: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("param {key:?} already set to {existing:?}, refusing {attempted:?}")]
    ParamConflict {
        key: String,
        existing: String,
        attempted: String,
    },
    #[error(transparent)]
    Invalid(#[from] Violations),
}
