//! Circuit and compilation provenance records.
//!
//! A circuit's identity is the SHA-256 of its canonical text form: comment
//! lines (first non-blank characters are `//`) and blank lines are dropped,
//! each remaining line is trimmed, runs of interior whitespace collapse to a
//! single space, and lines are joined with `\n`. The same rule applies to
//! every format.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::validation::{Violation, Violations};
use crate::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CircuitFormat {
    #[serde(rename = "openqasm3-text")]
    OpenQasm3Text,
    #[serde(rename = "vendor-opaque")]
    VendorOpaque,
}

/// Canonical text form used for digesting.
pub fn canonicalize_circuit(source: &str) -> String {
    let mut lines = Vec::new();
    for line in source.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        lines.push(trimmed.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    lines.join("\n")
}

/// SHA-256 (lowercase hex) of the canonical form of `source`.
pub fn circuit_digest(source: &[u8], _format: CircuitFormat) -> Result<String, CoreError> {
    let text = std::str::from_utf8(source).map_err(|e| CoreError::Encoding {
        offset: e.valid_up_to(),
    })?;
    Ok(digest_text(text))
}

fn digest_text(text: &str) -> String {
    hex::encode(Sha256::digest(canonicalize_circuit(text).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub name: String,
    pub qubit_count: u32,
    pub depth: u32,
    #[serde(default)]
    pub gate_counts: BTreeMap<String, u64>,
    pub format: CircuitFormat,
    pub source: String,
    pub digest: String,
}

impl CircuitRecord {
    /// Build a record whose digest is computed from `source`.
    pub fn from_source(
        name: impl Into<String>,
        qubit_count: u32,
        depth: u32,
        gate_counts: BTreeMap<String, u64>,
        format: CircuitFormat,
        source: impl Into<String>,
    ) -> Self {
        let source = source.into();
        let digest = digest_text(&source);
        Self {
            name: name.into(),
            qubit_count,
            depth,
            gate_counts,
            format,
            source,
            digest,
        }
    }

    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        if self.qubit_count < 1 {
            out.push(Violation::new("qubit_count", "qubit_count ≥ 1"));
        }
        if !crate::is_sha256_hex(&self.digest) {
            out.push(Violation::new("digest", "64-char lowercase hex"));
        } else if digest_text(&self.source) != self.digest {
            out.push(Violation::new("digest", "digest matches canonical source"));
        }
        Violations::check(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompilationRecord {
    pub compiler_name: String,
    pub compiler_version: String,
    pub optimization_level: u32,
    pub input_digest: String,
    pub output_digest: String,
    #[serde(default)]
    pub qubit_mapping: BTreeMap<u32, u32>,
}

impl CompilationRecord {
    pub fn validate(&self) -> Result<(), Violations> {
        let mut out = Vec::new();
        if !crate::is_sha256_hex(&self.input_digest) {
            out.push(Violation::new("input_digest", "64-char lowercase hex"));
        }
        if !crate::is_sha256_hex(&self.output_digest) {
            out.push(Violation::new("output_digest", "64-char lowercase hex"));
        }
        let physical: BTreeSet<u32> = self.qubit_mapping.values().copied().collect();
        if physical.len() != self.qubit_mapping.len() {
            out.push(Violation::new("qubit_mapping", "qubit_mapping injective"));
        }
        Violations::check(out)
    }
}
