//! Device calibration snapshots, their validation, diffing, and a seeded
//! generator for synthetic fixtures.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::validation::{Violation, Violations};
use crate::CoreError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub qubit_index: u32,
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCalibration {
    pub gate_name: String,
    pub qubit_indices: Vec<u32>,
    pub fidelity: f64,
}

/// Snapshot of device quality keyed by `calibration_set_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub calibration_set_id: String,
    pub device_name: String,
    pub qubit_count: u32,
    pub timestamp: i64,
    pub qubits: Vec<QubitCalibration>,
    #[serde(default)]
    pub gates: Vec<GateCalibration>,
}

fn is_fidelity(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

fn is_positive_time(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

pub fn validate_calibration(set: &CalibrationSet) -> Result<(), Violations> {
    let mut out = Vec::new();
    if set.calibration_set_id.is_empty() {
        out.push(Violation::new("calibration_set_id", "calibration_set_id non-empty"));
    }
    if set.qubit_count < 1 {
        out.push(Violation::new("qubit_count", "qubit_count ≥ 1"));
    }
    if set.qubits.len() != set.qubit_count as usize {
        out.push(Violation::new(
            "qubits",
            format!(
                "exactly qubit_count per-qubit records ({} ≠ {})",
                set.qubits.len(),
                set.qubit_count
            ),
        ));
    }
    let mut seen = BTreeSet::new();
    for (i, q) in set.qubits.iter().enumerate() {
        let field = |name: &str| format!("qubits[{i}].{name}");
        if !seen.insert(q.qubit_index) {
            out.push(Violation::new(field("qubit_index"), "distinct indices"));
        }
        if q.qubit_index >= set.qubit_count {
            out.push(Violation::new(field("qubit_index"), "index in 0..qubit_count"));
        }
        if !is_positive_time(q.t1_us) {
            out.push(Violation::new(field("t1_us"), "t1_us > 0"));
        }
        if !is_positive_time(q.t2_us) {
            out.push(Violation::new(field("t2_us"), "t2_us > 0"));
        }
        if !is_fidelity(q.readout_fidelity) {
            out.push(Violation::new(field("readout_fidelity"), "fidelity in (0,1]"));
        }
    }
    for (i, g) in set.gates.iter().enumerate() {
        if !is_fidelity(g.fidelity) {
            out.push(Violation::new(format!("gates[{i}].fidelity"), "fidelity in (0,1]"));
        }
        if g.qubit_indices.is_empty() || g.qubit_indices.iter().any(|&q| q >= set.qubit_count) {
            out.push(Violation::new(
                format!("gates[{i}].qubit_indices"),
                "gate qubits in 0..qubit_count",
            ));
        }
    }
    Violations::check(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitDelta {
    pub qubit_index: u32,
    pub d_t1_us: f64,
    pub d_t2_us: f64,
    pub d_readout_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDelta {
    pub gate_name: String,
    pub qubit_indices: Vec<u32>,
    pub d_fidelity: f64,
}

/// `other − base` for every qubit and gate both sets share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDiff {
    pub base_id: String,
    pub other_id: String,
    pub qubit_deltas: Vec<QubitDelta>,
    pub gate_deltas: Vec<GateDelta>,
    pub added_qubits: Vec<u32>,
    pub removed_qubits: Vec<u32>,
}

impl CalibrationDiff {
    pub fn is_zero(&self) -> bool {
        self.added_qubits.is_empty()
            && self.removed_qubits.is_empty()
            && self
                .qubit_deltas
                .iter()
                .all(|d| d.d_t1_us == 0.0 && d.d_t2_us == 0.0 && d.d_readout_fidelity == 0.0)
            && self.gate_deltas.iter().all(|d| d.d_fidelity == 0.0)
    }
}

pub fn diff_calibration(base: &CalibrationSet, other: &CalibrationSet) -> CalibrationDiff {
    let base_qubits: BTreeMap<u32, &QubitCalibration> =
        base.qubits.iter().map(|q| (q.qubit_index, q)).collect();
    let other_qubits: BTreeMap<u32, &QubitCalibration> =
        other.qubits.iter().map(|q| (q.qubit_index, q)).collect();

    let qubit_deltas = base_qubits
        .iter()
        .filter_map(|(idx, b)| {
            other_qubits.get(idx).map(|o| QubitDelta {
                qubit_index: *idx,
                d_t1_us: o.t1_us - b.t1_us,
                d_t2_us: o.t2_us - b.t2_us,
                d_readout_fidelity: o.readout_fidelity - b.readout_fidelity,
            })
        })
        .collect();
    let added_qubits = other_qubits
        .keys()
        .filter(|idx| !base_qubits.contains_key(idx))
        .copied()
        .collect();
    let removed_qubits = base_qubits
        .keys()
        .filter(|idx| !other_qubits.contains_key(idx))
        .copied()
        .collect();

    let gate_key = |g: &GateCalibration| (g.gate_name.clone(), g.qubit_indices.clone());
    let base_gates: BTreeMap<_, f64> = base.gates.iter().map(|g| (gate_key(g), g.fidelity)).collect();
    let other_gates: BTreeMap<_, f64> = other.gates.iter().map(|g| (gate_key(g), g.fidelity)).collect();
    let gate_deltas = base_gates
        .iter()
        .filter_map(|(key, b)| {
            other_gates.get(key).map(|o| GateDelta {
                gate_name: key.0.clone(),
                qubit_indices: key.1.clone(),
                d_fidelity: o - b,
            })
        })
        .collect();

    CalibrationDiff {
        base_id: base.calibration_set_id.clone(),
        other_id: other.calibration_set_id.clone(),
        qubit_deltas,
        gate_deltas,
        added_qubits,
        removed_qubits,
    }
}

const SYNTHETIC_NAMESPACE: Uuid = Uuid::from_u128(0x6f1c_3f0e_8a4b_4d7e_9b52_2c1d_a0e4_7b93);
// 2024-01-01T00:00:00Z
const SYNTHETIC_EPOCH_MS: i64 = 1_704_067_200_000;

/// Deterministic calibration snapshot for `(seed, n_qubits)`.
///
/// T1 is uniform in [20, 200] µs, T2 is T1 scaled by a factor in [0.2, 2],
/// and every fidelity is uniform in [0.90, 0.9999]. Gates are a `prx` per
/// qubit and a `cz` on each neighbouring pair of a linear chain.
pub fn generate_synthetic_calibration(seed: u64, n_qubits: u32) -> Result<CalibrationSet, CoreError> {
    if n_qubits < 1 {
        return Err(CoreError::Argument("n_qubits must be ≥ 1".into()));
    }
    let mut seed_bytes = [0u8; 32];
    seed_bytes[..8].copy_from_slice(&seed.to_le_bytes());
    seed_bytes[8..12].copy_from_slice(&n_qubits.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(seed_bytes);

    let qubits = (0..n_qubits)
        .map(|qubit_index| {
            let t1_us = rng.random_range(20.0..=200.0);
            let t2_us = t1_us * rng.random_range(0.2..=2.0);
            QubitCalibration {
                qubit_index,
                t1_us,
                t2_us,
                readout_fidelity: rng.random_range(0.90..=0.9999),
            }
        })
        .collect();

    let mut gates = Vec::new();
    for q in 0..n_qubits {
        gates.push(GateCalibration {
            gate_name: "prx".into(),
            qubit_indices: vec![q],
            fidelity: rng.random_range(0.90..=0.9999),
        });
    }
    for q in 1..n_qubits {
        gates.push(GateCalibration {
            gate_name: "cz".into(),
            qubit_indices: vec![q - 1, q],
            fidelity: rng.random_range(0.90..=0.9999),
        });
    }

    let id = Uuid::new_v5(
        &SYNTHETIC_NAMESPACE,
        format!("synthetic-calibration:{seed}:{n_qubits}").as_bytes(),
    );
    Ok(CalibrationSet {
        calibration_set_id: id.to_string(),
        device_name: format!("synthetic-{n_qubits}q"),
        qubit_count: n_qubits,
        timestamp: SYNTHETIC_EPOCH_MS + (seed % 1_000_000) as i64 * 60_000,
        qubits,
        gates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_qubit_fixture() {
        let set = generate_synthetic_calibration(7, 50).unwrap();
        assert_eq!(set.qubits.len(), 50);
        assert_eq!(set.qubit_count, 50);
        assert!(validate_calibration(&set).is_ok());
        for q in &set.qubits {
            assert!((20.0..=200.0).contains(&q.t1_us));
            assert!(q.t2_us <= 2.0 * q.t1_us);
            assert!((0.90..=0.9999).contains(&q.readout_fidelity));
        }
        assert!(set.gates.iter().all(|g| (0.90..=0.9999).contains(&g.fidelity)));
        assert!(Uuid::parse_str(&set.calibration_set_id).is_ok());
    }

    #[test]
    fn generator_is_deterministic() {
        let a = serde_json::to_vec(&generate_synthetic_calibration(3, 12).unwrap()).unwrap();
        let b = serde_json::to_vec(&generate_synthetic_calibration(3, 12).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_calibration(4, 12).unwrap();
        assert_ne!(serde_json::to_vec(&c).unwrap(), a);
    }

    #[test]
    fn zero_qubits_is_argument_error() {
        assert!(matches!(
            generate_synthetic_calibration(1, 0),
            Err(CoreError::Argument(_))
        ));
    }

    #[test]
    fn bad_fidelity_and_duplicates() {
        let mut set = generate_synthetic_calibration(1, 3).unwrap();
        set.qubits[1].readout_fidelity = 1.2;
        let err = validate_calibration(&set).unwrap_err();
        assert_eq!(err.0[0].rule, "fidelity in (0,1]");
        assert_eq!(err.0[0].field, "qubits[1].readout_fidelity");

        let mut set = generate_synthetic_calibration(1, 3).unwrap();
        set.qubits[2].qubit_index = 0;
        let rules: Vec<_> = validate_calibration(&set).unwrap_err().0.into_iter().map(|v| v.rule).collect();
        assert!(rules.contains(&"distinct indices".to_string()));
    }

    #[test]
    fn fidelity_boundaries() {
        let mut set = generate_synthetic_calibration(1, 1).unwrap();
        set.qubits[0].readout_fidelity = 1.0;
        assert!(validate_calibration(&set).is_ok());
        set.qubits[0].readout_fidelity = 0.0;
        assert!(validate_calibration(&set).is_err());
        set.qubits[0].readout_fidelity = f64::NAN;
        assert!(validate_calibration(&set).is_err());
    }

    #[test]
    fn diff_identity_and_arithmetic() {
        let a = generate_synthetic_calibration(9, 5).unwrap();
        let d = diff_calibration(&a, &a);
        assert!(d.is_zero());
        assert_eq!(d.qubit_deltas.len(), 5);

        let mut base = a.clone();
        let mut other = a.clone();
        base.qubits[0].t1_us = 100.0;
        other.qubits[0].t1_us = 90.0;
        let d = diff_calibration(&base, &other);
        assert_eq!(d.qubit_deltas[0].d_t1_us, -10.0);
    }

    #[test]
    fn diff_added_and_removed() {
        let small = generate_synthetic_calibration(2, 2).unwrap();
        let big = generate_synthetic_calibration(2, 3).unwrap();
        let d = diff_calibration(&small, &big);
        assert_eq!(d.added_qubits, vec![2]);
        assert!(d.removed_qubits.is_empty());
        let r = diff_calibration(&big, &small);
        assert_eq!(r.removed_qubits, vec![2]);
        assert!(r.added_qubits.is_empty());
    }
}
