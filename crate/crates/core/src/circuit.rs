//! Flat gate lists produced by lowering, consumed by the passes and backends.
//!
//! The serde form of [`Circuit`] is the portable interchange format used by
//! `export`, the artifact dumps and the external adapter:
//! `{"n": 2, "ops": [{"gate": "h", "qubits": [0]}, {"gate": "rx", "angle": 0.5, "qubits": [1]}]}`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gate::GateKind;

/// Upper bound on register width for programs and circuits.
pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Op {
    pub gate: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    pub qubits: Vec<usize>,
}

impl Op {
    pub fn new(gate: GateKind, qubits: &[usize]) -> Self {
        Op { gate, angle: None, qubits: qubits.to_vec() }
    }

    pub fn rot(gate: GateKind, angle: f64, qubits: &[usize]) -> Self {
        Op { gate, angle: Some(angle), qubits: qubits.to_vec() }
    }

    pub fn touches(&self, q: usize) -> bool {
        self.qubits.contains(&q)
    }

    pub fn shares_qubit(&self, other: &Op) -> bool {
        self.qubits.iter().any(|q| other.touches(*q))
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.gate)?;
        if let Some(a) = self.angle {
            write!(f, "({a})")?;
        }
        for (i, q) in self.qubits.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}q[{q}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    #[serde(rename = "n")]
    pub qubit_count: usize,
    pub ops: Vec<Op>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("op {index}: {gate} expects {expected} qubits, got {found}")]
    Arity { index: usize, gate: GateKind, expected: usize, found: usize },
    #[error("op {index}: {gate} angle presence mismatch")]
    Angle { index: usize, gate: GateKind },
    #[error("op {index}: angle is not finite")]
    NonFiniteAngle { index: usize },
    #[error("op {index}: qubit {qubit} out of range for {qubit_count} qubits")]
    QubitOutOfRange { index: usize, qubit: usize, qubit_count: usize },
    #[error("op {index}: {gate} repeats a qubit operand")]
    OperandConflict { index: usize, gate: GateKind },
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Self {
        Circuit { qubit_count, ops: Vec::new() }
    }

    pub fn with_ops(qubit_count: usize, ops: Vec<Op>) -> Self {
        Circuit { qubit_count, ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: Op) {
        self.ops.push(op);
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.qubit_count == 0 || self.qubit_count > MAX_QUBITS {
            return Err(CircuitError::QubitCount(self.qubit_count));
        }
        for (index, op) in self.ops.iter().enumerate() {
            validate_op(index, op, self.qubit_count)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Circuit, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub(crate) fn validate_op(index: usize, op: &Op, qubit_count: usize) -> Result<(), CircuitError> {
    let expected = op.gate.arity();
    if op.qubits.len() != expected {
        return Err(CircuitError::Arity { index, gate: op.gate, expected, found: op.qubits.len() });
    }
    if op.angle.is_some() != op.gate.is_parameterized() {
        return Err(CircuitError::Angle { index, gate: op.gate });
    }
    if let Some(a) = op.angle {
        if !a.is_finite() {
            return Err(CircuitError::NonFiniteAngle { index });
        }
    }
    for &qubit in &op.qubits {
        if qubit >= qubit_count {
            return Err(CircuitError::QubitOutOfRange { index, qubit, qubit_count });
        }
    }
    if !distinct(&op.qubits) {
        return Err(CircuitError::OperandConflict { index, gate: op.gate });
    }
    Ok(())
}

pub(crate) fn distinct(qubits: &[usize]) -> bool {
    for i in 0..qubits.len() {
        for j in i + 1..qubits.len() {
            if qubits[i] == qubits[j] {
                return false;
            }
        }
    }
    true
}

/// Random valid circuit on `qubit_count` qubits with up to `max_gates` gates.
///
/// Gates are biased toward patterns the optimizer rewrites: repeated and
/// inverted gates, special angles and runs on a single qubit.
pub fn random_circuit(rng: &mut impl Rng, qubit_count: usize, max_gates: usize) -> Circuit {
    use std::f64::consts::PI;
    let gates: Vec<GateKind> = GateKind::ALL.into_iter().filter(|g| g.arity() <= qubit_count).collect();
    let len = rng.gen_range(0..=max_gates);
    let mut ops: Vec<Op> = Vec::with_capacity(len);
    while ops.len() < len {
        if !ops.is_empty() && rng.gen_bool(0.25) {
            let mut op = ops[rng.gen_range(0..ops.len())].clone();
            if let Some(a) = op.angle.as_mut() {
                *a = if rng.gen_bool(0.5) { -*a } else { *a * 0.5 };
            }
            ops.push(op);
            continue;
        }
        let gate = gates[rng.gen_range(0..gates.len())];
        let mut pool: Vec<usize> = (0..qubit_count).collect();
        for i in 0..gate.arity() {
            let j = rng.gen_range(i..qubit_count);
            pool.swap(i, j);
        }
        let angle = gate.is_parameterized().then(|| match rng.gen_range(0..4) {
            0 => [0.0, PI / 4.0, PI / 2.0, PI, 2.0 * PI, 4.0 * PI][rng.gen_range(0..6)],
            _ => rng.gen_range(-2.0 * PI..2.0 * PI),
        });
        ops.push(Op { gate, angle, qubits: pool[..gate.arity()].to_vec() });
    }
    Circuit::with_ops(qubit_count, ops)
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.qubit_count)?;
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_is_portable() {
        let c = Circuit::with_ops(
            2,
            vec![Op::new(GateKind::H, &[0]), Op::rot(GateKind::Rx, 0.5, &[1])],
        );
        let json = c.to_json();
        assert_eq!(
            json,
            r#"{"n":2,"ops":[{"gate":"h","qubits":[0]},{"gate":"rx","angle":0.5,"qubits":[1]}]}"#
        );
        assert_eq!(Circuit::from_json(&json).unwrap(), c);
    }

    #[test]
    fn validation_errors() {
        let bad = Circuit::with_ops(2, vec![Op::new(GateKind::Cx, &[0, 0])]);
        assert_eq!(bad.validate(), Err(CircuitError::OperandConflict { index: 0, gate: GateKind::Cx }));
        let bad = Circuit::with_ops(2, vec![Op::new(GateKind::Rx, &[0])]);
        assert!(matches!(bad.validate(), Err(CircuitError::Angle { .. })));
        let bad = Circuit::with_ops(2, vec![Op::new(GateKind::X, &[2])]);
        assert!(matches!(bad.validate(), Err(CircuitError::QubitOutOfRange { .. })));
        assert!(Circuit::new(0).validate().is_err());
    }
}
