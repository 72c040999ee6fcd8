//! The hybrid seed language: AST, parser, canonical printer, scope analysis
//! and lowering to flat circuits.

mod ast;
mod lower;
mod parse;
mod render;
mod scope;
pub mod visit;

pub use ast::{BinOp, Expr, GateStmt, Program, Stmt, DEFAULT_PROGRAM_NAME};
pub use lower::{lower, lower_capped, LowerError, DEFAULT_FUEL};
pub use parse::{is_reserved, parse};
pub use render::{render, render_expr, render_gate};
pub use scope::{analyze_scopes, Scope, ScopeKind, ScopeTree};

use crate::circuit::CircuitError;
use crate::gate::GateKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LangError {
    #[error("line {line}, col {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: unknown gate `{name}`")]
    UnknownGate { line: usize, name: String },
    #[error("line {line}: {gate} expects {expected} qubit operands, got {found}")]
    ArityMismatch { line: usize, gate: GateKind, expected: usize, found: usize },
    #[error("line {line}: {gate} {}", if *.requires_angle { "requires an angle" } else { "takes no angle" })]
    AngleMismatch { line: usize, gate: GateKind, requires_angle: bool },
    #[error("line {line}: qubit {qubit} out of range for {qubit_count} qubits")]
    QubitOutOfRange { line: usize, qubit: usize, qubit_count: usize },
    #[error("line {line}: {gate} uses the same qubit twice")]
    QubitOperandConflict { line: usize, gate: GateKind },
    #[error("line {line}: qubit count {count} outside 1..=12")]
    QubitCount { line: usize, count: usize },
}

impl LangError {
    pub(crate) fn from_circuit(e: CircuitError, line: usize) -> LangError {
        match e {
            CircuitError::QubitCount(count) => LangError::QubitCount { line, count },
            CircuitError::Arity { gate, expected, found, .. } => {
                LangError::ArityMismatch { line, gate, expected, found }
            }
            CircuitError::Angle { gate, .. } => {
                LangError::AngleMismatch { line, gate, requires_angle: gate.is_parameterized() }
            }
            CircuitError::NonFiniteAngle { .. } => {
                LangError::Syntax { line, col: 1, message: "angle must be finite".into() }
            }
            CircuitError::QubitOutOfRange { qubit, qubit_count, .. } => {
                LangError::QubitOutOfRange { line, qubit, qubit_count }
            }
            CircuitError::OperandConflict { gate, .. } => LangError::QubitOperandConflict { line, gate },
        }
    }
}

/// Small scoped program used throughout the docs and tests: two global
/// variables, one block-local variable, a `t` and an `rx` gate.
pub const DEMO_SOURCE: &str = "qubits 3
a = 1
b = 0
t q[0]
if a {
  rx(0.123) q[1]
  c = 3
  b = c + a
}
";

/// A variant of [`DEMO_SOURCE`] with regrouped variables and moved qubits.
pub const DEMO_VARIANT_SOURCE: &str = "qubits 3
a = 1
b = 0
t q[2]
if b {
  rx(0.3) q[0]
  c = 3
  a = c + c
}
";

#[cfg(test)]
pub(crate) fn demo() -> Program {
    parse(DEMO_SOURCE).unwrap()
}

#[cfg(test)]
pub(crate) fn demo_variant() -> Program {
    parse(DEMO_VARIANT_SOURCE).unwrap()
}
