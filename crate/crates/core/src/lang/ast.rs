use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitError, Op, MAX_QUBITS};
use crate::gate::GateKind;

use super::LangError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Lt,
    Le,
    Eq,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ne => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul => 3,
        }
    }

    pub fn eval(self, l: i64, r: i64) -> i64 {
        match self {
            BinOp::Add => l.wrapping_add(r),
            BinOp::Sub => l.wrapping_sub(r),
            BinOp::Mul => l.wrapping_mul(r),
            BinOp::Lt => (l < r) as i64,
            BinOp::Le => (l <= r) as i64,
            BinOp::Eq => (l == r) as i64,
            BinOp::Ne => (l != r) as i64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Lit(i64),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Box::new(l), Box::new(r))
    }

    /// Variable occurrences in evaluation (left-to-right) order.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(v) => out.push(v),
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateStmt {
    pub gate: GateKind,
    pub angle: Option<f64>,
    pub qubits: Vec<usize>,
}

impl GateStmt {
    pub fn to_op(&self) -> Op {
        Op { gate: self.gate, angle: self.angle, qubits: self.qubits.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Assign { var: String, expr: Expr },
    Gate(GateStmt),
    If { cond: Expr, body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
}

impl Stmt {
    pub fn assign(var: &str, expr: Expr) -> Stmt {
        Stmt::Assign { var: var.to_string(), expr }
    }

    pub fn gate(gate: GateKind, angle: Option<f64>, qubits: &[usize]) -> Stmt {
        Stmt::Gate(GateStmt { gate, angle, qubits: qubits.to_vec() })
    }

    pub fn block(&self) -> Option<&[Stmt]> {
        match self {
            Stmt::If { body, .. } | Stmt::While { body, .. } => Some(body),
            _ => None,
        }
    }
}

pub const DEFAULT_PROGRAM_NAME: &str = "main";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub name: String,
    pub qubit_count: usize,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn new(qubit_count: usize, body: Vec<Stmt>) -> Self {
        Program { name: DEFAULT_PROGRAM_NAME.to_string(), qubit_count, body }
    }

    /// Checks the register bound and every gate statement.
    pub fn validate(&self) -> Result<(), LangError> {
        if self.qubit_count == 0 || self.qubit_count > MAX_QUBITS {
            return Err(LangError::QubitCount { line: 0, count: self.qubit_count });
        }
        let mut index = 0;
        validate_block(&self.body, self.qubit_count, &mut index)
    }

    /// Gate statements in textual order, ignoring control flow.
    pub fn gate_stmts(&self) -> Vec<&GateStmt> {
        let mut out = Vec::new();
        collect_gates(&self.body, &mut out);
        out
    }

    pub fn statement_count(&self) -> usize {
        fn count(b: &[Stmt]) -> usize {
            b.iter().map(|s| 1 + s.block().map_or(0, count)).sum()
        }
        count(&self.body)
    }
}

fn collect_gates<'a>(block: &'a [Stmt], out: &mut Vec<&'a GateStmt>) {
    for s in block {
        match s {
            Stmt::Gate(g) => out.push(g),
            Stmt::If { body, .. } | Stmt::While { body, .. } => collect_gates(body, out),
            Stmt::Assign { .. } => {}
        }
    }
}

fn validate_block(block: &[Stmt], n: usize, index: &mut usize) -> Result<(), LangError> {
    for s in block {
        match s {
            Stmt::Gate(g) => {
                check_gate(g, n).map_err(|e| LangError::from_circuit(e, 0))?;
                *index += 1;
            }
            Stmt::If { body, .. } | Stmt::While { body, .. } => validate_block(body, n, index)?,
            Stmt::Assign { .. } => {}
        }
    }
    Ok(())
}

pub(crate) fn check_gate(g: &GateStmt, n: usize) -> Result<(), CircuitError> {
    circuit::validate_op(0, &g.to_op(), n)
}
