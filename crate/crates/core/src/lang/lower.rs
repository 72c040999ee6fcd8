//! Executes the classical half of a program and records gates in the order
//! they run.
//!
//! Variables start at 0 each time their owning scope is entered (for a
//! `while` body that is every iteration). Arithmetic wraps; a nonzero value
//! is true. Every executed statement, including each loop-condition check,
//! consumes one unit of fuel.

use std::collections::HashMap;

use crate::circuit::{Circuit, Op};

use super::ast::{BinOp, Expr, Program, Stmt};
use super::scope::analyze_scopes;

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LowerError {
    #[error("fuel exhausted after {fuel} executed statements")]
    FuelExhausted { fuel: u64 },
}

enum CExpr {
    Lit(i64),
    Var(usize),
    Neg(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

enum CStmt {
    Assign(usize, CExpr),
    Gate(Op),
    If { cond: CExpr, reset: Vec<usize>, body: Vec<CStmt> },
    While { cond: CExpr, reset: Vec<usize>, body: Vec<CStmt> },
}

struct Compiler {
    slots: HashMap<String, usize>,
    owned: Vec<Vec<usize>>,
    next_scope: usize,
}

impl Compiler {
    fn slot(&mut self, name: &str) -> usize {
        compiler_slot(&mut self.slots, name)
    }

    fn expr(&mut self, e: &Expr) -> CExpr {
        match e {
            Expr::Lit(v) => CExpr::Lit(*v),
            Expr::Var(v) => CExpr::Var(self.slot(v)),
            Expr::Neg(inner) => CExpr::Neg(Box::new(self.expr(inner))),
            Expr::Bin(op, l, r) => CExpr::Bin(*op, Box::new(self.expr(l)), Box::new(self.expr(r))),
        }
    }

    fn block(&mut self, body: &[Stmt]) -> Vec<CStmt> {
        body.iter()
            .map(|s| match s {
                Stmt::Assign { var, expr } => {
                    let slot = self.slot(var);
                    CStmt::Assign(slot, self.expr(expr))
                }
                Stmt::Gate(g) => CStmt::Gate(g.to_op()),
                Stmt::If { cond, body } | Stmt::While { cond, body } => {
                    let cond = self.expr(cond);
                    let scope = self.next_scope;
                    self.next_scope += 1;
                    let reset = self.owned[scope].clone();
                    let body = self.block(body);
                    if matches!(s, Stmt::If { .. }) {
                        CStmt::If { cond, reset, body }
                    } else {
                        CStmt::While { cond, reset, body }
                    }
                }
            })
            .collect()
    }
}

struct Machine {
    vals: Vec<i64>,
    spent: u64,
    fuel: u64,
    out: Vec<Op>,
    max_gates: usize,
    overflow: bool,
}

impl Machine {
    fn tick(&mut self) -> Result<(), LowerError> {
        self.spent += 1;
        if self.spent > self.fuel {
            Err(LowerError::FuelExhausted { fuel: self.fuel })
        } else {
            Ok(())
        }
    }

    fn eval(&self, e: &CExpr) -> i64 {
        match e {
            CExpr::Lit(v) => *v,
            CExpr::Var(s) => self.vals[*s],
            CExpr::Neg(inner) => self.eval(inner).wrapping_neg(),
            CExpr::Bin(op, l, r) => op.eval(self.eval(l), self.eval(r)),
        }
    }

    fn enter(&mut self, reset: &[usize]) {
        for &s in reset {
            self.vals[s] = 0;
        }
    }

    fn run(&mut self, body: &[CStmt]) -> Result<(), LowerError> {
        for s in body {
            self.tick()?;
            match s {
                CStmt::Assign(slot, e) => self.vals[*slot] = self.eval(e),
                CStmt::Gate(op) => {
                    if self.out.len() < self.max_gates {
                        self.out.push(op.clone());
                    } else {
                        self.overflow = true;
                    }
                }
                CStmt::If { cond, reset, body } => {
                    if self.eval(cond) != 0 {
                        self.enter(reset);
                        self.run(body)?;
                    }
                }
                CStmt::While { cond, reset, body } => {
                    // Brent cycle check on the variable state at the loop head:
                    // a repeat means the loop never exits, whatever the fuel.
                    let mut saved = self.vals.clone();
                    let (mut power, mut lam) = (1u64, 0u64);
                    while self.eval(cond) != 0 {
                        self.enter(reset);
                        self.run(body)?;
                        self.tick()?;
                        lam += 1;
                        if self.vals == saved {
                            return Err(LowerError::FuelExhausted { fuel: self.fuel });
                        }
                        if lam == power {
                            saved.clone_from(&self.vals);
                            power *= 2;
                            lam = 0;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Interpret `p` and return the executed gate sequence.
pub fn lower(p: &Program, fuel: u64) -> Result<Circuit, LowerError> {
    Ok(lower_capped(p, fuel, usize::MAX)?.expect("uncapped"))
}

/// Like [`lower`], but returns `Ok(None)` once more than `max_gates` gates
/// would be emitted. Fuel exhaustion is still reported first.
pub fn lower_capped(p: &Program, fuel: u64, max_gates: usize) -> Result<Option<Circuit>, LowerError> {
    let tree = analyze_scopes(p);
    let mut slots = HashMap::new();
    let owned = tree
        .scopes
        .iter()
        .map(|s| s.vars.iter().map(|v| compiler_slot(&mut slots, v)).collect())
        .collect();
    let mut compiler = Compiler { slots, owned, next_scope: 1 };
    let body = compiler.block(&p.body);
    let mut m = Machine { vals: vec![0; compiler.slots.len()], spent: 0, fuel, out: Vec::new(), max_gates, overflow: false };
    m.run(&body)?;
    Ok((!m.overflow).then(|| Circuit::with_ops(p.qubit_count, m.out)))
}

fn compiler_slot(slots: &mut HashMap<String, usize>, name: &str) -> usize {
    let n = slots.len();
    *slots.entry(name.to_string()).or_insert(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateKind;
    use crate::lang::{demo, demo_variant, parse};

    #[test]
    fn figure_program_lowers_to_t_then_rx() {
        let c = lower(&demo(), DEFAULT_FUEL).unwrap();
        assert_eq!(c.ops, vec![Op::new(GateKind::T, &[0]), Op::rot(GateKind::Rx, 0.123, &[1])]);
    }

    #[test]
    fn false_branch_skips_block() {
        let c = lower(&demo_variant(), DEFAULT_FUEL).unwrap();
        assert_eq!(c.ops, vec![Op::new(GateKind::T, &[2])]);
    }

    #[test]
    fn dead_loop_exhausts_fuel() {
        let p = parse("qubits 1\nwhile 1 {\n  x q[0]\n}\n").unwrap();
        assert_eq!(lower(&p, 1000), Err(LowerError::FuelExhausted { fuel: 1000 }));
    }

    #[test]
    fn dead_loops_with_and_without_repeating_state() {
        // j settles, so the loop-head state repeats and is cut short.
        let settles = parse("qubits 1
k = 5
while 0 < k {
  j = k - 1
  x q[0]
}
").unwrap();
        // j counts down forever without repeating within the fuel.
        let drifts = parse("qubits 1
k = 5
while 0 < k {
  j = j - 1
  x q[0]
}
").unwrap();
        for p in [settles, drifts] {
            assert_eq!(lower(&p, DEFAULT_FUEL), Err(LowerError::FuelExhausted { fuel: DEFAULT_FUEL }));
        }
        let long = parse("qubits 1
k = 40000
while 0 < k {
  k = k - 1
}
x q[0]
").unwrap();
        assert_eq!(lower(&long, DEFAULT_FUEL).unwrap().len(), 1);
    }

    #[test]
    fn capped_lowering_reports_overflow() {
        let p = parse("qubits 1
k = 10
while 0 < k {
  x q[0]
  k = k - 1
}
").unwrap();
        assert_eq!(lower_capped(&p, DEFAULT_FUEL, 10).unwrap().unwrap().len(), 10);
        assert_eq!(lower_capped(&p, DEFAULT_FUEL, 9), Ok(None));
    }

    #[test]
    fn counted_loop_and_wrapping() {
        let p = parse(
            "qubits 1\nk = 3\nwhile 0 < k {\n  h q[0]\n  k = k - 1\n}\nm = 9223372036854775807 + 1\nif m < 0 {\n  x q[0]\n}\n",
        )
        .unwrap();
        let c = lower(&p, DEFAULT_FUEL).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.ops[3].gate, GateKind::X);
    }

    #[test]
    fn block_local_variables_reset_on_entry() {
        // `c` is owned by the loop body, so it restarts at 0 every iteration.
        let p = parse("qubits 1\nk = 2\nwhile 0 < k {\n  c = c + 1\n  if c == 1 {\n    x q[0]\n  }\n  k = k - 1\n}\n")
            .unwrap();
        assert_eq!(lower(&p, DEFAULT_FUEL).unwrap().len(), 2);
    }

    #[test]
    fn fuel_counts_statements() {
        let p = parse("qubits 1\na = 1\nb = 2\n").unwrap();
        assert!(lower(&p, 2).is_ok());
        assert!(lower(&p, 1).is_err());
    }
}
