//! Program-order traversal of every enumeration site.
//!
//! Site order: statements in pre-order; an assignment yields its target and
//! then the variables of its expression left to right; `if`/`while` yield
//! their condition before their body; a gate yields its angle and then its
//! qubit operands in slot order. Scope ids are assigned in the same pre-order
//! (0 is the global scope), so [`super::analyze_scopes`] and the skeleton
//! agree on numbering.

use crate::gate::GateKind;

use super::ast::{Expr, Program, Stmt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarRole {
    Def,
    Use,
}

pub enum SiteMut<'a> {
    Var { name: &'a mut String, scope: usize, role: VarRole, path: &'a [usize] },
    Angle { value: &'a mut f64, gate_index: usize, gate: GateKind },
    Qubit { value: &'a mut usize, gate_index: usize, gate: GateKind, slot: usize },
}

/// Scope-structure events reported during traversal.
pub struct BlockEvent<'a> {
    pub scope: usize,
    pub parent: usize,
    pub is_while: bool,
    pub path: &'a [usize],
}

struct Walker<'f, F, B> {
    on_site: &'f mut F,
    on_block: &'f mut B,
    next_scope: usize,
    gate_index: usize,
    path: Vec<usize>,
}

pub fn walk_mut<F, B>(p: &mut Program, on_site: &mut F, on_block: &mut B)
where
    F: FnMut(SiteMut<'_>),
    B: FnMut(BlockEvent<'_>),
{
    let mut w = Walker { on_site, on_block, next_scope: 1, gate_index: 0, path: Vec::new() };
    w.block(&mut p.body, 0);
}

/// Convenience wrapper that ignores block events.
pub fn walk_sites_mut<F: FnMut(SiteMut<'_>)>(p: &mut Program, mut on_site: F) {
    walk_mut(p, &mut on_site, &mut |_| {});
}

impl<F, B> Walker<'_, F, B>
where
    F: FnMut(SiteMut<'_>),
    B: FnMut(BlockEvent<'_>),
{
    fn block(&mut self, body: &mut [Stmt], scope: usize) {
        for (i, s) in body.iter_mut().enumerate() {
            self.path.push(i);
            let is_while = matches!(s, Stmt::While { .. });
            match s {
                Stmt::Assign { var, expr } => {
                    (self.on_site)(SiteMut::Var { name: var, scope, role: VarRole::Def, path: &self.path });
                    self.expr(expr, scope);
                }
                Stmt::Gate(g) => {
                    let gate_index = self.gate_index;
                    self.gate_index += 1;
                    if let Some(a) = g.angle.as_mut() {
                        (self.on_site)(SiteMut::Angle { value: a, gate_index, gate: g.gate });
                    }
                    for (slot, q) in g.qubits.iter_mut().enumerate() {
                        (self.on_site)(SiteMut::Qubit { value: q, gate_index, gate: g.gate, slot });
                    }
                }
                Stmt::If { cond, body } | Stmt::While { cond, body } => {
                    self.expr(cond, scope);
                    let child = self.next_scope;
                    self.next_scope += 1;
                    (self.on_block)(BlockEvent { scope: child, parent: scope, is_while, path: &self.path });
                    self.block(body, child);
                }
            }
            self.path.pop();
        }
    }

    fn expr(&mut self, e: &mut Expr, scope: usize) {
        match e {
            Expr::Lit(_) => {}
            Expr::Var(v) => {
                (self.on_site)(SiteMut::Var { name: v, scope, role: VarRole::Use, path: &self.path })
            }
            Expr::Neg(inner) => self.expr(inner, scope),
            Expr::Bin(_, l, r) => {
                self.expr(l, scope);
                self.expr(r, scope);
            }
        }
    }
}
