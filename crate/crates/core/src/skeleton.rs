//! Hole-annotated skeletons.
//!
//! Every classical variable occurrence, every rotation angle and every qubit
//! operand of a program becomes a hole. Hole ids are 1-based and follow the
//! site order of [`crate::lang::visit`]. The original fillings are kept as the
//! seed's reference assignment.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::gate::{GateKind, SlotRole};
use crate::lang::visit::{walk_sites_mut, SiteMut, VarRole};
use crate::lang::{analyze_scopes, render_expr, Program, ScopeTree, Stmt};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalHole {
    pub id: usize,
    /// Scope the occurrence sits in.
    pub scope: usize,
    pub role: VarRole,
    /// Statement path of the enclosing statement.
    pub path: Vec<usize>,
    pub original: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleHole {
    pub id: usize,
    pub gate_index: usize,
    pub gate: GateKind,
    pub original: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitHole {
    pub id: usize,
    pub gate_index: usize,
    pub gate: GateKind,
    pub slot: usize,
    pub role: SlotRole,
    pub original: usize,
}

/// Hole ids used by one gate statement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateHoles {
    pub gate: GateKind,
    pub angle: Option<usize>,
    pub qubits: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skeleton {
    pub base: Program,
    pub scopes: ScopeTree,
    pub classical_holes: Vec<ClassicalHole>,
    pub angle_holes: Vec<AngleHole>,
    pub qubit_holes: Vec<QubitHole>,
    pub gates: Vec<GateHoles>,
}

/// Hole id → variable name.
pub type ClassicalAssignment = BTreeMap<usize, String>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantumAssignment {
    /// Angle hole id → radians.
    pub angles: BTreeMap<usize, f64>,
    /// Qubit hole id → qubit index.
    pub qubits: BTreeMap<usize, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScopeHoles {
    pub scope: usize,
    pub vars: usize,
    /// Classical holes located directly in this scope.
    pub holes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HoleCounts {
    pub per_scope: Vec<ScopeHoles>,
    pub classical: usize,
    pub angle: usize,
    pub qubit: usize,
}

pub fn extract(p: &Program) -> Skeleton {
    let scopes = analyze_scopes(p);
    let mut classical_holes = Vec::new();
    let mut angle_holes = Vec::new();
    let mut qubit_holes = Vec::new();
    let mut gates: Vec<GateHoles> = Vec::new();
    let mut scratch = p.clone();
    walk_sites_mut(&mut scratch, |site| match site {
        SiteMut::Var { name, scope, role, path } => classical_holes.push(ClassicalHole {
            id: classical_holes.len() + 1,
            scope,
            role,
            path: path.to_vec(),
            original: name.clone(),
        }),
        SiteMut::Angle { value, gate_index, gate } => {
            let id = angle_holes.len() + 1;
            angle_holes.push(AngleHole { id, gate_index, gate, original: *value });
            gates.push(GateHoles { gate, angle: Some(id), qubits: Vec::new() });
        }
        SiteMut::Qubit { value, gate_index, gate, slot } => {
            let id = qubit_holes.len() + 1;
            qubit_holes.push(QubitHole {
                id,
                gate_index,
                gate,
                slot,
                role: gate.slot_role(slot),
                original: *value,
            });
            if gates.len() == gate_index {
                gates.push(GateHoles { gate, angle: None, qubits: Vec::new() });
            }
            gates[gate_index].qubits.push(id);
        }
    });
    Skeleton { base: p.clone(), scopes, classical_holes, angle_holes, qubit_holes, gates }
}

impl Skeleton {
    pub fn qubit_count(&self) -> usize {
        self.base.qubit_count
    }

    pub fn reference_classical(&self) -> ClassicalAssignment {
        self.classical_holes.iter().map(|h| (h.id, h.original.clone())).collect()
    }

    pub fn reference_quantum(&self) -> QuantumAssignment {
        QuantumAssignment {
            angles: self.angle_holes.iter().map(|h| (h.id, h.original)).collect(),
            qubits: self.qubit_holes.iter().map(|h| (h.id, h.original)).collect(),
        }
    }

    /// Classical holes a variable owned by `scope` may fill: those located in
    /// `scope` or any of its descendants.
    pub fn eligible_holes(&self, scope: usize) -> Vec<usize> {
        self.classical_holes
            .iter()
            .filter(|h| self.scopes.is_ancestor_or_self(scope, h.scope))
            .map(|h| h.id)
            .collect()
    }

    pub fn count_holes(&self) -> HoleCounts {
        let per_scope = self
            .scopes
            .scopes
            .iter()
            .filter_map(|s| {
                let holes = self.classical_holes.iter().filter(|h| h.scope == s.id).count();
                (holes > 0 || !s.vars.is_empty()).then_some(ScopeHoles {
                    scope: s.id,
                    vars: s.vars.len(),
                    holes,
                })
            })
            .collect();
        HoleCounts {
            per_scope,
            classical: self.classical_holes.len(),
            angle: self.angle_holes.len(),
            qubit: self.qubit_holes.len(),
        }
    }

    /// Seed-language text with `_c<N>`, `_a<N>` and `_q<N>` markers in place
    /// of the holes.
    pub fn render(&self) -> String {
        let mut marked = self.base.clone();
        let mut next = 0;
        walk_sites_mut(&mut marked, |site| {
            if let SiteMut::Var { name, .. } = site {
                next += 1;
                *name = format!("_c{next}");
            }
        });
        let mut out = String::new();
        writeln!(out, "qubits {}", self.base.qubit_count).unwrap();
        let mut gate_index = 0;
        self.render_block(&marked.body, 0, &mut gate_index, &mut out);
        out
    }

    fn render_block(&self, body: &[Stmt], depth: usize, gate_index: &mut usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        for s in body {
            match s {
                Stmt::Assign { var, expr } => writeln!(out, "{pad}{var} = {}", render_expr(expr)).unwrap(),
                Stmt::Gate(g) => {
                    let holes = &self.gates[*gate_index];
                    *gate_index += 1;
                    let mut line = format!("{pad}{}", g.gate);
                    if let Some(a) = holes.angle {
                        write!(line, "(_a{a})").unwrap();
                    }
                    let ops: Vec<String> = holes.qubits.iter().map(|q| format!("q[_q{q}]")).collect();
                    writeln!(out, "{line} {}", ops.join(", ")).unwrap();
                }
                Stmt::If { cond, body } | Stmt::While { cond, body } => {
                    let kw = if matches!(s, Stmt::If { .. }) { "if" } else { "while" };
                    writeln!(out, "{pad}{kw} {} {{", render_expr(cond)).unwrap();
                    self.render_block(body, depth + 1, gate_index, out);
                    writeln!(out, "{pad}}}").unwrap();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{demo, parse};

    #[test]
    fn demo_hole_counts() {
        let sk = extract(&demo());
        assert_eq!(sk.classical_holes.len(), 7);
        assert_eq!(sk.angle_holes.len(), 1);
        assert_eq!(sk.qubit_holes.len(), 2);
        let names: Vec<&str> = sk.classical_holes.iter().map(|h| h.original.as_str()).collect();
        assert_eq!(names, ["a", "b", "a", "c", "b", "c", "a"]);
        let scopes: Vec<usize> = sk.classical_holes.iter().map(|h| h.scope).collect();
        assert_eq!(scopes, [0, 0, 0, 1, 1, 1, 1]);
        let counts = sk.count_holes();
        assert_eq!(
            counts.per_scope,
            vec![ScopeHoles { scope: 0, vars: 2, holes: 3 }, ScopeHoles { scope: 1, vars: 1, holes: 4 }]
        );
        assert_eq!(counts.per_scope.iter().map(|s| s.holes).sum::<usize>(), counts.classical);
        assert_eq!(sk.eligible_holes(0).len(), 7);
        assert_eq!(sk.eligible_holes(1), vec![4, 5, 6, 7]);
    }

    #[test]
    fn gate_only_program() {
        let sk = extract(&parse("qubits 2\nh q[0]\ncx q[0], q[1]\n").unwrap());
        assert_eq!((sk.classical_holes.len(), sk.angle_holes.len(), sk.qubit_holes.len()), (0, 0, 3));
        assert!(sk.count_holes().per_scope.is_empty());
        assert_eq!(sk.qubit_holes[1].role, SlotRole::Control);
        assert_eq!(sk.qubit_holes[2].role, SlotRole::Target);
    }

    #[test]
    fn angle_holes_follow_parameterized_gates() {
        let sk = extract(&parse("qubits 2\nrx(1) q[0]\nh q[1]\nry(2) q[1]\ncrz(3) q[0], q[1]\n").unwrap());
        let expected = GateKind::ALL
            .iter()
            .filter(|g| g.is_parameterized())
            .filter(|g| matches!(g, GateKind::Rx | GateKind::Ry | GateKind::Crz))
            .count();
        assert_eq!(sk.angle_holes.len(), expected);
        assert_eq!(sk.gates.len(), 4);
        assert_eq!(sk.gates[3].angle, Some(3));
        assert_eq!(sk.gates[3].qubits, vec![4, 5]);
    }

    #[test]
    fn markers_render() {
        let text = extract(&demo()).render();
        assert_eq!(
            text,
            "qubits 3\n_c1 = 1\n_c2 = 0\nt q[_q1]\nif _c3 {\n  rx(_a1) q[_q2]\n  _c4 = 3\n  _c5 = _c6 + _c7\n}\n"
        );
    }
}
