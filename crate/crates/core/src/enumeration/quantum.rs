//! Angle and qubit fillings, and the qubit-permutation canonical form used
//! to recognise quantum-α-equivalent circuits.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{distinct, Circuit, Op};
use crate::skeleton::{QuantumAssignment, Skeleton};

use super::EnumError;

pub const ANGLE_PALETTE: [f64; 5] = [0.0, FRAC_PI_4, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleSource {
    /// Uniform in [0, 2π).
    #[default]
    Uniform,
    /// One of [`ANGLE_PALETTE`].
    Palette,
}

/// Resample attempts allowed per quantum fill.
pub fn rejection_budget(qubit_holes: usize) -> usize {
    64 * qubit_holes.max(1)
}

fn draw_angle(source: AngleSource, rng: &mut impl Rng) -> f64 {
    match source {
        AngleSource::Uniform => {
            let a = rng.gen::<f64>() * TAU;
            if a < TAU {
                a
            } else {
                0.0
            }
        }
        AngleSource::Palette => ANGLE_PALETTE[rng.gen_range(0..ANGLE_PALETTE.len())],
    }
}

/// Gate statements of `sk` in program order, filled with `q`.
fn static_circuit(sk: &Skeleton, q: &QuantumAssignment) -> Circuit {
    let ops = sk
        .gates
        .iter()
        .map(|g| Op {
            gate: g.gate,
            angle: g.angle.map(|id| q.angles[&id]),
            qubits: g.qubits.iter().map(|id| q.qubits[&id]).collect(),
        })
        .collect();
    Circuit::with_ops(sk.qubit_count(), ops)
}

/// True when `q` fills every quantum hole of `sk` within range and without
/// repeating an operand inside one gate.
pub fn is_legal_fill(sk: &Skeleton, q: &QuantumAssignment) -> bool {
    sk.gates.iter().all(|g| {
        let qs: Option<Vec<usize>> = g.qubits.iter().map(|id| q.qubits.get(id).copied()).collect();
        let angle_ok = g.angle.is_none_or(|id| q.angles.get(&id).is_some_and(|a| a.is_finite()));
        angle_ok && qs.is_some_and(|qs| qs.iter().all(|&x| x < sk.qubit_count()) && distinct(&qs))
    })
}

/// Draw angles and qubit operands for every quantum hole, resampling while
/// the filled gate statements are quantum-α-equivalent to the seed's.
pub fn sample_quantum(sk: &Skeleton, source: AngleSource, rng: &mut impl Rng) -> Result<QuantumAssignment, EnumError> {
    let n = sk.qubit_count();
    let budget = rejection_budget(sk.qubit_holes.len());
    let has_holes = !sk.qubit_holes.is_empty() || !sk.angle_holes.is_empty();
    let seed_key = canonical_qubit_key(&static_circuit(sk, &sk.reference_quantum()));
    let mut attempts = 0usize;
    loop {
        let mut q = QuantumAssignment::default();
        for g in &sk.gates {
            if let Some(id) = g.angle {
                q.angles.insert(id, draw_angle(source, rng));
            }
            loop {
                let picks: Vec<usize> = g.qubits.iter().map(|_| rng.gen_range(0..n)).collect();
                if distinct(&picks) {
                    for (id, v) in g.qubits.iter().zip(picks) {
                        q.qubits.insert(*id, v);
                    }
                    break;
                }
                attempts += 1;
                if attempts >= budget {
                    return Err(EnumError::RejectionExhausted { attempts });
                }
            }
        }
        if !has_holes || canonical_qubit_key(&static_circuit(sk, &q)) != seed_key {
            return Ok(q);
        }
        attempts += 1;
        if attempts >= budget {
            return Err(EnumError::RejectionExhausted { attempts });
        }
    }
}

/// Serialization of `c` after relabeling qubits in order of first
/// appearance. When a symmetric operand group introduces several new qubits
/// at once, every order is tried and the smallest encoding wins, so the key
/// depends only on the circuit's class under qubit permutation.
pub fn canonical_qubit_key(c: &Circuit) -> Vec<u8> {
    let mut header = Vec::with_capacity(8);
    header.extend_from_slice(&(c.qubit_count as u32).to_le_bytes());
    header.extend_from_slice(&(c.ops.len() as u32).to_le_bytes());
    let width = c.ops.iter().flat_map(|o| o.qubits.iter().map(|q| q + 1)).max().unwrap_or(0);
    let labels = vec![u8::MAX; width.max(c.qubit_count)];
    let mut best: Option<Vec<u8>> = None;
    canon_from(c, 0, &labels, 0, header, &mut best);
    best.unwrap()
}

fn canon_from(c: &Circuit, pos: usize, labels: &[u8], next: u8, out: Vec<u8>, best: &mut Option<Vec<u8>>) {
    if let Some(b) = best.as_ref() {
        if out.as_slice() > &b[..out.len().min(b.len())] {
            return;
        }
    }
    let Some(op) = c.ops.get(pos) else {
        if best.as_ref().is_none_or(|b| out < *b) {
            *best = Some(out);
        }
        return;
    };
    let sym = op.gate.symmetric_slots();
    let group_new: Vec<usize> = match sym {
        Some((i, j)) => [i, j].into_iter().filter(|&s| labels[op.qubits[s]] == u8::MAX).collect(),
        None => Vec::new(),
    };
    let orders: Vec<Vec<usize>> =
        if group_new.len() == 2 { vec![group_new.clone(), vec![group_new[1], group_new[0]]] } else { vec![group_new] };
    for order in orders {
        let mut lab = labels.to_vec();
        let mut nx = next;
        let assign = |slot: usize, lab: &mut Vec<u8>, nx: &mut u8| {
            let q = op.qubits[slot];
            if lab[q] == u8::MAX {
                lab[q] = *nx;
                *nx += 1;
            }
        };
        // slots before the group, then the group in the chosen order, then the rest
        let first_sym = sym.map_or(usize::MAX, |(i, _)| i);
        for slot in 0..op.qubits.len() {
            if slot == first_sym {
                for &s in &order {
                    assign(s, &mut lab, &mut nx);
                }
            }
            assign(slot, &mut lab, &mut nx);
        }
        let mut rel: Vec<u8> = op.qubits.iter().map(|&q| lab[q]).collect();
        if let Some((i, j)) = sym {
            if rel[i] > rel[j] {
                rel.swap(i, j);
            }
        }
        let mut o = out.clone();
        o.push(op.gate.index());
        match op.angle {
            Some(a) => {
                o.push(1);
                o.extend_from_slice(&a.to_bits().to_be_bytes());
            }
            None => o.push(0),
        }
        o.extend_from_slice(&rel);
        canon_from(c, pos + 1, &lab, nx, o, best);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateKind::*;
    use crate::lang::parse;
    use crate::rng::stream;
    use crate::skeleton::extract;

    fn key(n: usize, ops: Vec<Op>) -> Vec<u8> {
        canonical_qubit_key(&Circuit::with_ops(n, ops))
    }

    #[test]
    fn permuted_circuits_share_keys() {
        assert_eq!(
            key(2, vec![Op::new(H, &[1]), Op::new(Cx, &[1, 0])]),
            key(2, vec![Op::new(H, &[0]), Op::new(Cx, &[0, 1])])
        );
        assert_eq!(key(2, vec![Op::new(Swap, &[0, 1])]), key(2, vec![Op::new(Swap, &[1, 0])]));
        assert_ne!(key(1, vec![Op::rot(Rx, 0.1, &[0])]), key(1, vec![Op::rot(Rx, 0.2, &[0])]));
        assert_ne!(
            key(2, vec![Op::new(H, &[0]), Op::new(Cx, &[0, 1])]),
            key(2, vec![Op::new(H, &[0]), Op::new(Cx, &[1, 0])])
        );
    }

    #[test]
    fn symmetric_group_ordering_is_resolved_later() {
        // after cz introduces two qubits at once, a later x decides which is which
        let a = key(3, vec![Op::new(Cz, &[0, 1]), Op::new(X, &[1]), Op::new(Cx, &[0, 2])]);
        let b = key(3, vec![Op::new(Cz, &[2, 0]), Op::new(X, &[2]), Op::new(Cx, &[0, 1])]);
        let c = key(3, vec![Op::new(Cz, &[0, 1]), Op::new(X, &[1]), Op::new(Cx, &[1, 2])]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    /// Keys agree exactly when some qubit permutation maps one circuit onto
    /// the other (checked by trying all permutations).
    #[test]
    fn key_equality_matches_permutation_search() {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for i in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        fn normal(c: &Circuit) -> Vec<(u8, Vec<usize>)> {
            c.ops
                .iter()
                .map(|op| {
                    let mut q = op.qubits.clone();
                    if let Some((i, j)) = op.gate.symmetric_slots() {
                        if q[i] > q[j] {
                            q.swap(i, j);
                        }
                    }
                    (op.gate.index(), q)
                })
                .collect()
        }
        let gates = [H, Cx, Cz, Swap, Ccx, Cswap, T];
        let mut rng = stream(3, &[]);
        let n = 3;
        let mut circuits = Vec::new();
        for _ in 0..150 {
            let len = rng.gen_range(1..4);
            let ops = (0..len)
                .map(|_| {
                    let g = gates[rng.gen_range(0..gates.len())];
                    let mut qs: Vec<usize> = (0..n).collect();
                    for i in 0..g.arity() {
                        let j = rng.gen_range(i..n);
                        qs.swap(i, j);
                    }
                    Op::new(g, &qs[..g.arity()])
                })
                .collect();
            circuits.push(Circuit::with_ops(n, ops));
        }
        let ps = perms(n);
        for a in &circuits[..40] {
            for b in &circuits {
                let equiv = ps.iter().any(|p| {
                    let mapped = Circuit::with_ops(
                        n,
                        a.ops.iter().map(|op| Op { qubits: op.qubits.iter().map(|&q| p[q]).collect(), ..op.clone() }).collect(),
                    );
                    normal(&mapped) == normal(b)
                });
                assert_eq!(canonical_qubit_key(a) == canonical_qubit_key(b), equiv, "{a}\n{b}");
            }
        }
    }

    #[test]
    fn fills_are_legal_and_differ_from_seed() {
        let sk = extract(&parse("qubits 3\ncx q[0], q[1]\nccx q[0], q[1], q[2]\n").unwrap());
        let seed = canonical_qubit_key(&static_circuit(&sk, &sk.reference_quantum()));
        let mut rng = stream(1, &[]);
        for _ in 0..50 {
            let q = sample_quantum(&sk, AngleSource::Uniform, &mut rng).unwrap();
            assert!(is_legal_fill(&sk, &q));
            assert_ne!(canonical_qubit_key(&static_circuit(&sk, &q)), seed);
        }
    }

    #[test]
    fn conflicting_fill_is_illegal() {
        let sk = extract(&parse("qubits 3\nccx q[0], q[1], q[2]\n").unwrap());
        let mut q = sk.reference_quantum();
        assert!(is_legal_fill(&sk, &q));
        q.qubits.insert(1, 2);
        assert!(!is_legal_fill(&sk, &q));
    }

    #[test]
    fn single_qubit_register_cannot_fill_cx() {
        let mut p = parse("qubits 2\ncx q[0], q[1]\n").unwrap();
        p.qubit_count = 1;
        let sk = extract(&p);
        let mut rng = stream(0, &[]);
        assert!(matches!(
            sample_quantum(&sk, AngleSource::Uniform, &mut rng),
            Err(EnumError::RejectionExhausted { .. })
        ));
    }

    #[test]
    fn palette_angles() {
        let sk = extract(&parse("qubits 1\nrx(0.5) q[0]\nrz(0.25) q[0]\n").unwrap());
        let mut rng = stream(2, &[]);
        let q = sample_quantum(&sk, AngleSource::Palette, &mut rng).unwrap();
        assert!(q.angles.values().all(|a| ANGLE_PALETTE.contains(a)));
        let q = sample_quantum(&sk, AngleSource::Uniform, &mut rng).unwrap();
        assert!(q.angles.values().all(|a| (0.0..TAU).contains(a)));
    }
}
