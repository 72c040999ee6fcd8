//! Delta-debugging reduction of a circuit that fails a comparison rule.

use crate::circuit::{Circuit, Op};

use super::{ComparisonRule, Harness, Verdict};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MinimizeError {
    #[error("rule {rule} does not report a mismatch on this circuit ({verdict:?})")]
    NotAMismatch { rule: String, verdict: Verdict },
}

fn with_ops(base: &Circuit, ops: Vec<Op>) -> Circuit {
    Circuit::with_ops(base.qubit_count, ops)
}

/// Shrink `c` while `rule` keeps reporting a Mismatch. The result is
/// 1-minimal: dropping any single remaining gate loses the mismatch.
pub fn minimize_failure(harness: &Harness, c: &Circuit, rule: &ComparisonRule, eps: f64) -> Result<Circuit, MinimizeError> {
    let fails = |ops: &[Op]| harness.evaluate_rule_on(&with_ops(c, ops.to_vec()), rule, eps).verdict.is_mismatch();
    let first = harness.evaluate_rule_on(c, rule, eps);
    if !first.verdict.is_mismatch() {
        return Err(MinimizeError::NotAMismatch { rule: rule.id.clone(), verdict: first.verdict });
    }
    let mut ops = c.ops.clone();
    let mut n = 2usize;
    while ops.len() >= 2 {
        let chunk = ops.len().div_ceil(n);
        let parts: Vec<(usize, usize)> = (0..ops.len()).step_by(chunk).map(|s| (s, (s + chunk).min(ops.len()))).collect();
        let mut reduced = false;
        for &(s, e) in &parts {
            if fails(&ops[s..e]) {
                ops = ops[s..e].to_vec();
                n = 2;
                reduced = true;
                break;
            }
        }
        if !reduced && parts.len() > 2 {
            for &(s, e) in &parts {
                let rest: Vec<Op> = ops[..s].iter().chain(&ops[e..]).cloned().collect();
                if fails(&rest) {
                    ops = rest;
                    n = (n - 1).max(2);
                    reduced = true;
                    break;
                }
            }
        }
        if !reduced {
            if n >= ops.len() {
                break;
            }
            n = (2 * n).min(ops.len());
        }
    }
    // single-gate sweep until nothing more can go
    loop {
        let before = ops.len();
        let mut i = 0;
        while i < ops.len() {
            let mut rest = ops.clone();
            rest.remove(i);
            if fails(&rest) {
                ops = rest;
            } else {
                i += 1;
            }
        }
        if ops.len() == before {
            break;
        }
    }
    Ok(with_ops(c, ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::GateKind::*;
    use crate::optimizer::FaultId;

    fn rule(h: &Harness, id: &str) -> ComparisonRule {
        h.rules.iter().find(|r| r.id == id).unwrap().clone()
    }

    #[test]
    fn witness_is_already_minimal() {
        let h = Harness::standard(Some(FaultId::DropT));
        let w = FaultId::DropT.witness();
        assert_eq!(minimize_failure(&h, &w, &rule(&h, "R2"), 1e-9).unwrap(), w);
    }

    #[test]
    fn passing_circuit_is_rejected() {
        let h = Harness::standard(None);
        let err = minimize_failure(&h, &FaultId::DropT.witness(), &rule(&h, "R2"), 1e-9).unwrap_err();
        assert!(matches!(err, MinimizeError::NotAMismatch { verdict: Verdict::Pass, .. }));
    }

    #[test]
    fn embedded_drop_t_shrinks_to_t_with_superposition() {
        let h = Harness::standard(Some(FaultId::DropT));
        let mut ops = Vec::new();
        for i in 0..19 {
            ops.push(Op::new(if i % 2 == 0 { Cx } else { Swap }, &[1 + i % 3, 1 + (i + 1) % 3]));
        }
        ops.push(Op::new(H, &[0]));
        ops.push(Op::new(T, &[0]));
        for i in 0..19 {
            ops.push(Op::rot(Ry, 0.1 * i as f64, &[1 + i % 3]));
        }
        let c = Circuit::with_ops(4, ops);
        assert_eq!(c.len(), 40);
        let m = minimize_failure(&h, &c, &rule(&h, "R2"), 1e-9).unwrap();
        assert!(m.ops.iter().any(|o| o.gate == T));
        assert!(m.ops.iter().any(|o| o.gate == H));
        for i in 0..m.len() {
            let mut rest = m.ops.clone();
            rest.remove(i);
            let v = h.evaluate_rule_on(&Circuit::with_ops(4, rest), &rule(&h, "R2"), 1e-9).verdict;
            assert!(!v.is_mismatch());
        }
    }
}
