//! Optimization levels 0–3 built from sound rewrite passes, plus a registry
//! of deliberately broken pass variants for harness self-checks.
//!
//! Level `k` takes the level `k − 1` result and runs every pass enabled at
//! `k` until the circuit stops changing. Since no pass adds gates, gate
//! counts never increase from one level to the next.

mod passes;
mod zyz;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Op};
use crate::gate::GateKind;

pub use passes::{
    cancel_inverses, commutative_cancellation, commutes, drop_identity_rotations, merge_rotations, resynthesize_1q,
    ANGLE_TOL,
};
pub use zyz::{zyz_decompose, NotUnitary, Zyz};

pub const MAX_LEVEL: u8 = 3;

/// Safety net against passes that keep rewriting without converging.
const MAX_ROUNDS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptError {
    #[error("optimization level {0} outside 0..=3")]
    InvalidLevel(u8),
    #[error("unknown fault `{0}`")]
    UnknownFault(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultId {
    #[serde(rename = "FAULT_CRZ_SIGN")]
    CrzSign,
    #[serde(rename = "FAULT_DROP_T")]
    DropT,
    #[serde(rename = "FAULT_BAD_COMMUTE")]
    BadCommute,
}

impl FaultId {
    pub const ALL: [FaultId; 3] = [FaultId::CrzSign, FaultId::DropT, FaultId::BadCommute];

    pub fn name(self) -> &'static str {
        match self {
            FaultId::CrzSign => "FAULT_CRZ_SIGN",
            FaultId::DropT => "FAULT_DROP_T",
            FaultId::BadCommute => "FAULT_BAD_COMMUTE",
        }
    }

    /// The pass this fault replaces.
    pub fn target_pass(self) -> &'static str {
        match self {
            FaultId::CrzSign => "merge_rotations",
            FaultId::DropT => "cancel_inverses",
            FaultId::BadCommute => "commutative_cancellation",
        }
    }

    fn faulty(self) -> fn(&Circuit) -> Circuit {
        match self {
            FaultId::CrzSign => passes::merge_rotations_crz_sign,
            FaultId::DropT => passes::cancel_inverses_drop_t,
            FaultId::BadCommute => passes::commutative_cancellation_bad_commute,
        }
    }

    /// A small circuit whose semantics the fault changes.
    pub fn witness(self) -> Circuit {
        use GateKind::*;
        match self {
            FaultId::CrzSign => Circuit::with_ops(
                2,
                vec![Op::new(H, &[0]), Op::new(H, &[1]), Op::rot(Crz, 0.4, &[0, 1]), Op::rot(Crz, 0.4, &[0, 1])],
            ),
            FaultId::DropT => Circuit::with_ops(1, vec![Op::new(H, &[0]), Op::new(T, &[0])]),
            FaultId::BadCommute => {
                Circuit::with_ops(2, vec![Op::new(X, &[0]), Op::new(Cx, &[0, 1]), Op::new(X, &[0])])
            }
        }
    }
}

impl fmt::Display for FaultId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultId {
    type Err = OptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultId::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| OptError::UnknownFault(s.to_string()))
    }
}

#[derive(Clone, Copy)]
pub struct Pass {
    pub name: &'static str,
    /// First level that runs this pass.
    pub level: u8,
    pub fault: Option<FaultId>,
    run: fn(&Circuit) -> Circuit,
}

impl Pass {
    pub fn apply(&self, c: &Circuit) -> Circuit {
        (self.run)(c)
    }
}

impl fmt::Debug for Pass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pass").field("name", &self.name).field("level", &self.level).field("fault", &self.fault).finish()
    }
}

fn stock_passes() -> Vec<Pass> {
    let p = |name, level, run| Pass { name, level, fault: None, run };
    vec![
        p("drop_identity_rotations", 1, drop_identity_rotations as fn(&Circuit) -> Circuit),
        p("cancel_inverses", 1, cancel_inverses),
        p("merge_rotations", 2, merge_rotations),
        p("commutative_cancellation", 2, commutative_cancellation),
        p("resynthesize_1q", 3, resynthesize_1q),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub stage: u8,
    pub round: usize,
    pub pass: &'static str,
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub level: u8,
    pub passes: Vec<Pass>,
}

impl Pipeline {
    pub fn new(level: u8) -> Result<Pipeline, OptError> {
        if level > MAX_LEVEL {
            return Err(OptError::InvalidLevel(level));
        }
        Ok(Pipeline { level, passes: stock_passes().into_iter().filter(|p| p.level <= level).collect() })
    }

    pub fn fault(&self) -> Option<FaultId> {
        self.passes.iter().find_map(|p| p.fault)
    }

    pub fn run(&self, c: &Circuit) -> Circuit {
        self.run_traced(c).0
    }

    pub fn run_traced(&self, c: &Circuit) -> (Circuit, Vec<TraceEntry>) {
        let mut cur = c.clone();
        let mut trace = Vec::new();
        for stage in 1..=self.level {
            for round in 0..MAX_ROUNDS {
                let start = cur.clone();
                for pass in self.passes.iter().filter(|p| p.level <= stage) {
                    let before = cur.len();
                    cur = pass.apply(&cur);
                    trace.push(TraceEntry { stage, round, pass: pass.name, before, after: cur.len() });
                }
                if cur == start {
                    break;
                }
            }
        }
        (cur, trace)
    }
}

/// Optimize `c` at `level` with the stock passes.
pub fn optimize(c: &Circuit, level: u8) -> Result<Circuit, OptError> {
    Ok(Pipeline::new(level)?.run(c))
}

/// Replace the pass targeted by `fault` with its broken twin.
pub fn inject_fault(pipeline: &Pipeline, fault: FaultId) -> Pipeline {
    let mut out = pipeline.clone();
    for p in &mut out.passes {
        if p.name == fault.target_pass() {
            p.fault = Some(fault);
            p.run = fault.faulty();
        }
    }
    out
}

/// Pipelines for levels 0..=3, optionally with one fault injected.
pub fn pipelines(fault: Option<FaultId>) -> Vec<Pipeline> {
    (0..=MAX_LEVEL)
        .map(|l| {
            let p = Pipeline::new(l).unwrap();
            match fault {
                Some(f) => inject_fault(&p, f),
                None => p,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{fidelity, run_dense};
    use GateKind::*;

    #[test]
    fn level_contents() {
        assert!(Pipeline::new(0).unwrap().passes.is_empty());
        assert_eq!(Pipeline::new(1).unwrap().passes.len(), 2);
        assert_eq!(Pipeline::new(3).unwrap().passes.len(), 5);
        assert_eq!(Pipeline::new(4).unwrap_err(), OptError::InvalidLevel(4));
        for l in 1..=3 {
            let lower: Vec<&str> = Pipeline::new(l - 1).unwrap().passes.iter().map(|p| p.name).collect();
            let upper: Vec<&str> = Pipeline::new(l).unwrap().passes.iter().map(|p| p.name).collect();
            assert!(lower.iter().all(|n| upper.contains(n)));
        }
    }

    #[test]
    fn level_examples() {
        let c = Circuit::with_ops(2, vec![Op::new(H, &[0]), Op::new(H, &[0]), Op::rot(Rx, 0.0, &[1])]);
        assert_eq!(optimize(&c, 0).unwrap(), c);
        assert!(optimize(&c, 1).unwrap().is_empty());
    }

    #[test]
    fn faults_change_witness_semantics() {
        for f in FaultId::ALL {
            let w = f.witness();
            let clean = run_dense(&w).unwrap();
            let broken = inject_fault(&Pipeline::new(3).unwrap(), f);
            assert_eq!(broken.fault(), Some(f));
            let out = run_dense(&broken.run(&w)).unwrap();
            assert!(fidelity(&clean, &out).unwrap() < 1.0 - 1e-6, "{f}");
            let ok = run_dense(&optimize(&w, 3).unwrap()).unwrap();
            assert!(fidelity(&clean, &ok).unwrap() >= 1.0 - 1e-9, "{f}");
        }
        assert_eq!("FAULT_NOPE".parse::<FaultId>(), Err(OptError::UnknownFault("FAULT_NOPE".into())));
        assert_eq!("FAULT_DROP_T".parse::<FaultId>(), Ok(FaultId::DropT));
    }

    #[test]
    fn trace_reports_counts() {
        let c = Circuit::with_ops(1, vec![Op::new(H, &[0]), Op::new(H, &[0])]);
        let (out, trace) = Pipeline::new(2).unwrap().run_traced(&c);
        assert!(out.is_empty());
        assert!(trace.iter().any(|t| t.pass == "cancel_inverses" && t.before == 2 && t.after == 0));
    }
}
