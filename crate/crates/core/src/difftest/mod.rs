//! Differential testing: run each lowered variant through every configured
//! (optimization level, backend) cell and compare cells with the statevector
//! fidelity oracle.

pub mod adapter;
pub mod campaign;
pub mod ks;
pub mod minimize;
pub mod selftest;

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::lang::{lower, LowerError, Program, DEFAULT_FUEL};
use crate::optimizer::{pipelines, FaultId, Pipeline, MAX_LEVEL};
use crate::simulator::{fidelity, run_dense, run_unitary, Statevector};

pub use adapter::{AdapterClient, AdapterError};
pub use campaign::{run_campaign, run_campaign_on, CampaignConfig, CampaignError, CampaignReport, DiffReport};
pub use ks::{ks_experiment, ks_two_sample, KsError, KsResult, KsRow};
pub use minimize::{minimize_failure, MinimizeError};

pub const DEFAULT_EPSILON: f64 = 1e-9;
pub const DEFAULT_CELL_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Unitary,
    External,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Dense => "dense",
            Backend::Unitary => "unitary",
            Backend::External => "external",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub level: u8,
    pub backend: Backend,
}

impl CellId {
    pub const fn new(level: u8, backend: Backend) -> CellId {
        CellId { level, backend }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.level, self.backend)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("invalid rule {id}: {reason}")]
    InvalidRule { id: String, reason: &'static str },
    #[error("levels must be 0..=k for some k <= 3, got {0:?}")]
    InvalidLevels(Vec<u8>),
    #[error("backend list must contain dense and no duplicates, got {0:?}")]
    InvalidBackends(Vec<Backend>),
    #[error("external backend requested without an adapter")]
    MissingAdapter,
}

/// Compare two cells; the expectation is fidelity 1 within ε.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRule {
    pub id: String,
    pub lhs: CellId,
    pub rhs: CellId,
}

impl ComparisonRule {
    pub fn new(id: impl Into<String>, lhs: CellId, rhs: CellId) -> Result<ComparisonRule, DiffError> {
        let id = id.into();
        if lhs == rhs {
            return Err(DiffError::InvalidRule { id, reason: "lhs and rhs are the same cell" });
        }
        if lhs.backend != rhs.backend && (lhs.level != 0 || rhs.level != 0) {
            return Err(DiffError::InvalidRule { id, reason: "cross-backend rules must compare level 0" });
        }
        Ok(ComparisonRule { id, lhs, rhs })
    }
}

fn check_levels(levels: &[u8]) -> Result<(), DiffError> {
    let ok = !levels.is_empty()
        && levels.len() <= MAX_LEVEL as usize + 1
        && levels.iter().enumerate().all(|(i, &l)| l as usize == i);
    if ok {
        Ok(())
    } else {
        Err(DiffError::InvalidLevels(levels.to_vec()))
    }
}

/// R1 compares the two in-repo backends at level 0; R2.. chain adjacent
/// dense levels. With an external backend, the next rule compares it against
/// dense at level 0 and the rest chain adjacent external levels.
pub fn default_rules(levels: &[u8], backends: &[Backend], ext_levels: &[u8]) -> Result<Vec<ComparisonRule>, DiffError> {
    use Backend::*;
    check_levels(levels)?;
    let mut rules = Vec::new();
    if backends.contains(&Unitary) {
        rules.push(ComparisonRule::new("R1", CellId::new(0, Dense), CellId::new(0, Unitary))?);
    }
    for w in levels.windows(2) {
        rules.push(ComparisonRule::new(format!("R{}", w[1] + 1), CellId::new(w[0], Dense), CellId::new(w[1], Dense))?);
    }
    if backends.contains(&External) {
        check_levels(ext_levels)?;
        let base = MAX_LEVEL as usize + 2;
        rules.push(ComparisonRule::new(format!("R{base}"), CellId::new(0, Dense), CellId::new(0, External))?);
        for (i, w) in ext_levels.windows(2).enumerate() {
            let id = format!("R{}", base + 1 + i);
            rules.push(ComparisonRule::new(id, CellId::new(w[0], External), CellId::new(w[1], External))?);
        }
    }
    Ok(rules)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Mismatch { fidelity: f64 },
    Crash { side: Side, error: String },
    Timeout { side: Side },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_mismatch(&self) -> bool {
        matches!(self, Verdict::Mismatch { .. })
    }
}

/// One computed cell of the variant matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Ok { circuit: Circuit, sv: Statevector },
    Crash(String),
    Timeout,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariantMatrix {
    pub cells: BTreeMap<CellId, Cell>,
}

impl VariantMatrix {
    pub fn statevector(&self, id: CellId) -> Option<&Statevector> {
        match self.cells.get(&id) {
            Some(Cell::Ok { sv, .. }) => Some(sv),
            _ => None,
        }
    }

    pub fn circuit(&self, id: CellId) -> Option<&Circuit> {
        match self.cells.get(&id) {
            Some(Cell::Ok { circuit, .. }) => Some(circuit),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub rule: ComparisonRule,
    pub verdict: Verdict,
    /// Present whenever both cells produced a statevector.
    pub fidelity: Option<f64>,
}

/// Pass iff fidelity ≥ 1 − ε. Rules whose cells are absent are skipped.
pub fn evaluate_rules(matrix: &VariantMatrix, rules: &[ComparisonRule], eps: f64) -> Vec<Evaluation> {
    let mut out = Vec::with_capacity(rules.len());
    for rule in rules {
        let (Some(l), Some(r)) = (matrix.cells.get(&rule.lhs), matrix.cells.get(&rule.rhs)) else {
            continue;
        };
        let side_failure = |cell: &Cell, side| match cell {
            Cell::Timeout => Some(Verdict::Timeout { side }),
            Cell::Crash(e) => Some(Verdict::Crash { side, error: e.clone() }),
            Cell::Ok { .. } => None,
        };
        let (verdict, fid) = if let Some(v) = side_failure(l, Side::Lhs).or_else(|| side_failure(r, Side::Rhs)) {
            (v, None)
        } else {
            let (Cell::Ok { sv: a, .. }, Cell::Ok { sv: b, .. }) = (l, r) else { unreachable!() };
            match fidelity(a, b) {
                Ok(f) if f >= 1.0 - eps => (Verdict::Pass, Some(f)),
                Ok(f) => (Verdict::Mismatch { fidelity: f }, Some(f)),
                Err(e) => (Verdict::Crash { side: Side::Rhs, error: e.to_string() }, None),
            }
        };
        out.push(Evaluation { rule: rule.clone(), verdict, fidelity: fid });
    }
    out
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".to_string()
    }
}

/// Configured levels, backends and pipelines, shared across variants.
pub struct Harness {
    pub levels: Vec<u8>,
    pub backends: Vec<Backend>,
    pub ext_levels: Vec<u8>,
    pub rules: Vec<ComparisonRule>,
    pub fuel: u64,
    /// Checked after each cell finishes; cells are not preempted.
    pub cell_timeout: Duration,
    pipelines: Vec<Pipeline>,
    adapter: Option<Mutex<AdapterClient>>,
}

impl Harness {
    pub fn new(levels: &[u8], backends: &[Backend], fault: Option<FaultId>) -> Result<Harness, DiffError> {
        check_levels(levels)?;
        let mut uniq = backends.to_vec();
        uniq.sort();
        uniq.dedup();
        if !backends.contains(&Backend::Dense) || uniq.len() != backends.len() {
            return Err(DiffError::InvalidBackends(backends.to_vec()));
        }
        if backends.contains(&Backend::External) {
            return Err(DiffError::MissingAdapter);
        }
        Ok(Harness {
            levels: levels.to_vec(),
            backends: backends.to_vec(),
            ext_levels: Vec::new(),
            rules: default_rules(levels, backends, &[])?,
            fuel: DEFAULT_FUEL,
            cell_timeout: DEFAULT_CELL_TIMEOUT,
            pipelines: pipelines(fault),
            adapter: None,
        })
    }

    /// Levels 0–3 on the dense and unitary backends.
    pub fn standard(fault: Option<FaultId>) -> Harness {
        Harness::new(&[0, 1, 2, 3], &[Backend::Dense, Backend::Unitary], fault).expect("standard configuration")
    }

    /// Attach an external backend that runs the in-repo optimized circuits at
    /// `ext_levels`.
    pub fn with_adapter(mut self, client: AdapterClient, ext_levels: &[u8]) -> Result<Harness, DiffError> {
        check_levels(ext_levels)?;
        if ext_levels.len() > self.levels.len() {
            return Err(DiffError::InvalidLevels(ext_levels.to_vec()));
        }
        self.backends.push(Backend::External);
        self.ext_levels = ext_levels.to_vec();
        self.rules = default_rules(&self.levels, &self.backends, ext_levels)?;
        self.adapter = Some(Mutex::new(client));
        Ok(self)
    }

    pub fn fault(&self) -> Option<FaultId> {
        self.pipelines.iter().find_map(|p| p.fault())
    }

    pub fn cell_ids(&self) -> Vec<CellId> {
        let mut ids = Vec::new();
        for &level in &self.levels {
            for &b in &self.backends {
                if b != Backend::External || self.ext_levels.contains(&level) {
                    ids.push(CellId::new(level, b));
                }
            }
        }
        ids
    }

    /// Lower once, optimize per level, then run every backend on the
    /// optimized circuit. Fuel exhaustion marks every cell as timed out.
    pub fn build_variant_matrix(&self, p: &Program) -> VariantMatrix {
        match lower(p, self.fuel) {
            Ok(c) => self.matrix_for_circuit(&c),
            Err(LowerError::FuelExhausted { .. }) => {
                VariantMatrix { cells: self.cell_ids().into_iter().map(|id| (id, Cell::Timeout)).collect() }
            }
        }
    }

    pub fn matrix_for_circuit(&self, c: &Circuit) -> VariantMatrix {
        self.cells_for_circuit(c, &self.cell_ids())
    }

    /// Compute only the listed cells.
    pub fn cells_for_circuit(&self, c: &Circuit, ids: &[CellId]) -> VariantMatrix {
        let mut cells = BTreeMap::new();
        for &level in &self.levels {
            let wanted: Vec<CellId> = ids.iter().copied().filter(|id| id.level == level).collect();
            if wanted.is_empty() {
                continue;
            }
            let start = Instant::now();
            let optimized = catch_unwind(AssertUnwindSafe(|| self.pipelines[level as usize].run(c)))
                .map_err(panic_message)
                .and_then(|o| o.validate().map(|_| o).map_err(|e| format!("optimizer produced invalid circuit: {e}")));
            let opt_time = start.elapsed();
            for id in wanted {
                let cell = match &optimized {
                    Err(e) => Cell::Crash(e.clone()),
                    Ok(o) => {
                        let t0 = Instant::now();
                        let sv = self.run_backend(id.backend, o);
                        if opt_time + t0.elapsed() > self.cell_timeout {
                            Cell::Timeout
                        } else {
                            match sv {
                                Ok(sv) => Cell::Ok { circuit: o.clone(), sv },
                                Err(e) => Cell::Crash(e),
                            }
                        }
                    }
                };
                cells.insert(id, cell);
            }
        }
        VariantMatrix { cells }
    }

    pub fn run_backend(&self, backend: Backend, c: &Circuit) -> Result<Statevector, String> {
        match backend {
            Backend::Dense => catch_unwind(|| run_dense(c)).map_err(panic_message)?.map_err(|e| e.to_string()),
            Backend::Unitary => catch_unwind(|| run_unitary(c)).map_err(panic_message)?.map_err(|e| e.to_string()),
            Backend::External => match &self.adapter {
                None => Err(DiffError::MissingAdapter.to_string()),
                Some(a) => {
                    let mut guard = a.lock().unwrap_or_else(|e| e.into_inner());
                    guard.statevector(c).map_err(|e| e.to_string())
                }
            },
        }
    }

    pub fn evaluate(&self, matrix: &VariantMatrix, eps: f64) -> Vec<Evaluation> {
        evaluate_rules(matrix, &self.rules, eps)
    }

    /// Evaluate one rule on `c`, computing only the two cells it needs.
    pub fn evaluate_rule_on(&self, c: &Circuit, rule: &ComparisonRule, eps: f64) -> Evaluation {
        let m = self.cells_for_circuit(c, &[rule.lhs, rule.rhs]);
        evaluate_rules(&m, std::slice::from_ref(rule), eps).pop().expect("rule cells computed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Op;
    use crate::gate::GateKind::*;
    use crate::lang::parse;

    fn bell() -> Program {
        parse("qubits 2\nh q[0]\ncx q[0], q[1]\n").unwrap()
    }

    #[test]
    fn rule_table() {
        let rules = default_rules(&[0, 1, 2, 3], &[Backend::Dense, Backend::Unitary], &[]).unwrap();
        let ids: Vec<&str> = rules.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["R1", "R2", "R3", "R4"]);
        assert_eq!(rules[0].rhs, CellId::new(0, Backend::Unitary));
        assert_eq!((rules[3].lhs.level, rules[3].rhs.level), (2, 3));
        let ext = default_rules(&[0, 1, 2, 3], &[Backend::Dense, Backend::External], &[0, 1]).unwrap();
        let ids: Vec<&str> = ext.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["R2", "R3", "R4", "R5", "R6"]);
        assert!(ComparisonRule::new("x", CellId::new(1, Backend::Dense), CellId::new(1, Backend::Unitary)).is_err());
        assert!(ComparisonRule::new("x", CellId::new(1, Backend::Dense), CellId::new(1, Backend::Dense)).is_err());
        assert!(default_rules(&[0, 2], &[Backend::Dense], &[]).is_err());
    }

    #[test]
    fn bell_matrix_all_pass() {
        let h = Harness::standard(None);
        let m = h.build_variant_matrix(&bell());
        assert_eq!(m.cells.len(), 8);
        let svs: Vec<&Statevector> = m.cells.keys().map(|&id| m.statevector(id).unwrap()).collect();
        for a in &svs {
            for b in &svs {
                assert!(fidelity(a, b).unwrap() >= 1.0 - 1e-12);
            }
        }
        let ev = h.evaluate(&m, DEFAULT_EPSILON);
        assert_eq!(ev.len(), 4);
        assert!(ev.iter().all(|e| e.verdict.is_pass()));
    }

    #[test]
    fn dead_loop_times_out_everywhere() {
        let p = parse("qubits 1\nwhile 1 {\n  h q[0]\n}\n").unwrap();
        let h = Harness::standard(None);
        let m = h.build_variant_matrix(&p);
        assert_eq!(m.cells.len(), 8);
        assert!(m.cells.values().all(|c| *c == Cell::Timeout));
        let ev = h.evaluate(&m, DEFAULT_EPSILON);
        assert!(ev.iter().all(|e| e.verdict == Verdict::Timeout { side: Side::Lhs }));
    }

    #[test]
    fn drop_t_fault_splits_level_zero_from_one() {
        let h = Harness::standard(Some(FaultId::DropT));
        let m = h.matrix_for_circuit(&FaultId::DropT.witness());
        let (a, b) = (CellId::new(0, Backend::Dense), CellId::new(1, Backend::Dense));
        assert!(fidelity(m.statevector(a).unwrap(), m.statevector(b).unwrap()).unwrap() < 1.0 - 1e-6);
        let ev = h.evaluate(&m, DEFAULT_EPSILON);
        let r2 = ev.iter().find(|e| e.rule.id == "R2").unwrap();
        assert!(r2.verdict.is_mismatch());
    }

    #[test]
    fn boundary_is_inclusive() {
        let eps = 1e-9;
        let n = 1;
        let a = Statevector::zero_state(n);
        let f = 1.0 - eps / 2.0;
        let mut b = Statevector::zero_state(n);
        b.amplitudes[0] = num_complex::Complex64::new(f, 0.0);
        b.amplitudes[1] = num_complex::Complex64::new((1.0 - f * f).sqrt(), 0.0);
        let mut m = VariantMatrix::default();
        let c = Circuit::new(n);
        m.cells.insert(CellId::new(0, Backend::Dense), Cell::Ok { circuit: c.clone(), sv: a });
        m.cells.insert(CellId::new(0, Backend::Unitary), Cell::Ok { circuit: c, sv: b });
        let rules = default_rules(&[0], &[Backend::Dense, Backend::Unitary], &[]).unwrap();
        let ev = evaluate_rules(&m, &rules, eps);
        assert_eq!(ev[0].verdict, Verdict::Pass);
        assert_eq!(evaluate_rules(&m, &rules, eps / 4.0)[0].verdict, Verdict::Mismatch { fidelity: ev[0].fidelity.unwrap() });
    }

    #[test]
    fn unitary_budget_is_a_crash_cell() {
        let c = Circuit::with_ops(11, vec![Op::new(H, &[10])]);
        let h = Harness::standard(None);
        let m = h.cells_for_circuit(&c, &[CellId::new(0, Backend::Dense), CellId::new(0, Backend::Unitary)]);
        assert!(matches!(m.cells[&CellId::new(0, Backend::Unitary)], Cell::Crash(_)));
        let ev = h.evaluate(&m, DEFAULT_EPSILON);
        assert!(matches!(ev[0].verdict, Verdict::Crash { side: Side::Rhs, .. }));
    }
}
