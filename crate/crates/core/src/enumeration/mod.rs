//! Variant enumeration: classical partitions per scope, sampled quantum
//! fillings, and global deduplication by quantum-α canonical key.

mod classical;
mod partitions;
mod quantum;

use std::collections::HashSet;

use num_bigint::{BigUint, RandBigInt};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::lang::visit::{walk_sites_mut, SiteMut};
use crate::lang::{lower_capped, LangError, LowerError, Program, DEFAULT_FUEL};
use crate::rng::{stream, tag};
use crate::skeleton::{extract, ClassicalAssignment, QuantumAssignment, Skeleton};

pub use classical::{enumerate_classical, naive_count, scope_valid_count, ClassicalSpace};
pub use partitions::{enumerate_partitions, partition_count, stirling2, PartitionMode, PartitionRGS, Partitions};
pub use quantum::{canonical_qubit_key, is_legal_fill, rejection_budget, sample_quantum, AngleSource, ANGLE_PALETTE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnumError {
    #[error("no partition of {items} holes into {blocks} non-empty blocks")]
    EmptyEnumeration { items: usize, blocks: usize },
    #[error("classical hole {hole} has no eligible variable")]
    NoEligibleVariable { hole: usize },
    #[error("quantum fill rejected {attempts} times")]
    RejectionExhausted { attempts: usize },
    #[error("no filling for {kind} hole {hole}")]
    IncompleteAssignment { kind: &'static str, hole: usize },
    #[error("filled program is invalid: {0}")]
    InvalidFill(LangError),
    #[error("invalid enumeration config: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnumerationConfig {
    pub partition_mode: PartitionMode,
    pub angle_source: AngleSource,
    pub quantum_samples_per_classical: usize,
    /// Upper bound on emitted variants per seed.
    pub budget: usize,
    pub rng_seed: u64,
    pub fuel: u64,
    /// Variants whose lowered circuit is longer than this are skipped.
    pub max_circuit_gates: usize,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig {
            partition_mode: PartitionMode::ExactBlocks,
            angle_source: AngleSource::Uniform,
            quantum_samples_per_classical: 1,
            budget: 4096,
            rng_seed: 0,
            fuel: DEFAULT_FUEL,
            max_circuit_gates: 1024,
        }
    }
}

impl EnumerationConfig {
    pub fn validate(&self) -> Result<(), EnumError> {
        if self.budget == 0 {
            return Err(EnumError::Config("budget must be at least 1".into()));
        }
        if self.quantum_samples_per_classical == 0 {
            return Err(EnumError::Config("quantum_samples_per_classical must be at least 1".into()));
        }
        if self.fuel == 0 {
            return Err(EnumError::Config("fuel must be positive".into()));
        }
        Ok(())
    }
}

/// Write `classical` and `quantum` into the holes of `sk`.
pub fn fill_holes(sk: &Skeleton, classical: &ClassicalAssignment, quantum: &QuantumAssignment) -> Result<Program, EnumError> {
    let mut p = sk.base.clone();
    let (mut c, mut a, mut q) = (0, 0, 0);
    let mut missing = None;
    walk_sites_mut(&mut p, |site| match site {
        SiteMut::Var { name, .. } => {
            c += 1;
            match classical.get(&c) {
                Some(v) => *name = v.clone(),
                None => {
                    missing.get_or_insert(("classical", c));
                }
            }
        }
        SiteMut::Angle { value, .. } => {
            a += 1;
            match quantum.angles.get(&a) {
                Some(v) => *value = *v,
                None => {
                    missing.get_or_insert(("angle", a));
                }
            }
        }
        SiteMut::Qubit { value, .. } => {
            q += 1;
            match quantum.qubits.get(&q) {
                Some(v) => *value = *v,
                None => {
                    missing.get_or_insert(("qubit", q));
                }
            }
        }
    });
    if let Some((kind, hole)) = missing {
        return Err(EnumError::IncompleteAssignment { kind, hole });
    }
    p.validate().map_err(EnumError::InvalidFill)?;
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariantSpec {
    pub seed_id: String,
    pub index: usize,
    /// Rank of the classical assignment in enumeration order.
    pub classical_rank: String,
    /// Which quantum draw for that classical assignment.
    pub sample: usize,
    pub classical: ClassicalAssignment,
    pub quantum: QuantumAssignment,
    /// Hex of the lowered circuit's canonical qubit key.
    pub canonical_key: String,
}

impl VariantSpec {
    pub fn id(&self) -> String {
        format!("{}-{:05}", self.seed_id, self.index)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub spec: VariantSpec,
    pub program: Program,
    pub circuit: Circuit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScopeStats {
    pub scope: usize,
    pub vars: usize,
    /// Classical holes located in the scope or its descendants.
    pub holes: usize,
    pub partitions: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnumerationStats {
    pub seed: String,
    pub emitted: usize,
    pub naive: String,
    pub reduction_rate: f64,
    pub per_scope: Vec<ScopeStats>,
    pub scope_valid: String,
    pub classical_total: String,
    pub classical_visited: usize,
    pub duplicates: usize,
    pub timeouts: usize,
    pub oversized: usize,
    pub rejected: usize,
}

pub fn scope_stats(sk: &Skeleton, mode: PartitionMode) -> Vec<ScopeStats> {
    sk.scopes
        .scopes
        .iter()
        .filter(|s| !s.vars.is_empty())
        .map(|s| {
            let holes = sk.eligible_holes(s.id).len();
            ScopeStats {
                scope: s.id,
                vars: s.vars.len(),
                holes,
                partitions: partition_count(holes, s.vars.len(), mode).to_string(),
            }
        })
        .collect()
}

pub fn reduction_rate(emitted: usize, naive: &BigUint) -> f64 {
    let naive = naive.to_f64().unwrap_or(f64::INFINITY);
    1.0 - emitted as f64 / naive
}

/// Classical ranks to visit: all of them when the space fits the budget,
/// otherwise distinct uniform draws (up to four times the budget, so that
/// duplicates and discarded variants can be replaced).
fn rank_schedule(total: &BigUint, budget: usize, rng_seed: u64) -> Vec<BigUint> {
    let b = BigUint::from(budget);
    if total <= &b {
        let n = total.to_usize().unwrap();
        return (0..n).map(BigUint::from).collect();
    }
    let cap = (BigUint::from(budget) * 4u32).min(total.clone()).to_usize().unwrap();
    let mut rng = stream(rng_seed, &[tag("ranks")]);
    let mut seen = HashSet::with_capacity(cap);
    let mut out = Vec::with_capacity(cap);
    while out.len() < cap {
        let r = rng.gen_biguint_below(total);
        if seen.insert(r.clone()) {
            out.push(r);
        }
    }
    out
}

/// Enumerate non-equivalent variants of `p`, at most `cfg.budget` of them.
pub fn enumerate_variants(p: &Program, cfg: &EnumerationConfig) -> Result<(Vec<Variant>, EnumerationStats), EnumError> {
    cfg.validate()?;
    let sk = extract(p);
    let mut space = ClassicalSpace::new(&sk, cfg.partition_mode)?;
    let naive = naive_count(&sk);
    let mut stats = EnumerationStats {
        seed: p.name.clone(),
        emitted: 0,
        naive: naive.to_string(),
        reduction_rate: 0.0,
        per_scope: scope_stats(&sk, cfg.partition_mode),
        scope_valid: scope_valid_count(&sk).to_string(),
        classical_total: space.total().to_string(),
        classical_visited: 0,
        duplicates: 0,
        timeouts: 0,
        oversized: 0,
        rejected: 0,
    };
    let mut seen_keys = HashSet::new();
    let mut out = Vec::new();
    'ranks: for rank in rank_schedule(space.total(), cfg.budget, cfg.rng_seed) {
        stats.classical_visited += 1;
        let classical = space.unrank(&rank);
        let mut parts = vec![tag("quantum")];
        parts.extend(rank.to_u64_digits());
        for sample in 0..cfg.quantum_samples_per_classical {
            if out.len() >= cfg.budget {
                break 'ranks;
            }
            let mut rng_parts = parts.clone();
            rng_parts.push(sample as u64);
            let mut rng = stream(cfg.rng_seed, &rng_parts);
            let quantum = match sample_quantum(&sk, cfg.angle_source, &mut rng) {
                Ok(q) => q,
                Err(_) => {
                    stats.rejected += 1;
                    continue;
                }
            };
            let program = fill_holes(&sk, &classical, &quantum)?;
            let circuit = match lower_capped(&program, cfg.fuel, cfg.max_circuit_gates) {
                Ok(Some(c)) => c,
                Ok(None) => {
                    stats.oversized += 1;
                    continue;
                }
                Err(LowerError::FuelExhausted { .. }) => {
                    stats.timeouts += 1;
                    continue;
                }
            };
            let key = canonical_qubit_key(&circuit);
            if !seen_keys.insert(key.clone()) {
                stats.duplicates += 1;
                continue;
            }
            let spec = VariantSpec {
                seed_id: p.name.clone(),
                index: out.len(),
                classical_rank: rank.to_string(),
                sample,
                classical: classical.clone(),
                quantum,
                canonical_key: hex::encode(key),
            };
            out.push(Variant { spec, program, circuit });
        }
    }
    stats.emitted = out.len();
    stats.reduction_rate = reduction_rate(out.len(), &naive);
    Ok((out, stats))
}
