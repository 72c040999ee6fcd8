//! Harness self-checks: every registered fault must be caught, a clean
//! campaign must stay silent, and the measurement baseline must show its
//! known false positives.

use serde::Serialize;

use crate::corpus;
use crate::lang::{lower, parse, DEFAULT_FUEL};
use crate::optimizer::FaultId;
use crate::simulator::{run_dense, run_unitary};

use super::ks::ks_experiment;
use super::{minimize_failure, run_campaign, CampaignConfig, Harness, Verdict, DEFAULT_EPSILON};

/// Mismatches at least this far from 1 count as detections.
pub const DETECTION_MARGIN: f64 = 1e-6;
pub const KS_THRESHOLD: f64 = 0.15;
pub const KS_SHOTS: [u64; 3] = [100, 1000, 10000];
pub const KS_TRIALS: usize = 50;

/// Three qubits in uniform superposition.
pub const UNIFORM_SOURCE: &str = "qubits 3\nh q[0]\nh q[1]\nh q[2]\n";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct SelftestOptions {
    pub quick: bool,
    /// Pretend this fault shipped enabled; the clean-campaign check must then fail.
    pub injected: Option<FaultId>,
    pub jobs: Option<usize>,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

/// Campaign over the fault's witness seed; the first detection is minimized
/// and the result checked for 1-minimality.
pub fn fault_sensitivity(fault: FaultId, budget: usize, jobs: Option<usize>) -> Check {
    let name = format!("fault {fault}");
    let mut cfg = CampaignConfig { fault: Some(fault), jobs, ks_shots: vec![], ks_pairs_per_seed: 0, ..Default::default() };
    cfg.seeds = vec![format!("corpus:{}", corpus::witness_seed(fault))];
    cfg.enumeration.budget = budget;
    let report = match run_campaign(&cfg) {
        Ok(r) => r,
        Err(e) => return check(name, false, e.to_string()),
    };
    let hit = report.reports.iter().find(|r| matches!(r.verdict, Verdict::Mismatch { fidelity } if fidelity <= 1.0 - DETECTION_MARGIN));
    let Some(hit) = hit else {
        return check(name, false, format!("no mismatch in {} variants", report.totals.variants));
    };
    let harness = Harness::standard(Some(fault));
    let rule = harness.rules.iter().find(|r| r.id == hit.rule).expect("known rule").clone();
    let circuit = match parse(&hit.source).map(|p| lower(&p, DEFAULT_FUEL)) {
        Ok(Ok(c)) => c,
        _ => return check(name, false, format!("cannot rebuild variant {}", hit.variant)),
    };
    let minimal = match minimize_failure(&harness, &circuit, &rule, DEFAULT_EPSILON) {
        Ok(m) => m,
        Err(e) => return check(name, false, e.to_string()),
    };
    let one_minimal = (0..minimal.len()).all(|i| {
        let mut c = minimal.clone();
        c.ops.remove(i);
        !harness.evaluate_rule_on(&c, &rule, DEFAULT_EPSILON).verdict.is_mismatch()
    });
    let detail = format!(
        "{} mismatches on {} ({} variants), first fidelity {:.6}, minimized {} -> {} gates",
        report.totals.mismatches,
        hit.rule,
        report.totals.variants,
        hit.fidelity.unwrap_or(f64::NAN),
        circuit.len(),
        minimal.len()
    );
    check(name, one_minimal, detail)
}

pub fn clean_campaign(injected: Option<FaultId>, seeds: Vec<String>, budget: usize, jobs: Option<usize>) -> Check {
    let mut cfg = CampaignConfig { seeds, fault: injected, jobs, ks_shots: vec![], ks_pairs_per_seed: 0, ..Default::default() };
    cfg.enumeration.budget = budget;
    match run_campaign(&cfg) {
        Ok(r) => check(
            "clean campaign",
            !r.has_findings(),
            format!("{} evaluations, {} mismatches, {} crashes", r.totals.evaluations, r.totals.mismatches, r.totals.crashes),
        ),
        Err(e) => check("clean campaign", false, e.to_string()),
    }
}

/// Equivalent statevectors sampled with independent streams: some trial at
/// the smallest shot count should exceed the threshold, and the median K
/// should not grow with the shot count.
pub fn ks_disagreement(rng_seed: u64) -> Check {
    let c = lower(&parse(UNIFORM_SOURCE).expect("uniform source"), DEFAULT_FUEL).expect("lowers");
    let (a, b) = (run_dense(&c).expect("dense"), run_unitary(&c).expect("unitary"));
    let rows = ks_experiment(&a, &b, &KS_SHOTS, KS_TRIALS, KS_THRESHOLD, rng_seed);
    let false_positive = rows[0].false_positives > 0;
    let monotone = rows.windows(2).all(|w| w[1].median_k <= w[0].median_k);
    let detail = rows
        .iter()
        .map(|r| format!("shots {}: {}/{} above t, median K {:.4}", r.shots, r.false_positives, r.trials, r.median_k))
        .collect::<Vec<_>>()
        .join("; ");
    check("measurement baseline", false_positive && monotone, detail)
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<Check> {
    let budget = if opts.quick { 60 } else { 200 };
    let mut out: Vec<Check> = FaultId::ALL.iter().map(|&f| fault_sensitivity(f, budget, opts.jobs)).collect();
    let seeds = if opts.quick {
        corpus::SOURCES.iter().take(8).map(|(n, _)| format!("corpus:{n}")).collect()
    } else {
        vec!["corpus".to_string()]
    };
    out.push(clean_campaign(opts.injected, seeds, if opts.quick { 40 } else { 200 }, opts.jobs));
    out.push(ks_disagreement(0));
    out
}
