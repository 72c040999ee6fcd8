//! Campaigns: enumerate every seed, evaluate the rule table on each variant,
//! and aggregate verdicts, reduction statistics and the K-S baseline.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::Circuit;
use crate::enumeration::{enumerate_variants, EnumerationConfig, EnumerationStats, Variant};
use crate::lang::{parse, render, Program};
use crate::optimizer::FaultId;
use crate::rng::{derive_seed, tag};
use crate::simulator::{fidelity, run_dense, run_unitary, sample, Statevector};

use super::adapter::{AdapterClient, AdapterError};
use super::ks::{ks_row, ks_two_sample, KsResult, KsRow};
use super::{Backend, Cell, CellId, Evaluation, Harness, Verdict, DEFAULT_EPSILON};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    /// Program and arguments of the adapter process.
    pub command: Vec<String>,
    /// Levels whose optimized circuits the adapter also runs.
    pub levels: Vec<u8>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig { command: Vec::new(), levels: vec![0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Seed sources: `corpus`, `corpus:<name>`, a `.qh` file, or a directory
    /// of `.qh` files.
    pub seeds: Vec<String>,
    pub enumeration: EnumerationConfig,
    pub epsilon: f64,
    pub levels: Vec<u8>,
    pub backends: Vec<Backend>,
    pub ks_shots: Vec<u64>,
    pub ks_threshold: f64,
    /// Variants per seed sampled for the K-S baseline.
    pub ks_pairs_per_seed: usize,
    pub fault: Option<FaultId>,
    pub rng_seed: u64,
    pub cell_timeout_secs: f64,
    /// Cap on detailed failure reports; group examples are always kept.
    pub max_reports: usize,
    pub artifacts_dir: Option<PathBuf>,
    pub adapter: Option<AdapterConfig>,
    /// Worker threads. Not part of the config digest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seeds: vec!["corpus".to_string()],
            enumeration: EnumerationConfig::default(),
            epsilon: DEFAULT_EPSILON,
            levels: vec![0, 1, 2, 3],
            backends: vec![Backend::Dense, Backend::Unitary],
            ks_shots: vec![100, 1000, 10000],
            ks_threshold: 0.15,
            ks_pairs_per_seed: 5,
            fault: None,
            rng_seed: 0,
            cell_timeout_secs: 5.0,
            max_reports: 100,
            artifacts_dir: None,
            adapter: None,
            jobs: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {0}")]
    Config(String),
    #[error("cannot load seed {source_name}: {message}")]
    Seed { source_name: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            return bad(format!("epsilon {} outside (0, 0.1)", self.epsilon));
        }
        if !(self.ks_threshold > 0.0 && self.ks_threshold < 1.0) {
            return bad(format!("ks_threshold {} outside (0, 1)", self.ks_threshold));
        }
        if self.ks_shots.contains(&0) {
            return bad("ks_shots entries must be positive".into());
        }
        if self.backends.contains(&Backend::External) {
            return bad("the external backend is configured through `adapter`".into());
        }
        if !(self.cell_timeout_secs > 0.0 && self.cell_timeout_secs.is_finite()) {
            return bad(format!("cell_timeout_secs {} must be positive", self.cell_timeout_secs));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if let Some(a) = &self.adapter {
            if a.command.is_empty() {
                return bad("adapter.command is empty".into());
            }
        }
        if self.seeds.is_empty() {
            return bad("no seeds configured".into());
        }
        self.enumeration.validate().map_err(|e| CampaignError::Config(e.to_string()))?;
        Harness::new(&self.levels, &self.backends, None).map_err(|e| CampaignError::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 over the config (without `jobs`) and every seed's source.
    pub fn digest(&self, seeds: &[Program]) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("jobs");
        }
        let sources: Vec<(String, String)> = seeds.iter().map(|p| (p.name.clone(), render(p))).collect();
        let doc = serde_json::json!({"config": v, "seeds": sources});
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }
}

fn load_file(path: &Path) -> Result<Program, CampaignError> {
    let err = |message: String| CampaignError::Seed { source_name: path.display().to_string(), message };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut p = parse(&text).map_err(|e| err(e.to_string()))?;
    p.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(p)
}

/// Resolve one seed source to programs, in a stable order.
pub fn load_seeds(source: &str) -> Result<Vec<Program>, CampaignError> {
    if source == "corpus" {
        return Ok(crate::corpus::builtin());
    }
    if let Some(name) = source.strip_prefix("corpus:") {
        return crate::corpus::builtin()
            .into_iter()
            .find(|p| p.name == name)
            .map(|p| vec![p])
            .ok_or_else(|| CampaignError::Seed { source_name: source.into(), message: "no such corpus seed".into() });
    }
    let path = Path::new(source);
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "qh"))
            .collect();
        files.sort();
        return files.iter().map(|f| load_file(f)).collect();
    }
    Ok(vec![load_file(path)?])
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Totals {
    pub variants: usize,
    pub evaluations: usize,
    pub passes: usize,
    pub mismatches: usize,
    pub crashes: usize,
    pub timeouts: usize,
    /// Variants dropped during enumeration because lowering ran out of fuel.
    pub enumeration_timeouts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleSummary {
    pub id: String,
    pub lhs: CellId,
    pub rhs: CellId,
    pub evaluations: usize,
    pub mismatches: usize,
    pub crashes: usize,
    pub timeouts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MismatchGroup {
    pub rule: String,
    pub seed: String,
    pub count: usize,
    pub min_fidelity: f64,
    pub example_variant: String,
    pub example_artifact: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedFailure {
    pub seed: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reduction {
    pub per_seed: Vec<EnumerationStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub dir: String,
    pub lhs_circuit: Option<String>,
    pub lhs_sv: Option<String>,
    pub rhs_circuit: Option<String>,
    pub rhs_sv: Option<String>,
}

/// Outcome of one rule on one variant, with enough data to replay it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffReport {
    pub variant: String,
    pub seed: String,
    pub rule: String,
    pub lhs: CellId,
    pub rhs: CellId,
    pub verdict: Verdict,
    pub fidelity: Option<f64>,
    pub ks: Vec<KsResult>,
    /// The variant program.
    pub source: String,
    pub artifacts: Option<ArtifactPaths>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignReport {
    pub config_digest: String,
    pub seeds: Vec<String>,
    pub totals: Totals,
    pub rules: Vec<RuleSummary>,
    pub reduction: Reduction,
    pub seed_failures: Vec<SeedFailure>,
    pub mismatch_groups: Vec<MismatchGroup>,
    pub reports: Vec<DiffReport>,
    pub ks_table: Vec<KsRow>,
}

impl CampaignReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn has_findings(&self) -> bool {
        self.totals.mismatches + self.totals.crashes > 0
    }
}

struct Outcome {
    evaluations: Vec<Evaluation>,
    /// K per configured shots setting, when sampled for the baseline.
    ks: Option<Vec<f64>>,
}

fn stream_seed(cfg: &CampaignConfig, variant: &str, extra: &[u64]) -> u64 {
    let mut parts = vec![tag("ks"), tag(variant)];
    parts.extend_from_slice(extra);
    derive_seed(cfg.rng_seed, &parts)
}

fn evaluate_variant(h: &Harness, cfg: &CampaignConfig, v: &Variant) -> Outcome {
    let matrix = h.matrix_for_circuit(&v.circuit);
    let evaluations = h.evaluate(&matrix, cfg.epsilon);
    let id = v.spec.id();
    let ks = (v.spec.index < cfg.ks_pairs_per_seed)
        .then(|| evaluations.iter().find(|e| e.rule.id == "R1" && e.verdict.is_pass()))
        .flatten()
        .map(|e| {
            let (a, b) = (matrix.statevector(e.rule.lhs).unwrap(), matrix.statevector(e.rule.rhs).unwrap());
            cfg.ks_shots
                .iter()
                .map(|&s| {
                    let sa = sample(a, s, stream_seed(cfg, &id, &[s, tag(Backend::Dense.name())]));
                    let sb = sample(b, s, stream_seed(cfg, &id, &[s, tag(Backend::Unitary.name())]));
                    ks_two_sample(&sa, &sb).expect("positive shots").k
                })
                .collect()
        });
    Outcome { evaluations, ks }
}

fn write_json(path: &Path, text: &str) -> Result<String, CampaignError> {
    fs::write(path, text)?;
    Ok(path.display().to_string())
}

fn build_report(
    h: &Harness,
    cfg: &CampaignConfig,
    v: &Variant,
    e: &Evaluation,
) -> Result<DiffReport, CampaignError> {
    let id = v.spec.id();
    let matrix = h.cells_for_circuit(&v.circuit, &[e.rule.lhs, e.rule.rhs]);
    let mut ks = Vec::new();
    if let (Some(a), Some(b)) = (matrix.statevector(e.rule.lhs), matrix.statevector(e.rule.rhs)) {
        for &s in &cfg.ks_shots {
            let sa = sample(a, s, stream_seed(cfg, &id, &[s, tag(&e.rule.id), 0]));
            let sb = sample(b, s, stream_seed(cfg, &id, &[s, tag(&e.rule.id), 1]));
            ks.push(ks_two_sample(&sa, &sb).expect("positive shots"));
        }
    }
    let source = render(&v.program);
    let artifacts = match &cfg.artifacts_dir {
        None => None,
        Some(root) => {
            let dir = root.join(&id);
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("variant.qh"), &source)?;
            let dump = |cell: CellId| -> Result<(Option<String>, Option<String>), CampaignError> {
                match matrix.cells.get(&cell) {
                    Some(Cell::Ok { circuit, sv }) => Ok((
                        Some(write_json(&dir.join(format!("{cell}.circuit.json")), &circuit.to_json())?),
                        Some(write_json(&dir.join(format!("{cell}.sv.json")), &sv.to_json())?),
                    )),
                    _ => Ok((None, None)),
                }
            };
            let (lhs_circuit, lhs_sv) = dump(e.rule.lhs)?;
            let (rhs_circuit, rhs_sv) = dump(e.rule.rhs)?;
            Some(ArtifactPaths { dir: dir.display().to_string(), lhs_circuit, lhs_sv, rhs_circuit, rhs_sv })
        }
    };
    Ok(DiffReport {
        variant: id,
        seed: v.spec.seed_id.clone(),
        rule: e.rule.id.clone(),
        lhs: e.rule.lhs,
        rhs: e.rule.rhs,
        verdict: e.verdict.clone(),
        fidelity: e.fidelity,
        ks,
        source,
        artifacts,
    })
}

fn make_harness(cfg: &CampaignConfig) -> Result<Harness, CampaignError> {
    let mut h = Harness::new(&cfg.levels, &cfg.backends, cfg.fault).map_err(|e| CampaignError::Config(e.to_string()))?;
    h.fuel = cfg.enumeration.fuel;
    h.cell_timeout = Duration::from_secs_f64(cfg.cell_timeout_secs);
    if let Some(a) = &cfg.adapter {
        let client = AdapterClient::spawn(&a.command)?;
        h = h.with_adapter(client, &a.levels).map_err(|e| CampaignError::Config(e.to_string()))?;
    }
    Ok(h)
}

/// Load the configured seeds and run the campaign.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    cfg.validate()?;
    let mut seeds = Vec::new();
    for s in &cfg.seeds {
        seeds.extend(load_seeds(s)?);
    }
    run_campaign_on(cfg, &seeds)
}

/// Run the campaign on already-loaded seeds. Work is spread over
/// `cfg.jobs` threads; the report does not depend on the thread count.
pub fn run_campaign_on(cfg: &CampaignConfig, seeds: &[Program]) -> Result<CampaignReport, CampaignError> {
    cfg.validate()?;
    let names: BTreeSet<&str> = seeds.iter().map(|p| p.name.as_str()).collect();
    if names.len() != seeds.len() {
        return Err(CampaignError::Config("seed names must be unique".into()));
    }
    let harness = make_harness(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| CampaignError::Config(e.to_string()))?;

    let mut totals = Totals::default();
    let mut rules: Vec<RuleSummary> = harness
        .rules
        .iter()
        .map(|r| RuleSummary { id: r.id.clone(), lhs: r.lhs, rhs: r.rhs, evaluations: 0, mismatches: 0, crashes: 0, timeouts: 0 })
        .collect();
    let mut per_seed = Vec::new();
    let mut seed_failures = Vec::new();
    let mut groups = Vec::new();
    let mut reports = Vec::new();
    let mut ks_values: Vec<Vec<f64>> = vec![Vec::new(); cfg.ks_shots.len()];

    for seed in seeds {
        let mut ecfg = cfg.enumeration.clone();
        ecfg.rng_seed = derive_seed(cfg.enumeration.rng_seed, &[tag(&seed.name)]);
        let (variants, stats) = match enumerate_variants(seed, &ecfg) {
            Ok(r) => r,
            Err(e) => {
                seed_failures.push(SeedFailure { seed: seed.name.clone(), error: e.to_string() });
                continue;
            }
        };
        totals.enumeration_timeouts += stats.timeouts;
        per_seed.push(stats);
        let outcomes: Vec<Outcome> = pool.install(|| variants.par_iter().map(|v| evaluate_variant(&harness, cfg, v)).collect());

        let mut seed_groups: BTreeMap<String, MismatchGroup> = BTreeMap::new();
        let mut wanted: Vec<(usize, usize)> = Vec::new();
        for (vi, (v, o)) in variants.iter().zip(&outcomes).enumerate() {
            totals.variants += 1;
            if let Some(ks) = &o.ks {
                for (slot, k) in ks_values.iter_mut().zip(ks) {
                    slot.push(*k);
                }
            }
            for (ei, e) in o.evaluations.iter().enumerate() {
                totals.evaluations += 1;
                let summary = rules.iter_mut().find(|r| r.id == e.rule.id).expect("known rule");
                summary.evaluations += 1;
                let mut report = false;
                match &e.verdict {
                    Verdict::Pass => totals.passes += 1,
                    Verdict::Timeout { .. } => {
                        totals.timeouts += 1;
                        summary.timeouts += 1;
                    }
                    Verdict::Crash { .. } => {
                        totals.crashes += 1;
                        summary.crashes += 1;
                        report = reports.len() + wanted.len() < cfg.max_reports;
                    }
                    Verdict::Mismatch { fidelity } => {
                        totals.mismatches += 1;
                        summary.mismatches += 1;
                        report = reports.len() + wanted.len() < cfg.max_reports;
                        let g = seed_groups.entry(e.rule.id.clone()).or_insert_with(|| {
                            report = true;
                            MismatchGroup {
                                rule: e.rule.id.clone(),
                                seed: seed.name.clone(),
                                count: 0,
                                min_fidelity: *fidelity,
                                example_variant: v.spec.id(),
                                example_artifact: None,
                            }
                        });
                        g.count += 1;
                        g.min_fidelity = g.min_fidelity.min(*fidelity);
                    }
                }
                if report {
                    wanted.push((vi, ei));
                }
            }
        }
        let built: Vec<Result<DiffReport, CampaignError>> = pool.install(|| {
            wanted.par_iter().map(|&(vi, ei)| build_report(&harness, cfg, &variants[vi], &outcomes[vi].evaluations[ei])).collect()
        });
        for r in built {
            let r = r?;
            if let Some(g) = seed_groups.get_mut(&r.rule) {
                if g.example_variant == r.variant && g.example_artifact.is_none() {
                    g.example_artifact = r.artifacts.as_ref().map(|a| a.dir.clone());
                }
            }
            reports.push(r);
        }
        groups.extend(seed_groups.into_values());
    }

    let ks_table = cfg
        .ks_shots
        .iter()
        .zip(&ks_values)
        .map(|(&s, ks)| ks_row(s, ks, &vec![true; ks.len()], cfg.ks_threshold))
        .collect();
    Ok(CampaignReport {
        config_digest: cfg.digest(seeds),
        seeds: seeds.iter().map(|p| p.name.clone()).collect(),
        totals,
        rules,
        reduction: Reduction { per_seed },
        seed_failures,
        mismatch_groups: groups,
        reports,
        ks_table,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("report has no artifacts for {0}")]
    MissingArtifact(&'static str),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad artifact: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot replay on {0}: {1}")]
    Backend(Backend, String),
}

fn replay_cell(path: Option<&String>, backend: Backend, side: &'static str) -> Result<Statevector, ReplayError> {
    let path = path.ok_or(ReplayError::MissingArtifact(side))?;
    let c = Circuit::from_json(&fs::read_to_string(path)?)?;
    let run = match backend {
        Backend::Dense => run_dense(&c),
        Backend::Unitary => run_unitary(&c),
        Backend::External => return Err(ReplayError::Backend(backend, "needs a live adapter".into())),
    };
    run.map_err(|e| ReplayError::Backend(backend, e.to_string()))
}

/// Re-run the dumped lhs/rhs circuits and recompute the fidelity.
pub fn replay(report: &DiffReport) -> Result<f64, ReplayError> {
    let a = report.artifacts.as_ref().ok_or(ReplayError::MissingArtifact("report"))?;
    let l = replay_cell(a.lhs_circuit.as_ref(), report.lhs.backend, "lhs")?;
    let r = replay_cell(a.rhs_circuit.as_ref(), report.rhs.backend, "rhs")?;
    fidelity(&l, &r).map_err(|e| ReplayError::Backend(report.rhs.backend, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::DEMO_SOURCE;

    fn demo_seed() -> Program {
        let mut p = parse(DEMO_SOURCE).unwrap();
        p.name = "demo".into();
        p
    }

    fn small_cfg() -> CampaignConfig {
        let mut cfg = CampaignConfig::default();
        cfg.enumeration.budget = 40;
        cfg.ks_shots = vec![100, 1000];
        cfg.ks_pairs_per_seed = 3;
        cfg
    }

    #[test]
    fn config_validation() {
        assert!(CampaignConfig::default().validate().is_ok());
        let mut c = CampaignConfig::default();
        c.epsilon = 0.2;
        assert!(c.validate().is_err());
        let mut c = CampaignConfig::default();
        c.ks_threshold = 1.0;
        assert!(c.validate().is_err());
        let mut c = CampaignConfig::default();
        c.levels = vec![0, 2];
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<CampaignConfig>(r#"{"bogus": 1}"#).is_err());
        let c: CampaignConfig = serde_json::from_str(r#"{"epsilon": 1e-8, "fault": "FAULT_DROP_T"}"#).unwrap();
        assert_eq!((c.epsilon, c.fault), (1e-8, Some(FaultId::DropT)));
    }

    #[test]
    fn clean_demo_campaign() {
        let cfg = small_cfg();
        let r = run_campaign_on(&cfg, &[demo_seed()]).unwrap();
        assert_eq!(r.totals.variants, 40);
        assert_eq!(r.totals.evaluations, 160);
        assert_eq!(r.totals.mismatches, 0);
        assert!(r.mismatch_groups.is_empty());
        assert_eq!(r.ks_table.len(), 2);
        assert_eq!(r.ks_table[0].trials, 3);
    }

    #[test]
    fn digest_ignores_jobs() {
        let mut a = small_cfg();
        a.jobs = Some(1);
        let mut b = small_cfg();
        b.jobs = Some(4);
        assert_eq!(a.digest(&[demo_seed()]), b.digest(&[demo_seed()]));
        b.epsilon = 1e-8;
        assert_ne!(a.digest(&[demo_seed()]), b.digest(&[demo_seed()]));
    }

    #[test]
    fn faulty_campaign_reports_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg();
        cfg.fault = Some(FaultId::DropT);
        cfg.artifacts_dir = Some(dir.path().join("artifacts"));
        let seed = crate::corpus::get(crate::corpus::witness_seed(FaultId::DropT)).unwrap();
        let r = run_campaign_on(&cfg, &[seed]).unwrap();
        assert!(r.totals.mismatches > 0);
        assert!(!r.mismatch_groups.is_empty());
        for g in &r.mismatch_groups {
            assert!(g.example_artifact.is_some());
        }
        for rep in &r.reports {
            let f = replay(rep).unwrap();
            assert_eq!(f.to_bits(), rep.fidelity.unwrap().to_bits());
        }
    }
}
