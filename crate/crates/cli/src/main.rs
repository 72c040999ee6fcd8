use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use qvariant::circuit::Circuit;
use qvariant::difftest::adapter;
use qvariant::difftest::campaign::load_seeds;
use qvariant::difftest::selftest::{run_selftest, SelftestOptions};
use qvariant::difftest::{run_campaign, CampaignConfig};
use qvariant::enumeration::{enumerate_variants, EnumerationConfig};
use qvariant::lang::{lower, render, Program};
use qvariant::optimizer::{inject_fault, FaultId, Pipeline};
use qvariant::seedgen::{generate_seed, SeedParams};
use qvariant::simulator::{run_dense, run_unitary, sample};
use qvariant::skeleton::extract;

/// Skeletal enumeration and differential testing for hybrid quantum programs.
#[derive(Parser)]
#[command(name = "qvariant", version)]
struct Cli {
    /// JSON config with optional `campaign` and `seedgen` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a seed and print its canonical form and hole summary.
    Parse { seed: String },
    /// Enumerate variants of a seed into a directory.
    Enumerate {
        seed: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        /// `exact` or `at_most`.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        rng_seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Run a seed (`.qh`) or circuit (`.json`) and print its statevector.
    Simulate {
        input: String,
        #[arg(long, default_value = "dense")]
        backend: String,
        #[arg(long, default_value_t = 0)]
        level: u8,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
    /// Optimize a seed or circuit and print the resulting circuit.
    Optimize {
        input: String,
        #[arg(long, default_value_t = 3)]
        level: u8,
        #[arg(long)]
        fault: Option<FaultId>,
        /// Print per-pass gate counts to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Differential-testing campaign; exit 1 when mismatches are found.
    Campaign {
        /// Seed sources (files, directories, `corpus`, `corpus:<name>`).
        seeds: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long)]
        fault: Option<FaultId>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        rng_seed: Option<u64>,
        /// Adapter command line, split on whitespace.
        #[arg(long)]
        adapter: Option<String>,
    },
    /// Check that every registered fault is caught and clean runs stay clean.
    Selftest {
        #[arg(long)]
        quick: bool,
        /// Run as if this fault were left enabled in the stock pipeline.
        #[arg(long)]
        fault: Option<FaultId>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Gate-count histogram and reduction summary of an enumerate output dir.
    Stats {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Emit the portable circuit JSON of a seed at an optimization level.
    Export {
        seed: String,
        #[arg(long, default_value_t = 0)]
        level: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate random seed programs.
    Seedgen {
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        rng_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reference adapter: serve statevector requests on stdin/stdout.
    #[command(hide = true)]
    AdapterServe,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CliConfig {
    campaign: CampaignConfig,
    seedgen: SeedParams,
}

fn load_config(path: Option<&Path>) -> Result<CliConfig> {
    match path {
        None => Ok(CliConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn load_one(source: &str) -> Result<Program> {
    let mut seeds = load_seeds(source)?;
    if seeds.len() != 1 {
        bail!("{source} names {} seeds, expected one", seeds.len());
    }
    Ok(seeds.remove(0))
}

fn load_circuit(input: &str, fuel: u64) -> Result<Circuit> {
    if input.ends_with(".json") {
        let text = fs::read_to_string(input).with_context(|| format!("reading {input}"))?;
        let c = Circuit::from_json(&text).with_context(|| format!("parsing {input}"))?;
        c.validate()?;
        return Ok(c);
    }
    Ok(lower(&load_one(input)?, fuel)?)
}

fn pipeline(level: u8, fault: Option<FaultId>) -> Result<Pipeline> {
    let p = Pipeline::new(level)?;
    Ok(match fault {
        Some(f) => inject_fault(&p, f),
        None => p,
    })
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_parse(seed: &str) -> Result<u8> {
    let p = load_one(seed)?;
    p.validate()?;
    let sk = extract(&p);
    let counts = sk.count_holes();
    print!("{}", render(&p));
    eprintln!(
        "{} qubits, {} classical holes, {} angle holes, {} qubit holes",
        p.qubit_count, counts.classical, counts.angle, counts.qubit
    );
    eprint!("{}", sk.render());
    Ok(0)
}

fn parse_mode(s: &str) -> Result<qvariant::enumeration::PartitionMode> {
    serde_json::from_value(json!(s)).map_err(|_| anyhow!("unknown partition mode `{s}`"))
}

fn cmd_enumerate(
    cfg: EnumerationConfig,
    seed: &str,
    out: Option<PathBuf>,
) -> Result<u8> {
    let p = load_one(seed)?;
    let (variants, stats) = enumerate_variants(&p, &cfg)?;
    if let Some(dir) = &out {
        fs::create_dir_all(dir)?;
        for v in &variants {
            let id = v.spec.id();
            fs::write(dir.join(format!("{id}.qh")), render(&v.program))?;
            let doc = json!({"spec": v.spec, "circuit": v.circuit});
            fs::write(dir.join(format!("{id}.json")), serde_json::to_string_pretty(&doc)?)?;
        }
        fs::write(dir.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&stats)?);
    eprintln!(
        "{}: {} classical assignments, {} variants emitted, naive {}, reduction {:.6}",
        stats.seed, stats.classical_total, stats.emitted, stats.naive, stats.reduction_rate
    );
    Ok(0)
}

fn cmd_simulate(input: &str, backend: &str, level: u8, shots: Option<u64>, rng_seed: u64) -> Result<u8> {
    let c = pipeline(level, None)?.run(&load_circuit(input, qvariant::lang::DEFAULT_FUEL)?);
    let sv = match backend {
        "dense" => run_dense(&c)?,
        "unitary" => run_unitary(&c)?,
        other => bail!("unknown backend `{other}` (dense, unitary)"),
    };
    let mut doc = json!({"statevector": serde_json::from_str::<serde_json::Value>(&sv.to_json())?});
    if let Some(s) = shots {
        doc["sample"] = serde_json::to_value(sample(&sv, s, rng_seed))?;
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(0)
}

fn cmd_optimize(input: &str, level: u8, fault: Option<FaultId>, trace: bool) -> Result<u8> {
    let c = load_circuit(input, qvariant::lang::DEFAULT_FUEL)?;
    let (out, steps) = pipeline(level, fault)?.run_traced(&c);
    if trace {
        for t in steps.iter().filter(|t| t.before != t.after) {
            eprintln!("stage {} round {} {}: {} -> {}", t.stage, t.round, t.pass, t.before, t.after);
        }
    }
    eprintln!("{} -> {} gates", c.len(), out.len());
    println!("{}", out.to_json());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_campaign(
    mut cfg: CampaignConfig,
    seeds: Vec<String>,
    out: Option<PathBuf>,
    artifacts: Option<PathBuf>,
    fault: Option<FaultId>,
    jobs: Option<usize>,
    budget: Option<usize>,
    rng_seed: Option<u64>,
    adapter_cmd: Option<String>,
) -> Result<u8> {
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    cfg.artifacts_dir = artifacts.or(cfg.artifacts_dir);
    cfg.fault = fault.or(cfg.fault);
    cfg.jobs = jobs.or(cfg.jobs);
    if let Some(b) = budget {
        cfg.enumeration.budget = b;
    }
    if let Some(s) = rng_seed {
        cfg.rng_seed = s;
    }
    if let Some(a) = adapter_cmd {
        let mut ac = cfg.adapter.take().unwrap_or_default();
        ac.command = a.split_whitespace().map(str::to_string).collect();
        cfg.adapter = Some(ac);
    }
    let report = run_campaign(&cfg)?;
    write_or_print(out.as_deref(), &report.to_json())?;
    let t = &report.totals;
    eprintln!(
        "{} seeds, {} variants, {} evaluations: {} mismatches in {} groups, {} crashes, {} timeouts",
        report.seeds.len(),
        t.variants,
        t.evaluations,
        t.mismatches,
        report.mismatch_groups.len(),
        t.crashes,
        t.timeouts
    );
    Ok(u8::from(report.has_findings()))
}

fn cmd_selftest(quick: bool, fault: Option<FaultId>, jobs: Option<usize>) -> Result<u8> {
    let checks = run_selftest(&SelftestOptions { quick, injected: fault, jobs });
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(u8::from(failed > 0))
}

/// Gate-count bucket label: `0-1`, `2-10`, `11-20`, ..., `91-100`, `101+`.
fn bucket(gates: usize) -> String {
    match gates {
        0..=1 => "0-1".into(),
        2..=10 => "2-10".into(),
        11..=100 => {
            let lo = (gates - 1) / 10 * 10 + 1;
            format!("{lo}-{}", lo + 9)
        }
        _ => "101+".into(),
    }
}

fn bucket_order(label: &str) -> usize {
    label.split(['-', '+']).next().and_then(|s| s.parse().ok()).unwrap_or(usize::MAX)
}

fn cmd_stats(dir: &Path, as_json: bool) -> Result<u8> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    files.sort();
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut reduction = Vec::new();
    for f in files.iter().filter(|f| f.extension().is_some_and(|x| x == "json")) {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(f)?).with_context(|| format!("parsing {}", f.display()))?;
        if f.file_name().is_some_and(|n| n == "stats.json") {
            reduction.push(v);
        } else if let Some(c) = v.get("circuit") {
            let c: Circuit = serde_json::from_value(c.clone())?;
            *hist.entry(bucket(c.len())).or_default() += 1;
        }
    }
    let mut rows: Vec<(String, usize)> = hist.into_iter().collect();
    rows.sort_by_key(|(l, _)| bucket_order(l));
    let histogram: Vec<serde_json::Value> = rows.iter().map(|(l, n)| json!({"gates": l, "count": n})).collect();
    if as_json {
        println!("{}", serde_json::to_string_pretty(&json!({"histogram": histogram, "reduction": reduction}))?);
    } else {
        println!("{:>8}  {:>6}", "gates", "count");
        for (l, n) in &rows {
            println!("{l:>8}  {n:>6}");
        }
        for r in &reduction {
            println!(
                "{}: emitted {}, naive {}, reduction {}",
                r["seed"].as_str().unwrap_or("?"),
                r["emitted"],
                r["naive"].as_str().unwrap_or("?"),
                r["reduction_rate"]
            );
        }
    }
    Ok(0)
}

fn cmd_export(seed: &str, level: u8, out: Option<PathBuf>) -> Result<u8> {
    let c = pipeline(level, None)?.run(&load_circuit(seed, qvariant::lang::DEFAULT_FUEL)?);
    write_or_print(out.as_deref(), &c.to_json())?;
    Ok(0)
}

fn cmd_seedgen(params: SeedParams, count: usize, rng_seed: Option<u64>, out: &Path) -> Result<u8> {
    fs::create_dir_all(out)?;
    let base = rng_seed.unwrap_or(params.rng_seed);
    for i in 0..count {
        let p = generate_seed(&SeedParams { rng_seed: base + i as u64, ..params.clone() })?;
        let path = out.join(format!("seed_{:02}.qh", i + 1));
        fs::write(&path, render(&p))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let config = load_config(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Parse { seed } => cmd_parse(&seed),
        Cmd::Enumerate { seed, out, budget, mode, rng_seed, samples } => {
            let mut cfg = config.campaign.enumeration;
            if let Some(b) = budget {
                cfg.budget = b;
            }
            if let Some(m) = mode {
                cfg.partition_mode = parse_mode(&m)?;
            }
            if let Some(s) = rng_seed {
                cfg.rng_seed = s;
            }
            if let Some(s) = samples {
                cfg.quantum_samples_per_classical = s;
            }
            cmd_enumerate(cfg, &seed, out)
        }
        Cmd::Simulate { input, backend, level, shots, rng_seed } => cmd_simulate(&input, &backend, level, shots, rng_seed),
        Cmd::Optimize { input, level, fault, trace } => cmd_optimize(&input, level, fault, trace),
        Cmd::Campaign { seeds, out, artifacts, fault, jobs, budget, rng_seed, adapter } => {
            cmd_campaign(config.campaign, seeds, out, artifacts, fault, jobs, budget, rng_seed, adapter)
        }
        Cmd::Selftest { quick, fault, jobs } => cmd_selftest(quick, fault, jobs),
        Cmd::Stats { dir, json } => cmd_stats(&dir, json),
        Cmd::Export { seed, level, out } => cmd_export(&seed, level, out),
        Cmd::Seedgen { count, rng_seed, out } => cmd_seedgen(config.seedgen, count, rng_seed, &out),
        Cmd::AdapterServe => {
            adapter::serve(io::stdin().lock(), io::stdout().lock())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
