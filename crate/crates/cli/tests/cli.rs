use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use qvariant::circuit::random_circuit;
use qvariant::difftest::AdapterClient;
use qvariant::rng::stream;
use qvariant::simulator::{fidelity, run_dense};

fn qv(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvariant")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

/// Seven classical holes in one scope over two variables.
const SINGLE_SCOPE_SEED: &str = "qubits 2\na = 1\nb = 2\na = b + a\nb = a\nh q[0]\ncx q[0], q[1]\n";

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qv(&["--help"], dir.path())), 0);
    assert_eq!(code(&qv(&["campaign", "--help"], dir.path())), 0);
    assert_eq!(code(&qv(&["no-such-command"], dir.path())), 2);
}

#[test]
fn parse_prints_canonical_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = qv(&["parse", "corpus:hw_01_phase_walk"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("program hw_01_phase_walk\nqubits 3\n"));
}

#[test]
fn enumerate_single_scope_seed_exact_mode() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.qh"), SINGLE_SCOPE_SEED).unwrap();
    let o = qv(&["enumerate", "s.qh", "--mode", "exact"], dir.path());
    assert_eq!(code(&o), 0);
    let stats = stdout_json(&o);
    assert_eq!(stats["classical_total"], "63");
    assert_eq!(stats["naive"], "128");
    let o = qv(&["enumerate", "s.qh", "--mode", "at_most"], dir.path());
    assert_eq!(stdout_json(&o)["classical_total"], "64");
}

#[test]
fn enumerate_budget_writes_exactly_that_many_variants() {
    let dir = tempfile::tempdir().unwrap();
    let o = qv(&["enumerate", "corpus:gen_01", "--budget", "10", "--out", "vars"], dir.path());
    assert_eq!(code(&o), 0);
    let qh = fs::read_dir(dir.path().join("vars")).unwrap().filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "qh").count();
    assert_eq!(qh, 10);

    let o = qv(&["stats", "vars", "--json"], dir.path());
    assert_eq!(code(&o), 0);
    let stats = stdout_json(&o);
    let total: u64 = stats["histogram"].as_array().unwrap().iter().map(|r| r["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 10);
    let written: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("vars/stats.json")).unwrap()).unwrap();
    assert_eq!(stats["reduction"][0], written);
}

#[test]
fn missing_seed_and_bad_config_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qv(&["enumerate", "missing.qh"], dir.path())), 2);
    fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&qv(&["--config", "bad.json", "campaign", "corpus:hw_01_phase_walk"], dir.path())), 2);
    fs::write(dir.path().join("unknown.json"), r#"{"campaign": {"epsilonn": 1e-9}}"#).unwrap();
    assert_eq!(code(&qv(&["--config", "unknown.json", "campaign"], dir.path())), 2);
    fs::write(dir.path().join("range.json"), r#"{"campaign": {"epsilon": 0.5}}"#).unwrap();
    assert_eq!(code(&qv(&["--config", "range.json", "campaign"], dir.path())), 2);
}

#[test]
fn campaign_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qv(&["campaign", "corpus:hw_01_phase_walk", "--budget", "40", "--out", "clean.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = qv(
        &["campaign", "corpus:hw_01_phase_walk", "--budget", "40", "--fault", "FAULT_DROP_T", "--out", "r.json", "--artifacts", "art"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let groups = report["mismatch_groups"].as_array().unwrap();
    assert!(!groups.is_empty());
    let example = groups[0]["example_artifact"].as_str().unwrap();
    assert!(Path::new(example).is_dir() || dir.path().join(example).is_dir());
}

#[test]
fn campaign_report_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |jobs: &'static str, out: &'static str| {
        vec!["campaign", "corpus:hw_02_crz_ladder", "corpus:gen_03", "--budget", "60", "--jobs", jobs, "--out", out]
    };
    assert_eq!(code(&qv(&args("1", "a.json"), dir.path())), 0);
    assert_eq!(code(&qv(&args("8", "b.json"), dir.path())), 0);
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn stats_of_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    let o = qv(&["stats", "empty", "--json"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["histogram"], serde_json::json!([]));
}

#[test]
fn selftest_passes_and_detects_a_left_in_fault() {
    let dir = tempfile::tempdir().unwrap();
    let o = qv(&["selftest", "--quick"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = qv(&["selftest", "--quick", "--fault", "FAULT_CRZ_SIGN"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL clean campaign"));
}

#[test]
fn seedgen_is_deterministic_and_matches_corpus() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qv(&["seedgen", "--count", "15", "--rng-seed", "1", "--out", "a"], dir.path())), 0);
    assert_eq!(code(&qv(&["seedgen", "--count", "15", "--rng-seed", "1", "--out", "b"], dir.path())), 0);
    for (i, (name, text)) in qvariant::corpus::SOURCES[5..].iter().enumerate() {
        let file = format!("seed_{:02}.qh", i + 1);
        let a = fs::read_to_string(dir.path().join("a").join(&file)).unwrap();
        assert_eq!(a, fs::read_to_string(dir.path().join("b").join(&file)).unwrap());
        assert_eq!(&a, text, "{name}");
    }
}

#[test]
fn simulate_optimize_export() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bell.qh"), "qubits 2\nh q[0]\ncx q[0], q[1]\n").unwrap();
    let o = qv(&["simulate", "bell.qh", "--backend", "unitary", "--shots", "100"], dir.path());
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["statevector"]["n"], 2);
    assert_eq!(v["statevector"]["endianness"], "little");
    let counts = v["sample"]["counts"].as_object().unwrap();
    assert!(counts.keys().all(|k| k == "00" || k == "11"));

    let o = qv(&["export", "bell.qh", "--out", "bell.json"], dir.path());
    assert_eq!(code(&o), 0);
    let o = qv(&["optimize", "bell.json", "--level", "3"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["ops"].as_array().unwrap().len(), 2);
    assert_eq!(code(&qv(&["simulate", "bell.qh", "--backend", "quantum"], dir.path())), 2);
}

fn adapter_command() -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_qvariant").to_string(), "adapter-serve".to_string()]
}

#[test]
fn adapter_matches_dense_backend_and_survives_garbage() {
    let mut client = AdapterClient::spawn(&adapter_command()).unwrap();
    let mut rng = stream(77, &[]);
    for _ in 0..50 {
        let c = random_circuit(&mut rng, 4, 30);
        let sv = client.statevector(&c).unwrap();
        assert!(fidelity(&run_dense(&c).unwrap(), &sv).unwrap() >= 1.0 - 1e-6);
    }

    let mut child = Command::new(&adapter_command()[0])
        .arg("adapter-serve")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    stdin.write_all(b"{\"id\": 1, \"task\": \"statevector\", \"circuit\": {\"n\": 1, \"ops\": [{\"gate\": \"p\", \"qubits\": [0]}]}}\n").unwrap();
    stdin.write_all(b"garbage\n[1,2,3]\n{\"id\": 2}\n").unwrap();
    stdin.write_all(b"{\"id\": 3, \"task\": \"statevector\", \"circuit\": {\"n\": 1, \"ops\": [{\"gate\": \"x\", \"qubits\": [0]}]}}\n").unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["error"]["kind"], "unsupported_gate");
    assert_eq!(lines[4]["statevector"][1][0], 1.0);
}

#[test]
fn campaign_with_adapter_adds_external_rules() {
    let dir = tempfile::tempdir().unwrap();
    let cmd = adapter_command().join(" ");
    let o = qv(&["campaign", "corpus:hw_05_rotation_mix", "--budget", "20", "--adapter", &cmd, "--out", "r.json"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let rules: Vec<&str> = report["rules"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(rules, ["R1", "R2", "R3", "R4", "R5"]);
    assert!(report["rules"][4]["evaluations"].as_u64().unwrap() > 0);
}
