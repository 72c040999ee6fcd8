//! Line-delimited JSON protocol for external statevector simulators.
//!
//! Request: `{"id": 7, "task": "statevector", "circuit": {"n": 2, "ops": [...]}}`.
//! Response: `{"id": 7, "statevector": [[re, im], ...], "endianness": "little"}`
//! or `{"id": 7, "error": {"kind": "...", "message": "..."}}`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::circuit::{Circuit, Op};
use crate::gate::GateKind;
use crate::simulator::{run_dense, Statevector};

/// Responses whose norm is further than this from 1 are rejected.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum AdapterError {
    #[error("cannot start adapter `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("adapter i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("adapter closed its output")]
    Closed,
    #[error("malformed adapter response: {0}")]
    Protocol(String),
    #[error("adapter error {kind}: {message}")]
    Remote { kind: String, message: String },
}

#[derive(Serialize, Deserialize)]
struct ErrorBody {
    kind: String,
    message: String,
}

#[derive(Deserialize)]
struct Response {
    id: Option<u64>,
    #[serde(default)]
    statevector: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    endianness: Option<String>,
    #[serde(default)]
    error: Option<ErrorBody>,
}

/// A running adapter process.
pub struct AdapterClient {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

impl AdapterClient {
    /// Launch `command[0]` with the remaining words as arguments.
    pub fn spawn(command: &[String]) -> Result<AdapterClient, AdapterError> {
        let shown = command.join(" ");
        let (prog, args) = command
            .split_first()
            .ok_or_else(|| AdapterError::Spawn { command: shown.clone(), source: std::io::ErrorKind::InvalidInput.into() })?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AdapterError::Spawn { command: shown, source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(AdapterClient { child, stdin, stdout, next_id: 0 })
    }

    pub fn statevector(&mut self, c: &Circuit) -> Result<Statevector, AdapterError> {
        self.next_id += 1;
        let id = self.next_id;
        let req = json!({"id": id, "task": "statevector", "circuit": c});
        writeln!(self.stdin, "{req}")?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(AdapterError::Closed);
        }
        let resp: Response = serde_json::from_str(&line).map_err(|e| AdapterError::Protocol(e.to_string()))?;
        if resp.id != Some(id) {
            return Err(AdapterError::Protocol(format!("expected id {id}, got {:?}", resp.id)));
        }
        if let Some(e) = resp.error {
            return Err(AdapterError::Remote { kind: e.kind, message: e.message });
        }
        if resp.endianness.as_deref() != Some("little") {
            return Err(AdapterError::Protocol(format!("unsupported endianness {:?}", resp.endianness)));
        }
        let amps = resp.statevector.ok_or_else(|| AdapterError::Protocol("missing statevector".into()))?;
        if amps.len() != 1 << c.qubit_count {
            return Err(AdapterError::Protocol(format!("expected {} amplitudes, got {}", 1 << c.qubit_count, amps.len())));
        }
        let sv = Statevector {
            qubit_count: c.qubit_count,
            amplitudes: amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        };
        let norm = sv.norm_sqr();
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(AdapterError::Protocol(format!("statevector norm {norm} is not 1")));
        }
        Ok(sv)
    }
}

impl Drop for AdapterClient {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn error_reply(id: &Value, kind: &str, message: impl Into<String>) -> Value {
    json!({"id": id, "error": {"kind": kind, "message": message.into()}})
}

fn parse_circuit(v: &Value) -> Result<Circuit, (&'static str, String)> {
    let n = v.get("n").and_then(Value::as_u64).ok_or(("malformed_request", "circuit.n must be an integer".to_string()))?;
    let ops = v.get("ops").and_then(Value::as_array).ok_or(("malformed_request", "circuit.ops must be a list".to_string()))?;
    let mut out = Circuit::new(n as usize);
    for op in ops {
        let name = op.get("gate").and_then(Value::as_str).ok_or(("malformed_request", "op.gate must be a string".to_string()))?;
        let gate: GateKind = name.parse().map_err(|_| ("unsupported_gate", format!("gate `{name}` is not supported")))?;
        let angle = match op.get("angle") {
            None | Some(Value::Null) => None,
            Some(a) => Some(a.as_f64().ok_or(("malformed_request", "op.angle must be a number".to_string()))?),
        };
        let qubits = op
            .get("qubits")
            .and_then(Value::as_array)
            .and_then(|qs| qs.iter().map(|q| q.as_u64().map(|q| q as usize)).collect::<Option<Vec<_>>>())
            .ok_or(("malformed_request", "op.qubits must be a list of integers".to_string()))?;
        out.push(Op { gate, angle, qubits });
    }
    out.validate().map_err(|e| ("invalid_circuit", e.to_string()))?;
    Ok(out)
}

/// Answer one request line. Never panics on malformed input.
pub fn handle_request(line: &str) -> Value {
    let req: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return error_reply(&Value::Null, "malformed_request", e.to_string()),
    };
    let id = req.get("id").cloned().unwrap_or(Value::Null);
    if !id.is_u64() {
        return error_reply(&id, "malformed_request", "id must be a non-negative integer");
    }
    match req.get("task").and_then(Value::as_str) {
        Some("statevector") => {}
        Some(t) => return error_reply(&id, "unsupported_task", format!("task `{t}` is not supported")),
        None => return error_reply(&id, "malformed_request", "missing task"),
    }
    let circuit = match req.get("circuit").map(parse_circuit) {
        Some(Ok(c)) => c,
        Some(Err((kind, msg))) => return error_reply(&id, kind, msg),
        None => return error_reply(&id, "malformed_request", "missing circuit"),
    };
    match run_dense(&circuit) {
        Ok(sv) => {
            let amps: Vec<[f64; 2]> = sv.amplitudes.iter().map(|a| [a.re, a.im]).collect();
            json!({"id": id, "statevector": amps, "endianness": "little"})
        }
        Err(e) => error_reply(&id, "simulation_failed", e.to_string()),
    }
}

/// Reference request loop backed by the dense simulator. It exercises the
/// protocol end to end; a real adapter wraps a third-party simulator.
pub fn serve(input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", handle_request(&line))?;
        output.flush()?;
    }
    Ok(())
}
