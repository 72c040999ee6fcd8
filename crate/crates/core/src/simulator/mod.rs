//! Two statevector backends, fidelity and seeded measurement sampling.
//!
//! Basis indices are little-endian: bit `i` of the index is qubit `i`.

mod gates;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circuit::{Circuit, MAX_QUBITS};
use crate::gate::GateKind;
use crate::rng::stream;

pub use gates::{gate_matrix, GateMatrix};

/// Widest register the full-unitary backend accepts.
pub const MAX_UNITARY_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{0} requires an angle")]
    MissingAngle(GateKind),
    #[error("{0} takes no angle")]
    UnexpectedAngle(GateKind),
    #[error("{gate} matrix is not unitary (error {error:e})")]
    NotUnitary { gate: GateKind, error: f64 },
    #[error("{qubits} qubits exceed the backend limit of {limit}")]
    QubitBudgetExceeded { qubits: usize, limit: usize },
    #[error("statevector dimensions differ ({0} vs {1} qubits)")]
    DimensionMismatch(usize, usize),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    pub qubit_count: usize,
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn zero_state(qubit_count: usize) -> Statevector {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubit_count];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Statevector { qubit_count, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn max_abs_diff(&self, other: &Statevector) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("statevector serialization is infallible")
    }
}

#[derive(Serialize, Deserialize)]
struct StatevectorJson {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
    endianness: String,
}

impl Serialize for Statevector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StatevectorJson {
            n: self.qubit_count,
            amplitudes: self.amplitudes.iter().map(|a| [a.re, a.im]).collect(),
            endianness: "little".into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Statevector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = StatevectorJson::deserialize(d)?;
        if raw.endianness != "little" {
            return Err(D::Error::custom(format!("unsupported endianness `{}`", raw.endianness)));
        }
        if raw.amplitudes.len() != 1usize << raw.n {
            return Err(D::Error::custom("amplitude count does not match n"));
        }
        Ok(Statevector {
            qubit_count: raw.n,
            amplitudes: raw.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        })
    }
}

fn checked_matrices(c: &Circuit, limit: usize) -> Result<Vec<GateMatrix>, SimError> {
    if c.qubit_count > limit {
        return Err(SimError::QubitBudgetExceeded { qubits: c.qubit_count, limit });
    }
    c.validate().map_err(|e| SimError::InvalidCircuit(e.to_string()))?;
    c.ops.iter().map(|op| gate_matrix(op.gate, op.angle)).collect()
}

/// Apply `m` to `amps` on the given qubits by gathering each group of
/// `m.dim` amplitudes that differ only in those qubits.
pub(crate) fn apply_gate(amps: &mut [Complex64], m: &GateMatrix, qubits: &[usize]) {
    let offsets: Vec<usize> = (0..m.dim)
        .map(|l| qubits.iter().enumerate().filter(|(j, _)| l >> j & 1 == 1).map(|(_, q)| 1 << q).sum())
        .collect();
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    let mut buf = vec![Complex64::new(0.0, 0.0); m.dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &m.data[r * m.dim..(r + 1) * m.dim];
            amps[base | off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// Start from |0…0⟩ and update amplitudes in place gate by gate.
pub fn run_dense(c: &Circuit) -> Result<Statevector, SimError> {
    let mats = checked_matrices(c, MAX_QUBITS)?;
    let mut sv = Statevector::zero_state(c.qubit_count);
    for (op, m) in c.ops.iter().zip(&mats) {
        apply_gate(&mut sv.amplitudes, m, &op.qubits);
    }
    Ok(sv)
}

/// Nonzero entries of the gate embedded in the full register, row by row.
fn embed(m: &GateMatrix, qubits: &[usize], n: usize) -> Vec<Vec<(usize, Complex64)>> {
    let dim = 1usize << n;
    let local = |x: usize| qubits.iter().enumerate().map(|(j, &q)| (x >> q & 1) << j).sum::<usize>();
    let mask: usize = qubits.iter().map(|q| 1 << q).sum();
    (0..dim)
        .map(|r| {
            let lr = local(r);
            (0..dim)
                .filter(|&c| c & !mask == r & !mask)
                .map(|c| (c, m.get(lr, local(c))))
                .filter(|(_, v)| v.norm_sqr() != 0.0)
                .collect()
        })
        .collect()
}

/// Multiply the embedded gate matrices into the full circuit unitary, then
/// read off its first column.
pub fn run_unitary(c: &Circuit) -> Result<Statevector, SimError> {
    let mats = checked_matrices(c, MAX_UNITARY_QUBITS)?;
    let n = c.qubit_count;
    let dim = 1usize << n;
    let zero = Complex64::new(0.0, 0.0);
    // row-major
    let mut u = vec![zero; dim * dim];
    for i in 0..dim {
        u[i * dim + i] = Complex64::new(1.0, 0.0);
    }
    let mut next = vec![zero; dim * dim];
    for (op, m) in c.ops.iter().zip(&mats) {
        let g = embed(m, &op.qubits, n);
        for (r, row) in g.iter().enumerate() {
            let out = &mut next[r * dim..(r + 1) * dim];
            out.fill(zero);
            for &(k, v) in row {
                for (o, x) in out.iter_mut().zip(&u[k * dim..(k + 1) * dim]) {
                    *o += v * x;
                }
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    Ok(Statevector { qubit_count: n, amplitudes: (0..dim).map(|r| u[r * dim]).collect() })
}

/// |⟨a|b⟩|, clamped to at most 1.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64, SimError> {
    if a.qubit_count != b.qubit_count {
        return Err(SimError::DimensionMismatch(a.qubit_count, b.qubit_count));
    }
    let dot: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(dot.norm().min(1.0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSample {
    pub qubit_count: usize,
    pub shots: u64,
    /// Bitstring (qubit 0 rightmost) → count; keys sort in basis order.
    pub counts: BTreeMap<String, u64>,
}

impl MeasurementSample {
    pub fn bitstring(index: usize, qubit_count: usize) -> String {
        format!("{index:0qubit_count$b}")
    }

    /// Counts indexed by basis state.
    pub fn dense_counts(&self) -> Vec<u64> {
        let mut out = vec![0; 1 << self.qubit_count];
        for (k, v) in &self.counts {
            out[usize::from_str_radix(k, 2).expect("binary key")] = *v;
        }
        out
    }
}

/// `shots` independent measurements of every qubit, drawn with a generator
/// seeded from `rng_seed`.
pub fn sample(sv: &Statevector, shots: u64, rng_seed: u64) -> MeasurementSample {
    let mut rng = stream(rng_seed, &[]);
    let mut cdf = Vec::with_capacity(sv.amplitudes.len());
    let mut acc = 0.0;
    for a in &sv.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let mut dense = vec![0u64; sv.amplitudes.len()];
    for _ in 0..shots {
        let u = rng.gen::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        dense[idx] += 1;
    }
    let counts = dense
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (MeasurementSample::bitstring(i, sv.qubit_count), c))
        .collect();
    MeasurementSample { qubit_count: sv.qubit_count, shots, counts }
}
