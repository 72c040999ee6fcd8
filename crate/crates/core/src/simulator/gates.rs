use num_complex::Complex64;

use crate::gate::GateKind;

use super::SimError;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense gate matrix over the gate's own operands.
///
/// Local basis index bit `j` is the state of operand `j`, so for `cx q[a], q[b]`
/// the control is bit 0 and the target bit 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix {
    pub dim: usize,
    /// Row-major entries.
    pub data: Vec<Complex64>,
}

impl GateMatrix {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    fn from_rows(rows: &[&[Complex64]]) -> GateMatrix {
        GateMatrix { dim: rows.len(), data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    fn diag(d: &[Complex64]) -> GateMatrix {
        let dim = d.len();
        let mut data = vec![ZERO; dim * dim];
        for (i, v) in d.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        GateMatrix { dim, data }
    }

    /// `u` on operand `controls`, applied when operands `0..controls` are all 1.
    fn controlled(u: &GateMatrix, controls: usize) -> GateMatrix {
        let dim = u.dim << controls;
        let cmask = (1 << controls) - 1;
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = if r & cmask != c & cmask {
                    ZERO
                } else if r & cmask == cmask {
                    u.get(r >> controls, c >> controls)
                } else if r == c {
                    ONE
                } else {
                    ZERO
                };
            }
        }
        GateMatrix { dim, data }
    }

    /// max |(U†U − I)_ij|
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    acc -= ONE;
                }
                let e = acc.norm();
                if e.is_nan() {
                    return f64::INFINITY;
                }
                worst = worst.max(e);
            }
        }
        worst
    }

    pub fn matmul(&self, other: &GateMatrix) -> GateMatrix {
        let d = self.dim;
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * other.get(k, j);
                }
            }
        }
        GateMatrix { dim: d, data }
    }
}

fn one_qubit(kind: GateKind, theta: f64) -> GateMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::X => GateMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        GateKind::Z => GateMatrix::diag(&[ONE, -ONE]),
        GateKind::H => GateMatrix::from_rows(&[&[ONE * r, ONE * r], &[ONE * r, -ONE * r]]),
        GateKind::S => GateMatrix::diag(&[ONE, I]),
        GateKind::T => GateMatrix::diag(&[ONE, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]),
        GateKind::Rx | GateKind::Crx => {
            GateMatrix::from_rows(&[&[ONE * c, -I * s], &[-I * s, ONE * c]])
        }
        GateKind::Ry | GateKind::Cry => GateMatrix::from_rows(&[&[ONE * c, -ONE * s], &[ONE * s, ONE * c]]),
        GateKind::Rz | GateKind::Crz => {
            GateMatrix::diag(&[Complex64::from_polar(1.0, -theta / 2.0), Complex64::from_polar(1.0, theta / 2.0)])
        }
        _ => unreachable!("{kind} is not a one-qubit base gate"),
    }
}

/// The unitary of `kind` with the given angle.
pub fn gate_matrix(kind: GateKind, angle: Option<f64>) -> Result<GateMatrix, SimError> {
    let theta = match (kind.is_parameterized(), angle) {
        (true, Some(a)) => a,
        (true, None) => return Err(SimError::MissingAngle(kind)),
        (false, Some(_)) => return Err(SimError::UnexpectedAngle(kind)),
        (false, None) => 0.0,
    };
    let m = match kind {
        GateKind::X | GateKind::Z | GateKind::H | GateKind::S | GateKind::T | GateKind::Rx | GateKind::Ry | GateKind::Rz => {
            one_qubit(kind, theta)
        }
        GateKind::Cx => GateMatrix::controlled(&one_qubit(GateKind::X, 0.0), 1),
        GateKind::Cz => GateMatrix::controlled(&one_qubit(GateKind::Z, 0.0), 1),
        GateKind::Crx | GateKind::Cry | GateKind::Crz => GateMatrix::controlled(&one_qubit(kind, theta), 1),
        GateKind::Cp => GateMatrix::diag(&[ONE, ONE, ONE, Complex64::from_polar(1.0, theta)]),
        GateKind::Swap => GateMatrix::from_rows(&[
            &[ONE, ZERO, ZERO, ZERO],
            &[ZERO, ZERO, ONE, ZERO],
            &[ZERO, ONE, ZERO, ZERO],
            &[ZERO, ZERO, ZERO, ONE],
        ]),
        GateKind::Ccx => GateMatrix::controlled(&one_qubit(GateKind::X, 0.0), 2),
        GateKind::Cswap => {
            // operand 0 controls a swap of operands 1 and 2
            let mut m = GateMatrix::diag(&[ONE; 8]);
            let (a, b) = (0b011, 0b101);
            m.data[a * 8 + a] = ZERO;
            m.data[b * 8 + b] = ZERO;
            m.data[a * 8 + b] = ONE;
            m.data[b * 8 + a] = ONE;
            m
        }
    };
    let err = m.unitarity_error();
    if !(err <= 1e-12) {
        return Err(SimError::NotUnitary { gate: kind, error: err });
    }
    Ok(m)
}
