use num_complex::Complex64;
use serde::Serialize;

use crate::simulator::GateMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("matrix is not unitary (error {0:e})")]
pub struct NotUnitary(pub f64);

/// Angles with `U = e^{iα}·Rz(β)·Ry(γ)·Rz(δ)` and `γ ∈ [0, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Zyz {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

pub fn zyz_decompose(u: &GateMatrix) -> Result<Zyz, NotUnitary> {
    assert_eq!(u.dim, 2, "zyz_decompose expects a 2x2 matrix");
    let err = u.unitarity_error();
    if !(err <= 1e-10) {
        return Err(NotUnitary(err));
    }
    let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
    let alpha = det.arg() / 2.0;
    let phase = Complex64::from_polar(1.0, -alpha);
    let (v00, v10, v11) = (u.get(0, 0) * phase, u.get(1, 0) * phase, u.get(1, 1) * phase);
    let gamma = 2.0 * v10.norm().atan2(v00.norm());
    // v11 = e^{i(β+δ)/2} cos(γ/2), v10 = e^{i(β−δ)/2} sin(γ/2)
    let sum = if v11.norm() > 1e-12 { 2.0 * v11.arg() } else { 0.0 };
    let diff = if v10.norm() > 1e-12 { 2.0 * v10.arg() } else { 0.0 };
    Ok(Zyz { alpha, beta: (sum + diff) / 2.0, gamma, delta: (sum - diff) / 2.0 })
}

impl Zyz {
    pub fn matrix(&self) -> GateMatrix {
        let (c, s) = ((self.gamma / 2.0).cos(), (self.gamma / 2.0).sin());
        let e = |phi: f64| Complex64::from_polar(1.0, phi);
        let g = e(self.alpha);
        let (p, m) = ((self.beta + self.delta) / 2.0, (self.beta - self.delta) / 2.0);
        GateMatrix {
            dim: 2,
            data: vec![g * e(-p) * c, -g * e(-m) * s, g * e(m) * s, g * e(p) * c],
        }
    }
}
