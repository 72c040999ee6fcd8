//! The fixed gate set shared by the seed language, the circuit IR and the
//! simulators.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the 17 gates supported across all backends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Cz,
    Swap,
    Rz,
    X,
    Crx,
    Cp,
    Z,
    Crz,
    H,
    Cx,
    Ry,
    Cry,
    Cswap,
    Ccx,
    S,
    T,
}

/// How a gate acts on one of its operand slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotRole {
    Control,
    Target,
}

impl GateKind {
    pub const ALL: [GateKind; 17] = [
        GateKind::Rx,
        GateKind::Cz,
        GateKind::Swap,
        GateKind::Rz,
        GateKind::X,
        GateKind::Crx,
        GateKind::Cp,
        GateKind::Z,
        GateKind::Crz,
        GateKind::H,
        GateKind::Cx,
        GateKind::Ry,
        GateKind::Cry,
        GateKind::Cswap,
        GateKind::Ccx,
        GateKind::S,
        GateKind::T,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Rz => "rz",
            GateKind::X => "x",
            GateKind::Crx => "crx",
            GateKind::Cp => "cp",
            GateKind::Z => "z",
            GateKind::Crz => "crz",
            GateKind::H => "h",
            GateKind::Cx => "cx",
            GateKind::Ry => "ry",
            GateKind::Cry => "cry",
            GateKind::Cswap => "cswap",
            GateKind::Ccx => "ccx",
            GateKind::S => "s",
            GateKind::T => "t",
        }
    }

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx
            | GateKind::Rz
            | GateKind::Ry
            | GateKind::X
            | GateKind::Z
            | GateKind::H
            | GateKind::S
            | GateKind::T => 1,
            GateKind::Cz
            | GateKind::Swap
            | GateKind::Crx
            | GateKind::Cp
            | GateKind::Crz
            | GateKind::Cx
            | GateKind::Cry => 2,
            GateKind::Cswap | GateKind::Ccx => 3,
        }
    }

    pub fn is_parameterized(self) -> bool {
        matches!(
            self,
            GateKind::Rx
                | GateKind::Ry
                | GateKind::Rz
                | GateKind::Cp
                | GateKind::Crx
                | GateKind::Cry
                | GateKind::Crz
        )
    }

    /// Role of operand `slot`. Symmetric gates still label their first
    /// operand a control so that hole metadata is uniform.
    pub fn slot_role(self, slot: usize) -> SlotRole {
        match self {
            GateKind::Ccx if slot < 2 => SlotRole::Control,
            GateKind::Cswap if slot == 0 => SlotRole::Control,
            GateKind::Cz | GateKind::Crx | GateKind::Cp | GateKind::Crz | GateKind::Cx | GateKind::Cry
                if slot == 0 =>
            {
                SlotRole::Control
            }
            _ => SlotRole::Target,
        }
    }

    /// Operand slot ranges whose order does not affect the gate's action.
    pub fn symmetric_slots(self) -> Option<(usize, usize)> {
        match self {
            GateKind::Cz | GateKind::Swap | GateKind::Cp => Some((0, 1)),
            GateKind::Ccx => Some((0, 1)),
            GateKind::Cswap => Some((1, 2)),
            _ => None,
        }
    }

    /// Angle period after which the gate returns to itself up to a global
    /// phase. Controlled rotations pick up a relative phase at 2π, so their
    /// period is 4π.
    pub fn angle_period(self) -> Option<f64> {
        use std::f64::consts::TAU;
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cp => Some(TAU),
            GateKind::Crx | GateKind::Cry | GateKind::Crz => Some(2.0 * TAU),
            _ => None,
        }
    }

    /// Gates that square to the identity.
    pub fn is_self_inverse(self) -> bool {
        matches!(
            self,
            GateKind::H
                | GateKind::X
                | GateKind::Z
                | GateKind::Cx
                | GateKind::Cz
                | GateKind::Swap
                | GateKind::Ccx
                | GateKind::Cswap
        )
    }

    pub fn index(self) -> u8 {
        GateKind::ALL.iter().position(|g| *g == self).unwrap() as u8
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown gate `{0}`")]
pub struct UnknownGate(pub String);

impl FromStr for GateKind {
    type Err = UnknownGate;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| UnknownGate(s.to_string()))
    }
}

/// Reduce `angle` into `[0, period)`.
pub fn normalize_angle(angle: f64, period: f64) -> f64 {
    let r = angle.rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs
    if r >= period {
        0.0
    } else {
        r
    }
}

/// True when `angle` is a multiple of `period` within `tol`.
pub fn is_zero_angle(angle: f64, period: f64, tol: f64) -> bool {
    let r = angle.rem_euclid(period);
    r <= tol || period - r <= tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_table_matches_expected_partition() {
        assert_eq!(GateKind::ALL.len(), 17);
        let params: Vec<_> = GateKind::ALL.iter().filter(|g| g.is_parameterized()).collect();
        assert_eq!(params.len(), 7);
        let three: Vec<_> = GateKind::ALL.iter().filter(|g| g.arity() == 3).collect();
        assert_eq!(three, vec![&GateKind::Cswap, &GateKind::Ccx]);
    }

    #[test]
    fn names_round_trip() {
        for g in GateKind::ALL {
            assert_eq!(g.name().parse::<GateKind>().unwrap(), g);
        }
        assert!("p".parse::<GateKind>().is_err());
    }

    #[test]
    fn angle_helpers() {
        use std::f64::consts::TAU;
        assert_eq!(normalize_angle(-1.0, TAU), TAU - 1.0);
        assert!(is_zero_angle(TAU, TAU, 1e-12));
        assert!(is_zero_angle(-1e-13, TAU, 1e-12));
        assert!(!is_zero_angle(TAU, 2.0 * TAU, 1e-12));
    }
}
