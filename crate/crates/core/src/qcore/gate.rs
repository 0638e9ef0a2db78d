use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use super::{Amplitude, ALGEBRA_TOL};
use crate::{Error, Result};

const ZERO: Amplitude = Amplitude::new(0.0, 0.0);
const ONE: Amplitude = Amplitude::new(1.0, 0.0);
const I: Amplitude = Amplitude::new(0.0, 1.0);

/// A single-qubit unitary with a display label.
#[derive(Clone, PartialEq)]
pub struct Gate1Q {
    matrix: [[Amplitude; 2]; 2],
    label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn gate(self) -> Gate1Q {
        match self {
            Pauli::I => Gate1Q::identity(),
            Pauli::X => Gate1Q::pauli_x(),
            Pauli::Y => Gate1Q::pauli_y(),
            Pauli::Z => Gate1Q::pauli_z(),
        }
    }
}

impl Gate1Q {
    /// Builds a gate from an explicit matrix, rejecting non-unitary input.
    pub fn new(matrix: [[Amplitude; 2]; 2], label: impl Into<String>) -> Result<Self> {
        let gate = Gate1Q {
            matrix,
            label: label.into(),
        };
        let dev = gate.unitarity_deviation();
        if !dev.is_finite() || dev > ALGEBRA_TOL {
            return Err(Error::invalid(format!(
                "gate {} is not unitary (max |U†U - I| = {dev:e})",
                gate.label
            )));
        }
        Ok(gate)
    }

    pub(crate) fn from_trusted(matrix: [[Amplitude; 2]; 2], label: impl Into<String>) -> Self {
        Gate1Q {
            matrix,
            label: label.into(),
        }
    }

    pub fn identity() -> Self {
        Self::from_trusted([[ONE, ZERO], [ZERO, ONE]], "I")
    }

    pub fn hadamard() -> Self {
        let h = Amplitude::new(FRAC_1_SQRT_2, 0.0);
        Self::from_trusted([[h, h], [h, -h]], "H")
    }

    pub fn pauli_x() -> Self {
        Self::from_trusted([[ZERO, ONE], [ONE, ZERO]], "X")
    }

    pub fn pauli_y() -> Self {
        Self::from_trusted([[ZERO, -I], [I, ZERO]], "Y")
    }

    pub fn pauli_z() -> Self {
        Self::from_trusted([[ONE, ZERO], [ZERO, -ONE]], "Z")
    }

    pub fn matrix(&self) -> &[[Amplitude; 2]; 2] {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn adjoint(&self) -> Gate1Q {
        let m = &self.matrix;
        Self::from_trusted(
            [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
            format!("{}†", self.label),
        )
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Gate1Q) -> Gate1Q {
        Self::from_trusted(
            mul2(&self.matrix, &rhs.matrix),
            format!("{}·{}", self.label, rhs.label),
        )
    }

    /// max |U†U − I| over all entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = mul2(&self.adjoint().matrix, &self.matrix);
        let mut dev: f64 = 0.0;
        for (r, row) in p.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let want = if r == c { ONE } else { ZERO };
                dev = dev.max((v - want).norm());
            }
        }
        dev
    }

    /// True when the gate equals the identity up to `tol` (phase-sensitive).
    pub fn is_identity(&self, tol: f64) -> bool {
        (self.matrix[0][0] - ONE).norm() <= tol
            && (self.matrix[1][1] - ONE).norm() <= tol
            && self.matrix[0][1].norm() <= tol
            && self.matrix[1][0].norm() <= tol
    }
}

impl fmt::Debug for Gate1Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.label, self.matrix)
    }
}

pub(crate) fn mul2(a: &[[Amplitude; 2]; 2], b: &[[Amplitude; 2]; 2]) -> [[Amplitude; 2]; 2] {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}
