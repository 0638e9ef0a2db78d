//! Dense complex linear algebra for registers of at most four qubits.
//!
//! Qubit 0 is the most significant bit of every basis index: for a register
//! of `n` qubits, qubit `q` corresponds to bit `n - 1 - q`.

mod density;
mod gate;
mod state;

pub use density::DensityOperator;
pub use gate::{Gate1Q, Pauli};
pub use state::StateVector;

use crate::{Error, Result};

pub type Amplitude = num_complex::Complex64;

/// Largest register this crate simulates.
pub const MAX_QUBITS: usize = 4;

/// Tolerance used for algebraic identities (unitarity, normalization).
pub const ALGEBRA_TOL: f64 = 1e-12;

/// Position of a qubit within a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitIndex(pub usize);

impl QubitIndex {
    pub(crate) fn check(self, n_qubits: usize) -> Result<()> {
        if self.0 < n_qubits {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "qubit {} out of range for a {n_qubits}-qubit register",
                self.0
            )))
        }
    }

    /// Bit mask of this qubit inside a basis index.
    pub(crate) fn mask(self, n_qubits: usize) -> usize {
        1 << (n_qubits - 1 - self.0)
    }
}

impl From<usize> for QubitIndex {
    fn from(i: usize) -> Self {
        QubitIndex(i)
    }
}

pub(crate) fn check_register_size(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        )))
    }
}

pub(crate) fn check_cnot(control: QubitIndex, target: QubitIndex, n_qubits: usize) -> Result<()> {
    control.check(n_qubits)?;
    target.check(n_qubits)?;
    if control == target {
        return Err(Error::invalid(format!(
            "cnot control and target are both qubit {}",
            control.0
        )));
    }
    Ok(())
}

/// Applies a 2×2 matrix to every amplitude pair of `vec` that differs only in
/// the bit selected by `mask`. `stride` and `offset` let the same routine walk
/// rows or columns of a row-major square matrix.
pub(crate) fn apply_2x2(
    vec: &mut [Amplitude],
    m: &[[Amplitude; 2]; 2],
    mask: usize,
    dim: usize,
    stride: usize,
    offset: usize,
) {
    for i in 0..dim {
        if i & mask != 0 {
            continue;
        }
        let j = i | mask;
        let (ii, jj) = (offset + i * stride, offset + j * stride);
        let (a0, a1) = (vec[ii], vec[jj]);
        vec[ii] = m[0][0] * a0 + m[0][1] * a1;
        vec[jj] = m[1][0] * a0 + m[1][1] * a1;
    }
}
