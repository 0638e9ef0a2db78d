use super::{
    apply_2x2, check_cnot, Amplitude, Gate1Q, Pauli, QubitIndex, StateVector, ALGEBRA_TOL,
};
use crate::dist::OutcomeDistribution;
use crate::{Error, Result};

/// Mixed state of a register of 1..=4 qubits, stored as a dense row-major
/// 2ⁿ × 2ⁿ matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    dim: usize,
    rho: Vec<Amplitude>,
}

impl DensityOperator {
    /// ρ = |ψ⟩⟨ψ|.
    pub fn from_pure(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut rho = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                rho.push(a * b.conj());
            }
        }
        DensityOperator {
            n_qubits: state.n_qubits(),
            dim,
            rho,
        }
    }

    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        Ok(Self::from_pure(&StateVector::new_zero(n_qubits)?))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.rho[row * self.dim + col]
    }

    pub fn trace(&self) -> Amplitude {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// tr(ρ²).
    pub fn purity(&self) -> f64 {
        let mut acc = Amplitude::new(0.0, 0.0);
        for r in 0..self.dim {
            for c in 0..self.dim {
                acc += self.get(r, c) * self.get(c, r);
            }
        }
        acc.re
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }

    /// ρ → U ρ U† with U acting on `target`.
    pub fn apply_gate1q(&mut self, gate: &Gate1Q, target: QubitIndex) -> Result<()> {
        target.check(self.n_qubits)?;
        self.conjugate_unchecked(gate, target);
        Ok(())
    }

    fn conjugate_unchecked(&mut self, gate: &Gate1Q, target: QubitIndex) {
        let mask = target.mask(self.n_qubits);
        let dim = self.dim;
        // left multiply: every column is a vector with stride `dim`
        for col in 0..dim {
            apply_2x2(&mut self.rho, gate.matrix(), mask, dim, dim, col);
        }
        // right multiply by U†: every row transforms with conj(U)
        let m = gate.matrix();
        let conj = [
            [m[0][0].conj(), m[0][1].conj()],
            [m[1][0].conj(), m[1][1].conj()],
        ];
        for row in 0..dim {
            apply_2x2(&mut self.rho, &conj, mask, dim, 1, row * dim);
        }
    }

    pub fn apply_cnot(&mut self, control: QubitIndex, target: QubitIndex) -> Result<()> {
        check_cnot(control, target, self.n_qubits)?;
        let cm = control.mask(self.n_qubits);
        let tm = target.mask(self.n_qubits);
        let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
        let old = self.rho.clone();
        for r in 0..self.dim {
            for c in 0..self.dim {
                self.rho[perm(r) * self.dim + perm(c)] = old[r * self.dim + c];
            }
        }
        Ok(())
    }

    /// ρ → (1−p)ρ + (p/3)(XρX + YρY + ZρZ) on `target`.
    pub fn depolarize_1q(&mut self, target: QubitIndex, p: f64) -> Result<()> {
        target.check(self.n_qubits)?;
        check_probability(p)?;
        if p == 0.0 {
            return Ok(());
        }
        let mut acc: Vec<Amplitude> = self.rho.iter().map(|v| v * (1.0 - p)).collect();
        for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
            let mut term = self.clone();
            term.conjugate_unchecked(&pauli.gate(), target);
            for (a, t) in acc.iter_mut().zip(&term.rho) {
                *a += t * (p / 3.0);
            }
        }
        self.rho = acc;
        Ok(())
    }

    /// ρ → (1−p)ρ + (p/15) Σ_{P≠II} PρP on the pair (`q1`, `q2`).
    pub fn depolarize_2q(&mut self, q1: QubitIndex, q2: QubitIndex, p: f64) -> Result<()> {
        check_cnot(q1, q2, self.n_qubits)?;
        check_probability(p)?;
        if p == 0.0 {
            return Ok(());
        }
        let mut acc: Vec<Amplitude> = self.rho.iter().map(|v| v * (1.0 - p)).collect();
        for p1 in Pauli::ALL {
            for p2 in Pauli::ALL {
                if p1 == Pauli::I && p2 == Pauli::I {
                    continue;
                }
                let mut term = self.clone();
                term.conjugate_unchecked(&p1.gate(), q1);
                term.conjugate_unchecked(&p2.gate(), q2);
                for (a, t) in acc.iter_mut().zip(&term.rho) {
                    *a += t * (p / 15.0);
                }
            }
        }
        self.rho = acc;
        Ok(())
    }

    /// Diagonal of ρ as a computational-basis distribution.
    pub fn probabilities(&self) -> Result<OutcomeDistribution> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > ALGEBRA_TOL || tr.im.abs() > ALGEBRA_TOL {
            return Err(Error::Internal(format!("density trace drifted to {tr}")));
        }
        OutcomeDistribution::probability((0..self.dim).map(|i| self.get(i, i).re).collect())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("probability {p} outside [0, 1]")))
    }
}
