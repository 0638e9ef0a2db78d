use super::{
    apply_2x2, check_cnot, check_register_size, Amplitude, Gate1Q, QubitIndex, ALGEBRA_TOL,
};
use crate::dist::OutcomeDistribution;
use crate::{Error, Result};

/// Pure state of a register of 1..=4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// |0…0⟩ on `n_qubits` qubits.
    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        check_register_size(n_qubits)?;
        let mut amps = vec![Amplitude::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Amplitude::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::new_zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amps[0] = Amplitude::new(0.0, 0.0);
        s.amps[index] = Amplitude::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps explicit amplitudes. The vector must already be normalized.
    pub fn from_amplitudes(amps: Vec<Amplitude>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register_size(n_qubits)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("non-finite amplitude"));
        }
        let s = StateVector { n_qubits, amps };
        let dev = (s.norm_sqr() - 1.0).abs();
        if dev > 1e-10 {
            return Err(Error::invalid(format!(
                "state is not normalized (|norm² - 1| = {dev:e})"
            )));
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate1q(&mut self, gate: &Gate1Q, target: QubitIndex) -> Result<()> {
        target.check(self.n_qubits)?;
        let dim = self.amps.len();
        apply_2x2(
            &mut self.amps,
            gate.matrix(),
            target.mask(self.n_qubits),
            dim,
            1,
            0,
        );
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: QubitIndex, target: QubitIndex) -> Result<()> {
        check_cnot(control, target, self.n_qubits)?;
        let cm = control.mask(self.n_qubits);
        let tm = target.mask(self.n_qubits);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Amplitude {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Born-rule distribution over computational-basis outcomes.
    pub fn probabilities(&self) -> Result<OutcomeDistribution> {
        let dev = (self.norm_sqr() - 1.0).abs();
        if dev > ALGEBRA_TOL {
            return Err(Error::Internal(format!("state norm drifted by {dev:e}")));
        }
        OutcomeDistribution::probability(self.amps.iter().map(|a| a.norm_sqr()).collect())
    }
}
