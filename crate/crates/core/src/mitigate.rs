//! Readout-error mitigation with a 16×16 calibration matrix C, where
//! m_exp = C·m_ideal and column j of C is the observed distribution when
//! basis state j is prepared.

use crate::circuit::Op;
use crate::dist::{Counts, OutcomeDistribution};
use crate::linalg::Matrix;
use crate::nnls::nnls;
use crate::noise::{
    apply_readout_confusion, sample_counts_with, stream_rng, NoiseModel, ReadoutConfusion, StreamId,
};
use crate::qcore::{DensityOperator, Gate1Q, QubitIndex};
use crate::{Error, Result, N_OUTCOMES, N_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ExactFromModel,
    Measured { shots_per_state: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    matrix: Matrix,
    provenance: Provenance,
}

impl CalibrationMatrix {
    pub fn new(matrix: Matrix, provenance: Provenance) -> Result<Self> {
        if matrix.rows() != matrix.cols() || !matrix.rows().is_power_of_two() {
            return Err(Error::invalid(
                "calibration matrix must be square with 2ⁿ rows",
            ));
        }
        if matrix.as_row_major().iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::invalid(
                "calibration matrix entries must be non-negative",
            ));
        }
        for c in 0..matrix.cols() {
            let s: f64 = matrix.column(c).iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("column {c} sums to {s}, not 1")));
            }
        }
        Ok(CalibrationMatrix { matrix, provenance })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// C = ⊗ᵢ Mᵢ with qubit 0 as the leftmost (most significant) factor.
pub fn exact_calibration_matrix(readout: &[ReadoutConfusion]) -> Result<CalibrationMatrix> {
    let mut c = Matrix::identity(1);
    for conf in readout {
        let m = conf.matrix();
        let m = Matrix::from_row_major(2, 2, vec![m[0][0], m[0][1], m[1][0], m[1][1]])?;
        c = c.kron(&m);
    }
    CalibrationMatrix::new(c, Provenance::ExactFromModel)
}

/// Estimates C by preparing each basis state, reading it out through the
/// noise model and sampling `shots` counts. Columns use the calibration
/// streams of `session` under `master_seed`.
pub fn measure_calibration_matrix_in_session(
    noise: &NoiseModel,
    shots: u64,
    master_seed: u64,
    session: u32,
) -> Result<CalibrationMatrix> {
    noise.validate()?;
    if shots == 0 {
        return Err(Error::invalid("calibration shots must be at least 1"));
    }
    let mut c = Matrix::zeros(N_OUTCOMES, N_OUTCOMES);
    for prepared in 0..N_OUTCOMES {
        let observed = prepared_state_distribution(noise, prepared)?;
        let mut rng = stream_rng(master_seed, StreamId::Calibration { session, prepared });
        let counts = sample_counts_with(&observed, shots, &mut rng)?;
        for (r, f) in counts.frequencies().into_iter().enumerate() {
            c[(r, prepared)] = f;
        }
    }
    CalibrationMatrix::new(
        c,
        Provenance::Measured {
            shots_per_state: shots,
        },
    )
}

pub fn measure_calibration_matrix(
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    measure_calibration_matrix_in_session(noise, shots, seed, 0)
}

/// Readout distribution after preparing basis state `prepared` with X gates.
fn prepared_state_distribution(noise: &NoiseModel, prepared: usize) -> Result<OutcomeDistribution> {
    let ops: Vec<Op> = (0..N_QUBITS)
        .filter(|q| prepared >> (N_QUBITS - 1 - q) & 1 == 1)
        .map(|q| Op::Gate {
            gate: Gate1Q::pauli_x(),
            target: QubitIndex(q),
        })
        .collect();
    let mut rho = DensityOperator::new_zero(N_QUBITS)?;
    for op in &ops {
        if let Op::Gate { gate, target } = op {
            rho.apply_gate1q(gate, *target)?;
            rho.depolarize_1q(*target, noise.depol1q)?;
        }
    }
    apply_readout_confusion(&rho.probabilities()?, &noise.readout)
}

fn check_dims(c: &CalibrationMatrix, len: usize) -> Result<()> {
    if c.dim() != len {
        return Err(Error::invalid(format!(
            "calibration matrix is {0}×{0} but counts have {len} outcomes",
            c.dim()
        )));
    }
    Ok(())
}

/// x = C⁻¹·f for observed frequencies f.
pub fn invert_frequencies(c: &CalibrationMatrix, freqs: &[f64]) -> Result<OutcomeDistribution> {
    check_dims(c, freqs.len())?;
    let x = c.matrix.inverse()?.mul_vec(freqs);
    OutcomeDistribution::classify(x)
}

pub fn correct_by_inversion(c: &CalibrationMatrix, counts: &Counts) -> Result<OutcomeDistribution> {
    invert_frequencies(c, &counts.frequencies())
}

/// x = nnls(C, f), rescaled to unit total probability.
pub fn nnls_frequencies(c: &CalibrationMatrix, freqs: &[f64]) -> Result<OutcomeDistribution> {
    check_dims(c, freqs.len())?;
    let sol = nnls(&c.matrix, freqs)?;
    let total: f64 = sol.x.iter().sum();
    if total <= 0.0 {
        return Err(Error::Internal("nnls returned the zero vector".into()));
    }
    OutcomeDistribution::probability(sol.x.iter().map(|v| v / total).collect())
}

pub fn correct_by_nnls(c: &CalibrationMatrix, counts: &Counts) -> Result<OutcomeDistribution> {
    nnls_frequencies(c, &counts.frequencies())
}
