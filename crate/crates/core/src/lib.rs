//! Simulation, readout-error mitigation and scoring for the four-qubit
//! entanglement-swapping test that separates real-valued from complex-valued
//! quantum theory.
//!
//! Two Bell pairs are prepared, Bob performs a Bell-state measurement on one
//! qubit from each pair, and Alice and Charlie measure the remaining qubits in
//! one of twelve basis combinations. The resulting score Γ reaches 6√2 for
//! standard (complex) quantum mechanics, while real-valued models are bounded
//! near 7.66 and classical models by 6.
//!
//! Module map:
//! - [`qcore`]: dense statevector and density-operator evolution for ≤ 4 qubits.
//! - [`circuit`]: the twelve measurement configurations and the experiment circuit.
//! - [`noise`]: depolarizing / readout noise, seeded multinomial sampling.
//! - [`calibration`]: device calibration tables and noise models derived from them.
//! - [`mitigate`]: calibration matrices, inversion and NNLS correction.
//! - [`nnls`]: Lawson–Hanson non-negative least squares.
//! - [`score`]: correlators, T_b, Γ and session aggregation.
//! - [`harness`]: config-driven experiment runs and their output files.

pub mod calibration;
pub mod circuit;
pub mod dist;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mitigate;
pub mod nnls;
pub mod noise;
pub mod qcore;
pub mod score;

pub use error::{Error, Result};

/// Number of qubits in the experiment register (A, B₁, B₂, C).
pub const N_QUBITS: usize = 4;
/// Number of computational-basis outcomes of the experiment register.
pub const N_OUTCOMES: usize = 1 << N_QUBITS;

/// Score reached by complex quantum mechanics, 6√2.
pub const GAMMA_COMPLEX: f64 = 6.0 * std::f64::consts::SQRT_2;
/// Upper bound for real-valued quantum models (cited constant).
pub const GAMMA_REAL_BOUND: f64 = 7.66;
/// Classical bound.
pub const GAMMA_CLASSICAL_BOUND: f64 = 6.0;
