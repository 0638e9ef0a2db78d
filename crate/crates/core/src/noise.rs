//! Noisy simulation of the experiment and reproducible finite-shot sampling.
//!
//! Gate noise is depolarizing: after every single-qubit gate the target gets
//! ρ → (1−p)ρ + (p/3)(XρX + YρY + ZρZ), and after the CNOT in slot `k` the
//! pair gets ρ → (1−p_k)ρ + (p_k/15) Σ_{P≠II} PρP. Readout noise acts on the
//! final diagonal as a per-qubit 2×2 confusion matrix.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(master_seed)` and split into independent streams with
//! `set_stream`. Counts are drawn shot by shot: each shot takes one `f64`
//! uniform in [0, 1) and selects the first outcome whose cumulative
//! probability exceeds it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Op, Xz};
use crate::dist::{Counts, DistributionKind, OutcomeDistribution};
use crate::qcore::DensityOperator;
use crate::{Error, Result, N_QUBITS};

/// Per-qubit readout confusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutConfusion {
    /// P(read 1 | true 0)
    pub p01: f64,
    /// P(read 0 | true 1)
    pub p10: f64,
}

impl ReadoutConfusion {
    pub const PERFECT: ReadoutConfusion = ReadoutConfusion { p01: 0.0, p10: 0.0 };

    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        check_unit(p01, "p01")?;
        check_unit(p10, "p10")?;
        Ok(ReadoutConfusion { p01, p10 })
    }

    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    /// Column-stochastic [[1−p01, p10], [p01, 1−p10]]; column = true bit.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p01, self.p10], [self.p01, 1.0 - self.p10]]
    }
}

fn check_unit(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} = {p} outside [0, 1]")))
    }
}

/// Readout and gate noise for the four-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Indexed by logical qubit (A, B₁, B₂, C).
    pub readout: [ReadoutConfusion; N_QUBITS],
    pub depol1q: f64,
    /// Indexed by CNOT slot: (A→B₁), (B₂→C), (B₁→B₂).
    pub depol2q: [f64; Circuit::N_CNOT_SLOTS],
    pub label: String,
}

impl NoiseModel {
    pub fn ideal() -> Self {
        NoiseModel {
            readout: [ReadoutConfusion::PERFECT; N_QUBITS],
            depol1q: 0.0,
            depol2q: [0.0; Circuit::N_CNOT_SLOTS],
            label: "ideal".into(),
        }
    }

    /// Readout noise only.
    pub fn readout_only(readout: [ReadoutConfusion; N_QUBITS], label: impl Into<String>) -> Self {
        NoiseModel {
            readout,
            label: label.into(),
            ..Self::ideal()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.readout {
            check_unit(r.p01, "p01")?;
            check_unit(r.p10, "p10")?;
        }
        check_unit(self.depol1q, "depol1q")?;
        for &p in &self.depol2q {
            check_unit(p, "depol2q")?;
        }
        Ok(())
    }

    pub fn has_gate_noise(&self) -> bool {
        self.depol1q > 0.0 || self.depol2q.iter().any(|&p| p > 0.0)
    }
}

/// Evolves |0000⟩ through `circuit` with depolarizing gate noise.
pub fn evolve_density(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityOperator> {
    noise.validate()?;
    let mut rho = circuit.initial_density();
    for op in circuit.ops() {
        match op {
            Op::Gate { gate, target } => {
                rho.apply_gate1q(gate, *target)?;
                rho.depolarize_1q(*target, noise.depol1q)?;
            }
            Op::Cnot {
                control,
                target,
                slot,
            } => {
                let p = *noise.depol2q.get(*slot).ok_or_else(|| {
                    Error::invalid(format!("noise model has no entry for CNOT slot {slot}"))
                })?;
                rho.apply_cnot(*control, *target)?;
                rho.depolarize_2q(*control, *target, p)?;
            }
        }
    }
    Ok(rho)
}

/// Outcome distribution of `circuit` under `noise`, readout confusion included.
pub fn simulate_noisy(circuit: &Circuit, noise: &NoiseModel) -> Result<OutcomeDistribution> {
    let rho = evolve_density(circuit, noise)?;
    apply_readout_confusion(&rho.probabilities()?, &noise.readout)
}

/// dist' = (⊗ᵢ Mᵢ)·dist with qubit 0 as the most significant factor.
pub fn apply_readout_confusion(
    dist: &OutcomeDistribution,
    readout: &[ReadoutConfusion],
) -> Result<OutcomeDistribution> {
    if dist.kind() != DistributionKind::Probability {
        return Err(Error::invalid(
            "readout confusion needs a probability distribution",
        ));
    }
    let n = readout.len();
    if dist.len() != 1 << n {
        return Err(Error::invalid(format!(
            "distribution of length {} does not match {n} readout entries",
            dist.len()
        )));
    }
    let mut v = dist.values().to_vec();
    for (q, conf) in readout.iter().enumerate() {
        let m = conf.matrix();
        let mask = 1 << (n - 1 - q);
        for i in 0..v.len() {
            if i & mask == 0 {
                let (p0, p1) = (v[i], v[i | mask]);
                v[i] = m[0][0] * p0 + m[0][1] * p1;
                v[i | mask] = m[1][0] * p0 + m[1][1] * p1;
            }
        }
    }
    OutcomeDistribution::probability(v)
}

/// Independent random streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    Experiment { session: u32, repeat: u32, xz: Xz },
    Calibration { session: u32, prepared: usize },
}

impl StreamId {
    fn number(self) -> u64 {
        // tag (8 bits) | session (20) | repeat (24) | slot (12)
        let (tag, session, repeat, slot) = match self {
            StreamId::Experiment {
                session,
                repeat,
                xz,
            } => (1u64, session, repeat, xz.index() as u64),
            StreamId::Calibration { session, prepared } => (2u64, session, 0, prepared as u64),
        };
        assert!(
            session < 1 << 20 && repeat < 1 << 24 && slot < 1 << 12,
            "stream id overflow"
        );
        (tag << 56) | ((session as u64) << 36) | ((repeat as u64) << 12) | slot
    }
}

/// RNG for one (master seed, stream) pair.
pub fn stream_rng(master_seed: u64, stream: StreamId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream.number());
    rng
}

/// Multinomial draw of `shots` outcomes from `dist`, seeded.
pub fn sample_counts(dist: &OutcomeDistribution, shots: u64, seed: u64) -> Result<Counts> {
    sample_counts_with(dist, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Multinomial draw using an caller-supplied generator (one uniform per shot).
pub fn sample_counts_with<R: Rng + ?Sized>(
    dist: &OutcomeDistribution,
    shots: u64,
    rng: &mut R,
) -> Result<Counts> {
    if dist.kind() != DistributionKind::Probability {
        return Err(Error::invalid(
            "cannot sample from a quasiprobability distribution",
        ));
    }
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let values = dist.values();
    let mut cdf = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for &p in values {
        acc += p;
        cdf.push(acc);
    }
    let last_nonzero = values
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("mass sums to 1");
    let mut counts = vec![0u64; values.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let k = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        counts[k] += 1;
    }
    Counts::new(counts)
}
