//! Outcome tallies and (quasi)probability vectors over computational-basis
//! outcomes.

use std::fmt;

use crate::{Error, Result};

/// Total-mass tolerance for every distribution.
pub const SUM_TOL: f64 = 1e-9;
/// Entries above `-NEG_TOL` count as non-negative (roundoff from evolution).
pub const NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistributionKind {
    Probability,
    Quasiprobability,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistributionKind::Probability => "probability",
            DistributionKind::Quasiprobability => "quasiprobability",
        })
    }
}

/// A normalized real vector over outcomes; probabilities are additionally
/// non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    values: Vec<f64>,
    kind: DistributionKind,
}

impl OutcomeDistribution {
    /// Validates a probability vector. Tiny negative roundoff (≥ −1e-12) is
    /// clamped to zero.
    pub fn probability(mut values: Vec<f64>) -> Result<Self> {
        check_mass(&values)?;
        for v in values.iter_mut() {
            if *v < -NEG_TOL {
                return Err(Error::invalid(format!("negative probability {v}")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(OutcomeDistribution {
            values,
            kind: DistributionKind::Probability,
        })
    }

    /// Classifies a normalized vector: any entry below −1e-12 makes it a
    /// quasiprobability.
    pub fn classify(values: Vec<f64>) -> Result<Self> {
        check_mass(&values)?;
        if values.iter().any(|&v| v < -NEG_TOL) {
            Ok(OutcomeDistribution {
                values,
                kind: DistributionKind::Quasiprobability,
            })
        } else {
            Self::probability(values)
        }
    }

    /// Uniform distribution over `len` outcomes.
    pub fn uniform(len: usize) -> Self {
        OutcomeDistribution {
            values: vec![1.0 / len as f64; len],
            kind: DistributionKind::Probability,
        }
    }

    /// Point mass at `index`.
    pub fn delta(len: usize, index: usize) -> Self {
        let mut values = vec![0.0; len];
        values[index] = 1.0;
        OutcomeDistribution {
            values,
            kind: DistributionKind::Probability,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_mass(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("empty distribution"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite distribution entry"));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::invalid(format!(
            "distribution sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Integer shot tallies per outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Counts {
    counts: Vec<u64>,
    shots: u64,
}

impl Counts {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let shots = counts.iter().sum();
        if counts.is_empty() {
            return Err(Error::invalid("empty counts"));
        }
        if shots == 0 {
            return Err(Error::invalid("counts contain no shots"));
        }
        Ok(Counts { counts, shots })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Observed frequencies counts / shots.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn to_distribution(&self) -> OutcomeDistribution {
        OutcomeDistribution::probability(self.frequencies())
            .expect("frequencies of a nonempty tally are a distribution")
    }
}

/// Bitstring of `index` over `n_bits` bits, most significant first.
pub fn bitstring(index: usize, n_bits: usize) -> String {
    (0..n_bits)
        .map(|k| {
            if index >> (n_bits - 1 - k) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Inverse of [`bitstring`].
pub fn parse_bitstring(s: &str, n_bits: usize) -> Result<usize> {
    if s.len() != n_bits || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::invalid(format!(
            "'{s}' is not a {n_bits}-bit string"
        )));
    }
    Ok(usize::from_str_radix(s, 2).expect("validated binary"))
}
