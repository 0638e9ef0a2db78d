//! The experiment circuit: two Bell pairs, Bob's Bell-state measurement and
//! Alice/Charlie basis rotations for each of the twelve `xz` settings.
//!
//! Register order is (A, B₁, B₂, C) so an outcome index reads `a b₁ b₂ c`
//! from most to least significant bit.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use crate::dist::OutcomeDistribution;
use crate::qcore::{Amplitude, DensityOperator, Gate1Q, QubitIndex, StateVector};
use crate::{Error, Result, N_QUBITS};

pub const ALICE: QubitIndex = QubitIndex(0);
pub const BOB1: QubitIndex = QubitIndex(1);
pub const BOB2: QubitIndex = QubitIndex(2);
pub const CHARLIE: QubitIndex = QubitIndex(3);

/// One of the twelve Alice/Charlie measurement settings used by the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Xz {
    X11,
    X12,
    X21,
    X22,
    X13,
    X14,
    X33,
    X34,
    X25,
    X26,
    X35,
    X36,
}

impl Xz {
    /// Canonical order, also the column order of probability matrices.
    pub const ALL: [Xz; 12] = [
        Xz::X11,
        Xz::X12,
        Xz::X21,
        Xz::X22,
        Xz::X13,
        Xz::X14,
        Xz::X33,
        Xz::X34,
        Xz::X25,
        Xz::X26,
        Xz::X35,
        Xz::X36,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Xz::X11 => "11",
            Xz::X12 => "12",
            Xz::X21 => "21",
            Xz::X22 => "22",
            Xz::X13 => "13",
            Xz::X14 => "14",
            Xz::X33 => "33",
            Xz::X34 => "34",
            Xz::X25 => "25",
            Xz::X26 => "26",
            Xz::X35 => "35",
            Xz::X36 => "36",
        }
    }

    /// Position in [`Xz::ALL`].
    pub fn index(self) -> usize {
        Xz::ALL.iter().position(|&x| x == self).expect("listed")
    }

    /// Rotation angles (φ₁, θ₁, φ₂, θ₂) for this setting.
    pub fn angles(self) -> [f64; 4] {
        const P2: f64 = FRAC_PI_2;
        const P4: f64 = FRAC_PI_4;
        match self {
            Xz::X11 => [0.0, 0.0, 0.0, P4],
            Xz::X12 => [0.0, 0.0, 0.0, -P4],
            Xz::X21 => [0.0, P2, 0.0, P4],
            Xz::X22 => [0.0, P2, 0.0, -P4],
            Xz::X13 => [0.0, 0.0, P2, P4],
            Xz::X14 => [0.0, 0.0, -P2, P4],
            Xz::X33 => [P2, P2, P2, P4],
            Xz::X34 => [P2, P2, -P2, P4],
            Xz::X25 => [0.0, P2, P4, P2],
            Xz::X26 => [0.0, P2, -P4, P2],
            Xz::X35 => [P2, P2, P4, P2],
            Xz::X36 => [P2, P2, -P4, P2],
        }
    }
}

impl fmt::Display for Xz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Xz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Xz::ALL
            .into_iter()
            .find(|x| x.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown measurement setting '{s}'")))
    }
}

/// Alice/Charlie basis-rotation angles for one setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub xz: Xz,
    pub phi1: f64,
    pub theta1: f64,
    pub phi2: f64,
    pub theta2: f64,
}

impl MeasurementConfig {
    pub fn for_xz(xz: Xz) -> Self {
        let [phi1, theta1, phi2, theta2] = xz.angles();
        MeasurementConfig {
            xz,
            phi1,
            theta1,
            phi2,
            theta2,
        }
    }
}

/// Looks up the angle row for a setting label such as `"36"`.
pub fn angle_lookup(label: &str) -> Result<MeasurementConfig> {
    Ok(MeasurementConfig::for_xz(label.parse()?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

/// R_n(θ) = cos(θ/2) I − i sin(θ/2) σ_n.
pub fn rotation_gate(axis: Axis, angle: f64) -> Gate1Q {
    let (s, c) = (angle / 2.0).sin_cos();
    let z = Amplitude::new(0.0, 0.0);
    let (matrix, name) = match axis {
        Axis::Y => (
            [
                [Amplitude::new(c, 0.0), Amplitude::new(-s, 0.0)],
                [Amplitude::new(s, 0.0), Amplitude::new(c, 0.0)],
            ],
            "Ry",
        ),
        Axis::Z => (
            [[Amplitude::new(c, -s), z], [z, Amplitude::new(c, s)]],
            "Rz",
        ),
    };
    Gate1Q::from_trusted(matrix, format!("{name}({angle:.6})"))
}

/// Rotations that bring σ_n, n = (cos φ sin θ, sin φ sin θ, cos θ), onto σᶻ:
/// first Rz(−φ), then Ry(−θ).
pub fn basis_change(phi: f64, theta: f64) -> [Gate1Q; 2] {
    [rotation_gate(Axis::Z, -phi), rotation_gate(Axis::Y, -theta)]
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Gate {
        gate: Gate1Q,
        target: QubitIndex,
    },
    /// `slot` numbers the CNOTs in circuit order; noise models key on it.
    Cnot {
        control: QubitIndex,
        target: QubitIndex,
        slot: usize,
    },
}

/// Measured outcome (a, b₁, b₂, c). `a` and `c` are ±1; Bob's bits are 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub a: i8,
    pub b1: u8,
    pub b2: u8,
    pub c: i8,
}

impl Outcome {
    pub fn from_index(index: usize) -> Self {
        let bit = |q: QubitIndex| ((index >> (N_QUBITS - 1 - q.0)) & 1) as u8;
        let sign = |b: u8| if b == 0 { 1 } else { -1 };
        Outcome {
            a: sign(bit(ALICE)),
            b1: bit(BOB1),
            b2: bit(BOB2),
            c: sign(bit(CHARLIE)),
        }
    }

    pub fn to_index(self) -> usize {
        let bit = |s: i8| usize::from(s < 0);
        (bit(self.a) << 3) | ((self.b1 as usize) << 2) | ((self.b2 as usize) << 1) | bit(self.c)
    }

    /// Bob's result as the two-bit value b₁b₂ (0..4).
    pub fn bob(self) -> usize {
        ((self.b1 as usize) << 1) | self.b2 as usize
    }
}

/// The four-qubit experiment circuit for one measurement setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub config: MeasurementConfig,
    ops: Vec<Op>,
}

/// H on `first`, then CNOT `first` → `second`; maps |00⟩ to |Φ⁺⟩.
pub fn bell_pair_ops(first: QubitIndex, second: QubitIndex, slot: usize) -> Vec<Op> {
    vec![
        Op::Gate {
            gate: Gate1Q::hadamard(),
            target: first,
        },
        Op::Cnot {
            control: first,
            target: second,
            slot,
        },
    ]
}

/// CNOT `first` → `second`, then H on `first`. Maps |Φ⁺⟩→00, |Φ⁻⟩→10,
/// |Ψ⁺⟩→01, |Ψ⁻⟩→11 (bits of `first`, `second`).
pub fn bell_measurement_ops(first: QubitIndex, second: QubitIndex, slot: usize) -> Vec<Op> {
    vec![
        Op::Cnot {
            control: first,
            target: second,
            slot,
        },
        Op::Gate {
            gate: Gate1Q::hadamard(),
            target: first,
        },
    ]
}

pub fn build_experiment(config: MeasurementConfig) -> Circuit {
    let mut ops = Vec::with_capacity(10);
    ops.extend(bell_pair_ops(ALICE, BOB1, 0));
    ops.extend(bell_pair_ops(BOB2, CHARLIE, 1));
    ops.extend(bell_measurement_ops(BOB1, BOB2, 2));
    for gate in basis_change(config.phi1, config.theta1) {
        ops.push(Op::Gate {
            gate,
            target: ALICE,
        });
    }
    for gate in basis_change(config.phi2, config.theta2) {
        ops.push(Op::Gate {
            gate,
            target: CHARLIE,
        });
    }
    Circuit { config, ops }
}

impl Circuit {
    pub const N_CNOT_SLOTS: usize = 3;

    pub fn n_qubits(&self) -> usize {
        N_QUBITS
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    /// Noise-free evolution of |0000⟩.
    pub fn run_pure(&self) -> StateVector {
        let mut state = StateVector::new_zero(N_QUBITS).expect("4 qubits is in range");
        apply_ops_pure(&mut state, &self.ops).expect("circuit ops are in range");
        state
    }

    pub fn initial_density(&self) -> DensityOperator {
        DensityOperator::new_zero(N_QUBITS).expect("4 qubits is in range")
    }
}

pub fn apply_ops_pure(state: &mut StateVector, ops: &[Op]) -> Result<()> {
    for op in ops {
        match op {
            Op::Gate { gate, target } => state.apply_gate1q(gate, *target)?,
            Op::Cnot {
                control, target, ..
            } => state.apply_cnot(*control, *target)?,
        }
    }
    Ok(())
}

/// Exact Born-rule distribution of the noise-free experiment.
pub fn ideal_distribution(config: MeasurementConfig) -> OutcomeDistribution {
    build_experiment(config)
        .run_pure()
        .probabilities()
        .expect("unitary evolution keeps the norm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    const HI: f64 = 0.106_694_173_824_159_22;
    const LO: f64 = 0.018_305_826_175_840_784;

    fn c(re: f64, im: f64) -> Amplitude {
        Amplitude::new(re, im)
    }

    fn close(g: &Gate1Q, want: [[Amplitude; 2]; 2]) -> bool {
        (0..2).all(|r| (0..2).all(|k| (g.matrix()[r][k] - want[r][k]).norm() < 1e-15))
    }

    #[test]
    fn table_rows() {
        let m = angle_lookup("11").unwrap();
        assert_eq!(
            (m.phi1, m.theta1, m.phi2, m.theta2),
            (0.0, 0.0, 0.0, PI / 4.0)
        );
        let m = angle_lookup("36").unwrap();
        assert_eq!(
            (m.phi1, m.theta1, m.phi2, m.theta2),
            (PI / 2.0, PI / 2.0, -PI / 4.0, PI / 2.0)
        );
        assert!(matches!(angle_lookup("15"), Err(Error::InvalidArgument(_))));
        assert!(angle_lookup("23").is_err());
        for xz in Xz::ALL {
            assert_eq!(xz.label().parse::<Xz>().unwrap(), xz);
        }
    }

    #[test]
    fn rotation_examples() {
        let z = c(0.0, 0.0);
        assert!(close(
            &rotation_gate(Axis::Y, 0.0),
            [[c(1.0, 0.0), z], [z, c(1.0, 0.0)]]
        ));
        assert!(rotation_gate(Axis::Z, PI).matrix()[0][0].re.abs() < 1e-15);
        assert!(close(
            &rotation_gate(Axis::Z, PI),
            [[c(0.0, -1.0), z], [z, c(0.0, 1.0)]]
        ));
        let h = FRAC_1_SQRT_2;
        assert!(close(
            &rotation_gate(Axis::Y, PI / 2.0),
            [[c(h, 0.0), c(-h, 0.0)], [c(h, 0.0), c(h, 0.0)]]
        ));
        for angle in [-2.0, -0.3, 0.0, 0.7, 3.1] {
            assert!(rotation_gate(Axis::Y, angle).unitarity_deviation() < 1e-12);
            assert!(rotation_gate(Axis::Z, angle).unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn rz_pi_on_plus_gives_minus_up_to_phase() {
        let mut s = StateVector::new_zero(1).unwrap();
        s.apply_gate1q(&Gate1Q::hadamard(), QubitIndex(0)).unwrap();
        s.apply_gate1q(&rotation_gate(Axis::Z, PI), QubitIndex(0))
            .unwrap();
        let minus =
            StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)])
                .unwrap();
        assert!((s.inner(&minus).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_11_structure() {
        let circ = build_experiment(angle_lookup("11").unwrap());
        let cnots = circ
            .ops()
            .iter()
            .filter(|o| matches!(o, Op::Cnot { .. }))
            .count();
        let nontrivial: Vec<_> = circ
            .ops()
            .iter()
            .filter_map(|o| match o {
                Op::Gate { gate, target } if !gate.is_identity(1e-15) => {
                    Some((gate.label(), *target))
                }
                _ => None,
            })
            .collect();
        assert_eq!(cnots, 3);
        // three Hadamards plus Charlie's Ry(−π/4)
        assert_eq!(nontrivial.len(), 4);
        assert_eq!(nontrivial[3].1, CHARLIE);
        assert!(nontrivial[3].0.starts_with("Ry(-0.785398"));
    }

    #[test]
    fn ideal_entries_take_two_values() {
        for xz in Xz::ALL {
            let d = ideal_distribution(MeasurementConfig::for_xz(xz));
            assert!((d.total() - 1.0).abs() < 1e-12);
            for &p in d.values() {
                assert!(
                    (p - HI).abs() < 1e-12 || (p - LO).abs() < 1e-12,
                    "{xz}: {p}"
                );
            }
            let mut bob = [0.0; 4];
            for (i, p) in d.values().iter().enumerate() {
                bob[Outcome::from_index(i).bob()] += p;
            }
            for pb in bob {
                assert!((pb - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ideal_11_pattern() {
        // frozen from an independent Kronecker-product evaluation
        let pattern = "HLLHHLLHLHHLLHHL";
        let d = ideal_distribution(MeasurementConfig::for_xz(Xz::X11));
        for (p, ch) in d.values().iter().zip(pattern.chars()) {
            let want = if ch == 'H' { HI } else { LO };
            assert!((p - want).abs() < 1e-12);
        }
    }

    #[test]
    fn outcome_labels_biject() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..16 {
            let o = Outcome::from_index(i);
            assert_eq!(o.to_index(), i);
            seen.insert((o.a, o.b1, o.b2, o.c));
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(
            Outcome::from_index(0b1001),
            Outcome {
                a: -1,
                b1: 0,
                b2: 0,
                c: -1
            }
        );
    }
}
