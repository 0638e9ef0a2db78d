//! Noise, sampling, mitigation and scoring checks against frozen oracle values.

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use complex_chsh::calibration::{load_calibration, noise_from_calibration};
use complex_chsh::circuit::{build_experiment, ideal_distribution, MeasurementConfig, Outcome, Xz};
use complex_chsh::dist::{Counts, DistributionKind, OutcomeDistribution};
use complex_chsh::harness::noisy_distributions;
use complex_chsh::linalg::Matrix;
use complex_chsh::mitigate::{
    correct_by_inversion, exact_calibration_matrix, invert_frequencies, measure_calibration_matrix,
    nnls_frequencies, CalibrationMatrix, Provenance,
};
use complex_chsh::noise::{sample_counts, simulate_noisy, NoiseModel, ReadoutConfusion};
use complex_chsh::score::{aggregate, gamma, gamma_from_weights, t_score, ExperimentData, Method};
use complex_chsh::{Error, GAMMA_COMPLEX};

/// 99.9th percentile of χ² with 15 degrees of freedom.
const CHI2_15_999: f64 = 37.69729821835383;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn lima_noise(gates: bool) -> NoiseModel {
    let rec = load_calibration(data_dir().join("ibmq_lima.csv"))
        .unwrap()
        .for_date("2022-04-14")
        .unwrap();
    let mut m = noise_from_calibration(&rec, [0, 1, 2, 3], [(0, 1), (1, 3), (1, 2)]).unwrap();
    if !gates {
        m.depol2q = [0.0; 3];
    }
    m
}

fn exact_data(noise: &NoiseModel) -> ExperimentData {
    let d = noisy_distributions(noise).unwrap();
    ExperimentData::from_fn(Method::Uncorrected, None, |xz| Ok(d[xz.index()].clone())).unwrap()
}

fn mitigated_exact(noise: &NoiseModel) -> f64 {
    let c = exact_calibration_matrix(&noise.readout).unwrap();
    let d = noisy_distributions(noise).unwrap();
    let data = ExperimentData::from_fn(Method::Inversion, None, |xz| {
        invert_frequencies(&c, d[xz.index()].values())
    })
    .unwrap();
    gamma(&data).unwrap().gamma
}

#[test]
fn calibration_table_examples() {
    let rec = load_calibration(data_dir().join("ibmq_lima.csv")).unwrap();
    let day = rec.for_date("2022-04-14").unwrap();
    assert_eq!(day.qubit(0).unwrap().readout_err, 1.78e-2);
    assert_eq!(day.pair(0, 1).unwrap().cnot_err, 5.290e-3);
    let m = lima_noise(true);
    let ro: Vec<f64> = m.readout.iter().map(|r| r.p01).collect();
    assert_eq!(ro, vec![0.0178, 0.0167, 0.0222, 0.0268]);

    let nai = load_calibration(data_dir().join("ibm_nairobi.csv"))
        .unwrap()
        .for_date("2022-09-28")
        .unwrap();
    let m = noise_from_calibration(&nai, [2, 1, 3, 5], [(1, 2), (3, 5), (1, 3)]).unwrap();
    let ro: Vec<f64> = m.readout.iter().map(|r| r.p10).collect();
    assert_eq!(ro, vec![0.0247, 0.0374, 0.0341, 0.0261]);
    assert!(matches!(
        noise_from_calibration(&nai, [9, 1, 3, 5], [(1, 2), (3, 5), (1, 3)]),
        Err(Error::InvalidArgument(_))
    ));
    // all four devices load
    for f in ["ibmq_manila.csv", "ibm_lagos.csv"] {
        assert!(!load_calibration(data_dir().join(f))
            .unwrap()
            .qubits
            .is_empty());
    }
}

#[test]
fn zero_noise_matches_ideal() {
    for xz in Xz::ALL {
        let cfg = MeasurementConfig::for_xz(xz);
        let n = simulate_noisy(&build_experiment(cfg), &NoiseModel::ideal()).unwrap();
        for (a, b) in n.values().iter().zip(ideal_distribution(cfg).values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn frozen_lima_scores() {
    // values from an independent Kronecker-product density-matrix oracle
    let ro = lima_noise(false);
    assert!((gamma(&exact_data(&ro)).unwrap().gamma - 7.346728016490893).abs() < 1e-9);
    assert!((mitigated_exact(&ro) - GAMMA_COMPLEX).abs() < 1e-9);
    let full = lima_noise(true);
    assert!((gamma(&exact_data(&full)).unwrap().gamma - 7.004526156238452).abs() < 1e-9);
    let m = mitigated_exact(&full);
    assert!((m - 8.090047051624191).abs() < 1e-9);
    // CNOT depolarizing only rescales the correlators: 6√2·Π(1 − 16p/15)
    let shrink: f64 = full.depol2q.iter().map(|p| 1.0 - 16.0 * p / 15.0).product();
    assert!((m - GAMMA_COMPLEX * shrink).abs() < 1e-9);
}

#[test]
fn readout_noise_degrades_monotonically() {
    let mut last = f64::INFINITY;
    let want = [8.485281374, 5.980, 4.055, 1.588];
    for (p, w) in [0.0, 0.05, 0.1, 0.2].into_iter().zip(want) {
        let m = NoiseModel::readout_only([ReadoutConfusion::symmetric(p).unwrap(); 4], "grid");
        let g = gamma(&exact_data(&m)).unwrap().gamma;
        assert!(g < last, "p={p}: {g} !< {last}");
        assert!((g - w).abs() < 1e-3, "p={p}: {g}");
        last = g;
    }
}

#[test]
fn sampling_is_deterministic_and_exact_on_deltas() {
    let d = OutcomeDistribution::delta(16, 0);
    assert_eq!(sample_counts(&d, 100, 1).unwrap().counts()[0], 100);
    let p = ideal_distribution(MeasurementConfig::for_xz(Xz::X11));
    assert_eq!(
        sample_counts(&p, 5000, 9).unwrap(),
        sample_counts(&p, 5000, 9).unwrap()
    );
    assert_ne!(
        sample_counts(&p, 5000, 9).unwrap(),
        sample_counts(&p, 5000, 10).unwrap()
    );
}

#[test]
fn sampling_passes_chi_square() {
    let p = ideal_distribution(MeasurementConfig::for_xz(Xz::X11));
    let shots = 32_000u64;
    let trials = 1000u64;
    let mut below = 0;
    for seed in 0..trials {
        let k = sample_counts(&p, shots, seed).unwrap();
        let chi2: f64 = k
            .counts()
            .iter()
            .zip(p.values())
            .map(|(&o, &q)| {
                let e = q * shots as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        if chi2 < CHI2_15_999 {
            below += 1;
        }
    }
    assert!(below >= 990, "{below}/1000 below the 99.9th percentile");
}

#[test]
fn measured_calibration_matrix_tracks_exact() {
    let noise = lima_noise(false);
    let exact = exact_calibration_matrix(&noise.readout).unwrap();
    let mut ok = 0;
    for seed in 0..100 {
        let m = measure_calibration_matrix(&noise, 20_000, seed).unwrap();
        assert_eq!(
            m.provenance(),
            Provenance::Measured {
                shots_per_state: 20_000
            }
        );
        let dev = (0..16)
            .flat_map(|r| (0..16).map(move |c| (r, c)))
            .map(|(r, c)| (m.matrix()[(r, c)] - exact.matrix()[(r, c)]).abs())
            .fold(0.0, f64::max);
        if dev < 0.01 {
            ok += 1;
        }
    }
    assert!(ok >= 99, "{ok}/100");
    let ideal = measure_calibration_matrix(&NoiseModel::ideal(), 77, 3).unwrap();
    assert_eq!(ideal.matrix(), &Matrix::identity(16));
}

#[test]
fn two_qubit_calibration_illustration() {
    // confusion on A and B₁ chosen so that |00⟩ reads (900, 61, 54, 9) of 1024
    let (q0, q1) = (0.0566, 0.0635);
    let mut ro = [ReadoutConfusion::PERFECT; 4];
    ro[0] = ReadoutConfusion::symmetric(q0).unwrap();
    ro[1] = ReadoutConfusion::symmetric(q1).unwrap();
    let noise = NoiseModel::readout_only(ro, "two-qubit");
    let c = measure_calibration_matrix(&noise, 1024, 2022).unwrap();
    let mut col = [0.0; 4];
    for r in 0..16 {
        col[r >> 2] += c.matrix()[(r, 0)];
    }
    let want = [900.0 / 1024.0, 61.0 / 1024.0, 54.0 / 1024.0, 9.0 / 1024.0];
    for (g, w) in col.iter().zip(want) {
        assert!((g - w).abs() < 0.03, "{col:?}");
    }
    let exact = exact_calibration_matrix(&ro).unwrap();
    let mut ecol = [0.0; 4];
    for r in 0..16 {
        ecol[r >> 2] += exact.matrix()[(r, 0)];
    }
    // the quoted counts are not exactly of product form (9/1024 vs q0·q1)
    for (g, w) in ecol.iter().zip(want) {
        assert!((g - w).abs() < 0.01, "{ecol:?}");
    }
}

#[test]
fn heavy_corruption_produces_quasiprobabilities() {
    let ro = [ReadoutConfusion::symmetric(0.15).unwrap(); 4];
    let c = exact_calibration_matrix(&ro).unwrap();
    let mut raw = vec![0u64; 16];
    raw[0] = 60;
    raw[15] = 40;
    let x = correct_by_inversion(&c, &Counts::new(raw).unwrap()).unwrap();
    assert_eq!(x.kind(), DistributionKind::Quasiprobability);
    assert!(x.values().iter().any(|&v| v < 0.0));
    assert!((x.total() - 1.0).abs() < 1e-9);
}

#[test]
fn published_session_aggregates() {
    let lima = aggregate(&[
        vec![7.631, 7.636, 7.651],
        vec![7.743, 7.703, 7.731],
        vec![7.651, 7.680, 7.697],
    ])
    .unwrap();
    assert!((lima.mean - 7.680).abs() <= 0.001);
    assert!((lima.sigma - 0.041).abs() <= 0.002);
    let lagos = aggregate(&[
        vec![8.158, 8.142, 8.124, 8.179],
        vec![8.040, 8.046, 8.081, 8.117, 8.101, 8.057, 8.074, 8.080],
        vec![
            8.132, 8.110, 8.096, 8.087, 8.127, 8.145, 8.092, 8.105, 8.124, 8.136,
        ],
    ])
    .unwrap();
    assert!((lagos.mean - 8.115).abs() <= 0.005, "{}", lagos.mean);
    assert!((lagos.sigma - 0.042).abs() <= 0.005, "{}", lagos.sigma);
}

fn arb_quasi() -> impl Strategy<Value = ExperimentData> {
    prop::collection::vec(prop::collection::vec(-0.2f64..1.0, 16), 12).prop_map(|cols| {
        let mut data = ExperimentData::new(Method::Inversion, None);
        for (xz, col) in Xz::ALL.into_iter().zip(cols) {
            let s: f64 = col.iter().sum();
            let v = col.iter().map(|x| x / s).collect();
            data.insert(xz, OutcomeDistribution::classify(v).unwrap())
                .unwrap();
        }
        data
    })
}

fn arb_prob() -> impl Strategy<Value = ExperimentData> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, 16), 12).prop_filter_map(
        "mass",
        |cols| {
            let mut data = ExperimentData::new(Method::Uncorrected, None);
            for (xz, col) in Xz::ALL.into_iter().zip(cols) {
                let s: f64 = col.iter().sum();
                if s < 1e-6 {
                    return None;
                }
                let v = col.iter().map(|x| x / s).collect();
                data.insert(xz, OutcomeDistribution::probability(v).unwrap())
                    .unwrap();
            }
            Some(data)
        },
    )
}

fn flip_alice(data: &ExperimentData) -> ExperimentData {
    ExperimentData::from_fn(data.method, None, |xz| {
        let v = data.get(xz)?.values();
        let mut w = vec![0.0; 16];
        for (i, &p) in v.iter().enumerate() {
            let mut o = Outcome::from_index(i);
            o.a = -o.a;
            w[o.to_index()] = p;
        }
        OutcomeDistribution::classify(w)
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_identity(data in arb_quasi()) {
        let t: f64 = (0..4).map(|b| t_score(&data, b).unwrap()).sum();
        prop_assert!((t - gamma_from_weights(&data).unwrap()).abs() < 1e-10);
        prop_assert!(gamma(&data).is_ok());
    }

    #[test]
    fn score_is_bounded_by_twelve(data in arb_prob()) {
        prop_assert!(gamma(&data).unwrap().gamma.abs() <= 12.0 + 1e-12);
    }

    #[test]
    fn flipping_alice_negates_everything(data in arb_prob()) {
        let r = gamma(&data).unwrap();
        let f = gamma(&flip_alice(&data)).unwrap();
        prop_assert!((r.gamma + f.gamma).abs() < 1e-12);
        for xz in Xz::ALL {
            for b in 0..4 {
                prop_assert!((r.s[&xz][b] + f.s[&xz][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aggregate_ignores_order_within_sessions(
        sessions in prop::collection::vec(prop::collection::vec(5.0f64..9.0, 3..8), 1..5),
        rot in 0usize..8,
    ) {
        let a = aggregate(&sessions).unwrap();
        let shuffled: Vec<Vec<f64>> = sessions.iter().map(|s| {
            let mut s = s.clone();
            let k = rot % s.len();
            s.rotate_left(k);
            s.reverse();
            s
        }).collect();
        let b = aggregate(&shuffled).unwrap();
        prop_assert_eq!(a.selected, b.selected);
    }

    #[test]
    fn inversion_round_trip(
        raw in prop::collection::vec(0.0f64..1.0, 16),
        ps in prop::collection::vec((0.0f64..0.3, 0.0f64..0.3), 4),
    ) {
        let s: f64 = raw.iter().sum();
        prop_assume!(s > 1e-6);
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let ro: Vec<ReadoutConfusion> = ps.iter().map(|&(a, b)| ReadoutConfusion::new(a, b).unwrap()).collect();
        let c = exact_calibration_matrix(&ro).unwrap();
        let y = c.matrix().mul_vec(&p);
        let x = invert_frequencies(&c, &y).unwrap();
        for (a, b) in x.values().iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!((x.total() - 1.0).abs() < 1e-9);
        // a nonnegative inversion is also the NNLS optimum
        let n = nnls_frequencies(&c, &y).unwrap();
        for (a, b) in n.values().iter().zip(&p) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn calibration_matrix_rejects_bad_input() {
    let mut m = Matrix::identity(16);
    m[(0, 0)] = 0.5;
    assert!(CalibrationMatrix::new(m, Provenance::ExactFromModel).is_err());
    assert!(CalibrationMatrix::new(Matrix::identity(3), Provenance::ExactFromModel).is_err());
}

#[test]
fn counts_map_scores_like_frequencies() {
    // sampled scores use frequencies, so identical counts give identical Γ
    let noise = lima_noise(false);
    let d = noisy_distributions(&noise).unwrap();
    let mut counts = BTreeMap::new();
    for xz in Xz::ALL {
        counts.insert(
            xz,
            sample_counts(&d[xz.index()], 4000, xz.index() as u64).unwrap(),
        );
    }
    let data = ExperimentData::from_fn(Method::Uncorrected, Some(4000), |xz| {
        Ok(counts[&xz].to_distribution())
    })
    .unwrap();
    let g = gamma(&data).unwrap().gamma;
    assert!(g > 6.5 && g < 8.2, "{g}");
}
