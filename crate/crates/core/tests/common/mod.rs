#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use complex_chsh::linalg::Matrix;
use complex_chsh::nnls::KKT_RTOL;

pub fn to_na(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_row_major())
}

/// Largest KKT violation of `x` relative to 1e-8·‖Aᵀy‖∞ (≤ 1 means satisfied).
pub fn kkt_violation(a: &Matrix, y: &[f64], x: &[f64]) -> f64 {
    let an = to_na(a);
    let yv = DVector::from_column_slice(y);
    let xv = DVector::from_column_slice(x);
    let scale = KKT_RTOL * (an.transpose() * &yv).amax();
    if scale == 0.0 {
        return if x.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let g = an.transpose() * (&an * &xv - &yv);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        if x[i] < 0.0 {
            return f64::INFINITY;
        }
        let v = if x[i] > 0.0 {
            g[i].abs()
        } else {
            (-g[i]).max(0.0)
        };
        worst = worst.max(v / scale);
    }
    worst
}

/// Unconstrained least squares via SVD.
pub fn unconstrained(a: &Matrix, y: &[f64]) -> Vec<f64> {
    let an = to_na(a);
    let svd = an.svd(true, true);
    svd.solve(&DVector::from_column_slice(y), 1e-13)
        .expect("svd solve")
        .iter()
        .copied()
        .collect()
}

/// Minimum over all active sets of the feasible least-squares solutions.
pub fn brute_force_nnls(a: &Matrix, y: &[f64]) -> (Vec<f64>, f64) {
    let n = a.cols();
    let an = to_na(a);
    let yv = DVector::from_column_slice(y);
    let mut best = (vec![0.0; n], yv.norm());
    for mask in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let sub = DMatrix::from_fn(a.rows(), cols.len(), |r, c| an[(r, cols[c])]);
        let Ok(z) = sub.clone().svd(true, true).solve(&yv, 1e-13) else {
            continue;
        };
        if z.iter().any(|&v| v < 0.0) {
            continue;
        }
        let res = (&sub * &z - &yv).norm();
        if res < best.1 - 1e-14 {
            let mut x = vec![0.0; n];
            for (k, &j) in cols.iter().enumerate() {
                x[j] = z[k];
            }
            best = (x, res);
        }
    }
    best
}
