//! Non-negative least squares by the Lawson–Hanson active-set method.
//!
//! Minimizes ‖A·x − y‖₂ subject to x ≥ 0. The passive set P holds the
//! coordinates allowed to be positive; each outer iteration moves the
//! coordinate with the largest dual value w = Aᵀ(y − A·x) into P (lowest
//! index on ties), and the inner loop steps back toward feasibility whenever
//! the unconstrained solution on P has non-positive entries.

use crate::linalg::{least_squares_on, norm2, norm_inf, Matrix};
use crate::{Error, Result};

/// Relative tolerance on the dual vector, scaled by ‖Aᵀy‖∞.
pub const KKT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    /// Outer (passive-set growth) iterations.
    pub iterations: usize,
}

pub fn nnls(a: &Matrix, y: &[f64]) -> Result<NnlsSolution> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::invalid("nnls needs a nonempty matrix"));
    }
    if y.len() != m {
        return Err(Error::invalid(format!(
            "y has {} entries, A has {m} rows",
            y.len()
        )));
    }
    if a.as_row_major().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("nnls inputs must be finite"));
    }

    let tol = KKT_RTOL * norm_inf(&a.t_mul_vec(y));
    let max_outer = 3 * n;
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    // coordinates whose entry was undone by roundoff in this outer step
    let mut rejected = vec![false; n];
    let mut outer = 0;

    loop {
        let w = dual(a, y, &x);
        let mut pick: Option<usize> = None;
        for j in 0..n {
            if passive[j] || rejected[j] || w[j] <= tol {
                continue;
            }
            if pick.is_none_or(|p| w[j] > w[p]) {
                pick = Some(j);
            }
        }
        let Some(t) = pick else { break };
        outer += 1;
        if outer > max_outer {
            return Err(Error::ConvergenceFailure(max_outer));
        }
        passive[t] = true;

        let mut first_pass = true;
        for _ in 0..=n {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = least_squares_on(a, &cols, y);
            let z = match z {
                Some(z) => z,
                None if first_pass => {
                    passive[t] = false;
                    rejected[t] = true;
                    break;
                }
                None => return Err(Error::Internal("passive set became rank deficient".into())),
            };
            if first_pass {
                let zt = cols
                    .iter()
                    .position(|&j| j == t)
                    .map(|k| z[k])
                    .unwrap_or(0.0);
                if zt <= 0.0 {
                    // w_t > 0 guarantees z_t > 0 in exact arithmetic
                    passive[t] = false;
                    rejected[t] = true;
                    break;
                }
                rejected.iter_mut().for_each(|r| *r = false);
                first_pass = false;
            }

            if z.iter().all(|&v| v > 0.0) {
                for (&j, &v) in cols.iter().zip(&z) {
                    x[j] = v;
                }
                break;
            }

            // step from x toward z until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            let mut blocking = cols[0];
            for (&j, &zj) in cols.iter().zip(&z) {
                if zj <= 0.0 {
                    let ratio = x[j] / (x[j] - zj);
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = j;
                    }
                }
            }
            for (&j, &zj) in cols.iter().zip(&z) {
                x[j] += alpha * (zj - x[j]);
            }
            x[blocking] = 0.0;
            for &j in &cols {
                if x[j] <= 0.0 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }

    let ax = a.mul_vec(&x);
    let resid: Vec<f64> = ax.iter().zip(y).map(|(p, q)| p - q).collect();
    Ok(NnlsSolution {
        x,
        residual_norm: norm2(&resid),
        iterations: outer,
    })
}

/// w = Aᵀ(y − A·x), the negative gradient of ½‖Ax − y‖².
fn dual(a: &Matrix, y: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = y.iter().zip(&ax).map(|(p, q)| p - q).collect();
    a.t_mul_vec(&r)
}
