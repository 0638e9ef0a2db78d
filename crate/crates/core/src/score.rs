//! The score Γ = Σ_{abc,xz} w_{abc,xz} P(abc|xz) and its decomposition
//! Γ = Σ_b T_b, plus the min/median/max session aggregation.
//!
//! S_xz^b = Σ_{a,c=±1} a·c·P(a b c | xz) is left unconditioned on b, so the
//! ideal distributions give T_b = 6√2/4 for each of Bob's four results.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::circuit::{Outcome, Xz};
use crate::dist::{Counts, OutcomeDistribution, SUM_TOL};
use crate::mitigate::CalibrationMatrix;
use crate::{Error, Result, N_OUTCOMES};

/// Number of Bob outcomes b = b₁b₂.
pub const N_BOB: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Uncorrected,
    Inversion,
    Nnls,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Uncorrected, Method::Inversion, Method::Nnls];

    pub fn label(self) -> &'static str {
        match self {
            Method::Uncorrected => "uncorrected",
            Method::Inversion => "inversion",
            Method::Nnls => "nnls",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

/// Two-bit label "00".."11" for Bob's result `b` = 2·b₁ + b₂.
pub fn bob_label(b: usize) -> &'static str {
    ["00", "01", "10", "11"][b]
}

fn check_dist(dist: &OutcomeDistribution) -> Result<()> {
    if dist.len() != N_OUTCOMES {
        return Err(Error::invalid(format!(
            "expected {N_OUTCOMES} outcomes, found {}",
            dist.len()
        )));
    }
    Ok(())
}

/// S^b = Σ_{a,c} a·c·P(a b c).
pub fn conditional_correlator(dist: &OutcomeDistribution, b: usize) -> Result<f64> {
    check_dist(dist)?;
    if b >= N_BOB {
        return Err(Error::invalid(format!("Bob outcome {b} out of range")));
    }
    let (b1, b2) = ((b >> 1) as u8, (b & 1) as u8);
    let mut s = 0.0;
    for a in [1i8, -1] {
        for c in [1i8, -1] {
            let idx = Outcome { a, b1, b2, c }.to_index();
            s += f64::from(a * c) * dist.values()[idx];
        }
    }
    Ok(s)
}

/// Corrected (or raw) distributions for all twelve settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub method: Method,
    pub shots: Option<u64>,
    dists: BTreeMap<Xz, OutcomeDistribution>,
}

impl ExperimentData {
    pub fn new(method: Method, shots: Option<u64>) -> Self {
        ExperimentData {
            method,
            shots,
            dists: BTreeMap::new(),
        }
    }

    /// Builds a complete dataset by evaluating `f` for each setting.
    pub fn from_fn(
        method: Method,
        shots: Option<u64>,
        mut f: impl FnMut(Xz) -> Result<OutcomeDistribution>,
    ) -> Result<Self> {
        let mut data = Self::new(method, shots);
        for xz in Xz::ALL {
            data.insert(xz, f(xz)?)?;
        }
        Ok(data)
    }

    pub fn insert(&mut self, xz: Xz, dist: OutcomeDistribution) -> Result<()> {
        check_dist(&dist)?;
        if (dist.total() - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(format!(
                "distribution for {xz} is not normalized"
            )));
        }
        self.dists.insert(xz, dist);
        Ok(())
    }

    pub fn get(&self, xz: Xz) -> Result<&OutcomeDistribution> {
        self.dists
            .get(&xz)
            .ok_or_else(|| Error::invalid(format!("missing configuration {xz}")))
    }

    pub fn is_complete(&self) -> bool {
        Xz::ALL.iter().all(|x| self.dists.contains_key(x))
    }

    fn s(&self, xz: Xz, b: usize) -> Result<f64> {
        conditional_correlator(self.get(xz)?, b)
    }
}

/// T_b as the signed six-pair combination of correlators.
pub fn t_score(data: &ExperimentData, b: usize) -> Result<f64> {
    if b >= N_BOB {
        return Err(Error::invalid(format!("Bob outcome {b} out of range")));
    }
    let s1 = if b & 0b10 == 0 { 1.0 } else { -1.0 }; // (−1)^{b₁}
    let s2 = if b & 0b01 == 0 { 1.0 } else { -1.0 }; // (−1)^{b₂}
    let s = |xz| data.s(xz, b);
    Ok(s2 * (s(Xz::X11)? + s(Xz::X12)?)
        + s1 * (s(Xz::X21)? - s(Xz::X22)?)
        + s2 * (s(Xz::X13)? + s(Xz::X14)?)
        - s1 * s2 * (s(Xz::X33)? - s(Xz::X34)?)
        + s1 * (s(Xz::X25)? + s(Xz::X26)?)
        - s1 * s2 * (s(Xz::X35)? - s(Xz::X36)?))
}

/// Coefficient of S_xz^b inside T_b.
fn term_sign(xz: Xz, b: usize) -> f64 {
    let s1 = if b & 0b10 == 0 { 1.0 } else { -1.0 };
    let s2 = if b & 0b01 == 0 { 1.0 } else { -1.0 };
    match xz {
        Xz::X11 | Xz::X12 | Xz::X13 | Xz::X14 => s2,
        Xz::X21 | Xz::X25 | Xz::X26 => s1,
        Xz::X22 => -s1,
        Xz::X33 | Xz::X35 => -s1 * s2,
        Xz::X34 | Xz::X36 => s1 * s2,
    }
}

/// w[abc][xz] ∈ {±1}; columns follow [`Xz::ALL`].
pub fn weight_tensor() -> [[f64; 12]; N_OUTCOMES] {
    let mut w = [[0.0; 12]; N_OUTCOMES];
    for (idx, row) in w.iter_mut().enumerate() {
        let o = Outcome::from_index(idx);
        for (col, xz) in Xz::ALL.into_iter().enumerate() {
            row[col] = term_sign(xz, o.bob()) * f64::from(o.a * o.c);
        }
    }
    w
}

/// Γ by direct contraction with the weight tensor.
pub fn gamma_from_weights(data: &ExperimentData) -> Result<f64> {
    let w = weight_tensor();
    let mut g = 0.0;
    for (col, xz) in Xz::ALL.into_iter().enumerate() {
        let p = data.get(xz)?.values();
        for (idx, row) in w.iter().enumerate() {
            g += row[col] * p[idx];
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMeta {
    pub seed: Option<u64>,
    pub noise_label: String,
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub gamma: f64,
    /// Indexed by b = 2·b₁ + b₂.
    pub t: [f64; N_BOB],
    pub s: BTreeMap<Xz, [f64; N_BOB]>,
    pub method: Method,
    pub meta: RunMeta,
}

/// Tolerance for agreement between the weight and T_b routes.
pub const ROUTE_TOL: f64 = 1e-10;

pub fn gamma(data: &ExperimentData) -> Result<ScoreReport> {
    let mut s = BTreeMap::new();
    for xz in Xz::ALL {
        let mut row = [0.0; N_BOB];
        for (b, v) in row.iter_mut().enumerate() {
            *v = data.s(xz, b)?;
        }
        s.insert(xz, row);
    }
    let mut t = [0.0; N_BOB];
    for (b, v) in t.iter_mut().enumerate() {
        *v = t_score(data, b)?;
    }
    let g: f64 = t.iter().sum();
    let gw = gamma_from_weights(data)?;
    if (g - gw).abs() > ROUTE_TOL {
        return Err(Error::Internal(format!(
            "Γ routes disagree: T-decomposition {g}, weights {gw}"
        )));
    }
    Ok(ScoreReport {
        gamma: g,
        t,
        s,
        method: data.method,
        meta: RunMeta {
            shots: data.shots,
            ..RunMeta::default()
        },
    })
}

/// Multinomial standard error of the linearly corrected Γ (delta method,
/// plug-in frequencies). With `c = None` the raw score's error is returned.
pub fn gamma_standard_error(
    counts: &BTreeMap<Xz, Counts>,
    c: Option<&CalibrationMatrix>,
) -> Result<f64> {
    let w = weight_tensor();
    let inv = c.map(|c| c.matrix().inverse()).transpose()?;
    let mut var = 0.0;
    for (col, xz) in Xz::ALL.into_iter().enumerate() {
        let k = counts
            .get(&xz)
            .ok_or_else(|| Error::invalid(format!("missing configuration {xz}")))?;
        let wx: Vec<f64> = w.iter().map(|row| row[col]).collect();
        // Γ_xz = vᵀf with v = C⁻ᵀw
        let v = match &inv {
            Some(m) => m.t_mul_vec(&wx),
            None => wx,
        };
        let q = k.frequencies();
        let m1: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
        let m2: f64 = v.iter().zip(&q).map(|(a, b)| a * a * b).sum();
        var += (m2 - m1 * m1) / k.shots() as f64;
    }
    Ok(var.max(0.0).sqrt())
}

/// Min/median/max selection over repeated sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionAggregate {
    pub sessions: Vec<Vec<f64>>,
    /// (min, median, max) of each session, in session order.
    pub selected: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n − 1) of `selected`.
    pub sigma: f64,
}

/// Lowest, median (lower-middle for even counts) and highest score of one session.
pub fn select_extremes(session: &[f64]) -> Result<[f64; 3]> {
    if session.len() < 3 {
        return Err(Error::invalid(format!(
            "a session needs at least 3 scores, found {}",
            session.len()
        )));
    }
    if session.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite score"));
    }
    let mut sorted = session.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok([sorted[0], sorted[(n - 1) / 2], sorted[n - 1]])
}

pub fn aggregate(sessions: &[Vec<f64>]) -> Result<SessionAggregate> {
    if sessions.is_empty() {
        return Err(Error::invalid("no sessions to aggregate"));
    }
    let mut selected = Vec::with_capacity(3 * sessions.len());
    for s in sessions {
        selected.extend(select_extremes(s)?);
    }
    let n = selected.len() as f64;
    let mean = selected.iter().sum::<f64>() / n;
    let var = selected.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SessionAggregate {
        sessions: sessions.to_vec(),
        selected,
        mean,
        sigma: var.sqrt(),
    })
}
