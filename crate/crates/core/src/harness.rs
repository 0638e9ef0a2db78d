//! Config-driven experiment runs and their output files.
//!
//! A run samples `shots` counts for each of the twelve settings, for every
//! (session, repeat) pair, corrects them with the requested mitigation
//! methods and scores each run. Sessions with at least three repeats are
//! aggregated per method.
//!
//! Run config (`key=value`, `#` comments):
//!
//! ```text
//! shots=32000
//! repeats=3
//! sessions=3
//! seed=7
//! noise=lima.noise            # path relative to this file, or none
//! mitigation=all              # none | inversion | nnls | all
//! calibration_matrix=exact    # exact | measured:<shots>
//! out=results
//! ```
//!
//! Noise file, either explicit:
//!
//! ```text
//! label=readout-only
//! readout=0.0178,0.0167,0.0222,0.0268     # symmetric, or readout_p01= / readout_p10=
//! depol1q=0
//! depol2q=0.005,0.012,0.026               # one value or one per CNOT slot
//! ```
//!
//! or derived from a calibration table:
//!
//! ```text
//! calibration=../ibmq_lima.csv
//! date=2022-04-14
//! qubits=0,1,2,3
//! pairs=0-1,1-3,1-2
//! gate_noise=true
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::calibration::{load_calibration, noise_from_calibration, parse_pair};
use crate::circuit::{build_experiment, ideal_distribution, MeasurementConfig, Xz};
use crate::dist::{bitstring, parse_bitstring, Counts, OutcomeDistribution};
use crate::mitigate::{
    correct_by_inversion, correct_by_nnls, exact_calibration_matrix,
    measure_calibration_matrix_in_session, CalibrationMatrix,
};
use crate::noise::{
    sample_counts_with, simulate_noisy, stream_rng, NoiseModel, ReadoutConfusion, StreamId,
};
use crate::score::{aggregate, gamma, ExperimentData, Method, ScoreReport, SessionAggregate};
use crate::{Error, Result, N_OUTCOMES, N_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mitigation {
    None,
    Inversion,
    Nnls,
    All,
}

impl Mitigation {
    /// Methods scored for this choice; the raw score is always included.
    pub fn methods(self) -> Vec<Method> {
        match self {
            Mitigation::None => vec![Method::Uncorrected],
            Mitigation::Inversion => vec![Method::Uncorrected, Method::Inversion],
            Mitigation::Nnls => vec![Method::Uncorrected, Method::Nnls],
            Mitigation::All => Method::ALL.to_vec(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mitigation::None => "none",
            Mitigation::Inversion => "inversion",
            Mitigation::Nnls => "nnls",
            Mitigation::All => "all",
        }
    }
}

impl FromStr for Mitigation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Mitigation::None),
            "inversion" => Ok(Mitigation::Inversion),
            "nnls" => Ok(Mitigation::Nnls),
            "all" => Ok(Mitigation::All),
            _ => Err(Error::invalid(format!(
                "unknown mitigation '{s}' (expected none, inversion, nnls or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationSource {
    Exact,
    Measured(u64),
}

impl CalibrationSource {
    pub fn label(self) -> String {
        match self {
            CalibrationSource::Exact => "exact".into(),
            CalibrationSource::Measured(n) => format!("measured:{n}"),
        }
    }
}

impl FromStr for CalibrationSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(CalibrationSource::Exact);
        }
        let shots = s
            .strip_prefix("measured:")
            .and_then(|n| n.parse::<u64>().ok())
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "calibration matrix '{s}' is not 'exact' or 'measured:<shots>'"
                ))
            })?;
        Ok(CalibrationSource::Measured(shots))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    None,
    File(PathBuf),
    Model(NoiseModel),
}

impl NoiseSource {
    pub fn parse_arg(s: &str) -> Self {
        if s == "none" {
            NoiseSource::None
        } else {
            NoiseSource::File(PathBuf::from(s))
        }
    }

    pub fn resolve(&self) -> Result<NoiseModel> {
        match self {
            NoiseSource::None => Ok(NoiseModel::ideal()),
            NoiseSource::File(p) => load_noise(p),
            NoiseSource::Model(m) => {
                m.validate()?;
                Ok(m.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub shots: u64,
    pub repeats: u32,
    pub sessions: u32,
    pub seed: u64,
    pub noise: NoiseSource,
    pub mitigation: Mitigation,
    pub calibration: CalibrationSource,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            shots: 32_000,
            repeats: 3,
            sessions: 3,
            seed: 0,
            noise: NoiseSource::None,
            mitigation: Mitigation::All,
            calibration: CalibrationSource::Exact,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::invalid("shots must be at least 1"));
        }
        if self.repeats == 0 || self.sessions == 0 {
            return Err(Error::invalid("repeats and sessions must be at least 1"));
        }
        Ok(())
    }

    /// Sessions are aggregated only when each holds at least three runs.
    pub fn aggregates(&self) -> bool {
        self.repeats >= 3
    }
}

struct KeyValue {
    line: usize,
    key: String,
    value: String,
}

fn parse_key_values(text: &str, source: &str) -> Result<Vec<KeyValue>> {
    let mut out: Vec<KeyValue> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, found '{line}'")))?;
        let key = k.trim().to_string();
        if out.iter().any(|kv| kv.key == key) {
            return Err(parse_err(format!("duplicate key '{key}'")));
        }
        out.push(KeyValue {
            line: i + 1,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

fn field<T: FromStr>(kv: &KeyValue, source: &str) -> Result<T> {
    kv.value.parse().map_err(|_| Error::Parse {
        path: source.to_string(),
        line: kv.line,
        message: format!("invalid value '{}' for '{}'", kv.value, kv.key),
    })
}

fn relative_to(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.parent().unwrap_or(Path::new("")).join(p)
    }
}

pub fn load_run_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_config(&text, path)
}

/// Parses a run config; relative noise paths resolve against `path`'s directory.
pub fn parse_run_config(text: &str, path: &Path) -> Result<RunConfig> {
    let source = path.display().to_string();
    let mut cfg = RunConfig::default();
    for kv in parse_key_values(text, &source)? {
        match kv.key.as_str() {
            "shots" => cfg.shots = field(&kv, &source)?,
            "repeats" => cfg.repeats = field(&kv, &source)?,
            "sessions" => cfg.sessions = field(&kv, &source)?,
            "seed" => cfg.seed = field(&kv, &source)?,
            "mitigation" => cfg.mitigation = field(&kv, &source)?,
            "calibration_matrix" => cfg.calibration = field(&kv, &source)?,
            "noise" => {
                cfg.noise = match kv.value.as_str() {
                    "none" => NoiseSource::None,
                    v => NoiseSource::File(relative_to(path, v)),
                }
            }
            "out" => cfg.out = Some(PathBuf::from(&kv.value)),
            other => {
                return Err(Error::Parse {
                    path: source,
                    line: kv.line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list<T: FromStr>(kv: &KeyValue, source: &str) -> Result<Vec<T>> {
    kv.value
        .split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| Error::Parse {
                path: source.to_string(),
                line: kv.line,
                message: format!("invalid entry '{}' in '{}'", s.trim(), kv.key),
            })
        })
        .collect()
}

fn fixed_len<T: Copy, const N: usize>(v: Vec<T>, kv: &KeyValue, source: &str) -> Result<[T; N]> {
    v.try_into().map_err(|v: Vec<T>| Error::Parse {
        path: source.to_string(),
        line: kv.line,
        message: format!("'{}' needs {N} entries, found {}", kv.key, v.len()),
    })
}

pub fn load_noise(path: impl AsRef<Path>) -> Result<NoiseModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_noise(&text, path)
}

/// Parses a noise file; a `calibration` path resolves against `path`'s directory.
pub fn parse_noise(text: &str, path: &Path) -> Result<NoiseModel> {
    let source = path.display().to_string();
    let kvs = parse_key_values(text, &source)?;
    let get = |k: &str| kvs.iter().find(|kv| kv.key == k);
    let explicit = ["readout", "readout_p01", "readout_p10", "depol2q"];
    let derived = ["calibration", "date", "qubits", "pairs", "gate_noise"];
    for kv in &kvs {
        if !explicit.contains(&kv.key.as_str())
            && !derived.contains(&kv.key.as_str())
            && kv.key != "label"
            && kv.key != "depol1q"
        {
            return Err(Error::Parse {
                path: source,
                line: kv.line,
                message: format!("unknown key '{}'", kv.key),
            });
        }
    }

    let mut model = if let Some(cal) = get("calibration") {
        if let Some(kv) = kvs.iter().find(|kv| explicit.contains(&kv.key.as_str())) {
            return Err(Error::Parse {
                path: source,
                line: kv.line,
                message: format!("'{}' cannot be combined with 'calibration'", kv.key),
            });
        }
        let missing = |k: &str| Error::Parse {
            path: source.clone(),
            line: cal.line,
            message: format!("calibration noise needs '{k}'"),
        };
        let mut record = load_calibration(relative_to(path, &cal.value))?;
        if let Some(date) = get("date") {
            record = record.for_date(&date.value)?;
        }
        let qkv = get("qubits").ok_or_else(|| missing("qubits"))?;
        let qubits: [usize; N_QUBITS] = fixed_len(parse_list(qkv, &source)?, qkv, &source)?;
        let pkv = get("pairs").ok_or_else(|| missing("pairs"))?;
        let pairs: Vec<(usize, usize)> = pkv
            .value
            .split(',')
            .map(|s| {
                parse_pair(s.trim()).ok_or_else(|| Error::Parse {
                    path: source.clone(),
                    line: pkv.line,
                    message: format!("invalid pair '{}'", s.trim()),
                })
            })
            .collect::<Result<_>>()?;
        let pairs: [(usize, usize); 3] = fixed_len(pairs, pkv, &source)?;
        let mut m = noise_from_calibration(&record, qubits, pairs)?;
        if let Some(g) = get("gate_noise") {
            if !field::<bool>(g, &source)? {
                m.depol2q = [0.0; 3];
            }
        }
        m
    } else {
        if let Some(kv) = kvs.iter().find(|kv| derived.contains(&kv.key.as_str())) {
            return Err(Error::Parse {
                path: source,
                line: kv.line,
                message: format!("'{}' is only valid with 'calibration'", kv.key),
            });
        }
        let mut m = NoiseModel::ideal();
        m.label = "custom".into();
        let p01 = get("readout_p01").or(get("readout"));
        let p10 = get("readout_p10").or(get("readout"));
        if get("readout").is_some()
            && (get("readout_p01").is_some() || get("readout_p10").is_some())
        {
            return Err(Error::invalid(format!(
                "{source}: use either 'readout' or 'readout_p01'/'readout_p10'"
            )));
        }
        for (kv, is_p01) in [(p01, true), (p10, false)] {
            if let Some(kv) = kv {
                let v: [f64; N_QUBITS] = fixed_len(parse_list(kv, &source)?, kv, &source)?;
                for (r, p) in m.readout.iter_mut().zip(v) {
                    *r = if is_p01 {
                        ReadoutConfusion::new(p, r.p10)?
                    } else {
                        ReadoutConfusion::new(r.p01, p)?
                    };
                }
            }
        }
        if let Some(kv) = get("depol2q") {
            let v: Vec<f64> = parse_list(kv, &source)?;
            m.depol2q = match v.len() {
                1 => [v[0]; 3],
                _ => fixed_len(v, kv, &source)?,
            };
        }
        m
    };
    if let Some(kv) = get("depol1q") {
        model.depol1q = field(kv, &source)?;
    }
    if let Some(kv) = get("label") {
        model.label = kv.value.clone();
    }
    model.validate()?;
    Ok(model)
}

/// One (session, repeat) execution of all twelve settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub session: u32,
    pub repeat: u32,
    pub counts: BTreeMap<Xz, Counts>,
    /// One entry per requested method, in [`Mitigation::methods`] order.
    pub reports: Vec<ScoreReport>,
    pub corrected: Vec<ExperimentData>,
}

impl RunRecord {
    pub fn id(&self) -> String {
        format!("s{}-r{}", self.session, self.repeat)
    }

    pub fn report(&self, method: Method) -> Option<&ScoreReport> {
        self.reports.iter().find(|r| r.method == method)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: RunConfig,
    pub noise: NoiseModel,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<(Method, SessionAggregate)>,
    /// Measured calibration matrices, one per session (empty for exact C).
    pub measured_calibration: Vec<CalibrationMatrix>,
}

/// Noisy outcome distributions for all settings, in [`Xz::ALL`] order.
pub fn noisy_distributions(noise: &NoiseModel) -> Result<Vec<OutcomeDistribution>> {
    Xz::ALL
        .par_iter()
        .map(|&xz| simulate_noisy(&build_experiment(MeasurementConfig::for_xz(xz)), noise))
        .collect()
}

/// Scores one set of counts with each method.
pub fn score_counts(
    counts: &BTreeMap<Xz, Counts>,
    methods: &[Method],
    c: Option<&CalibrationMatrix>,
) -> Result<(Vec<ScoreReport>, Vec<ExperimentData>)> {
    let mut reports = Vec::with_capacity(methods.len());
    let mut datas = Vec::with_capacity(methods.len());
    for &method in methods {
        let shots = counts.values().next().map(Counts::shots);
        let data = ExperimentData::from_fn(method, shots, |xz| {
            let k = counts
                .get(&xz)
                .ok_or_else(|| Error::invalid(format!("missing configuration {xz}")))?;
            match (method, c) {
                (Method::Uncorrected, _) => Ok(k.to_distribution()),
                (Method::Inversion, Some(c)) => correct_by_inversion(c, k),
                (Method::Nnls, Some(c)) => correct_by_nnls(c, k),
                (_, None) => Err(Error::invalid(format!(
                    "{method} mitigation needs a calibration matrix"
                ))),
            }
        })?;
        reports.push(gamma(&data)?);
        datas.push(data);
    }
    Ok((reports, datas))
}

pub fn run_experiment(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let noise = config.noise.resolve()?;
    let dists = noisy_distributions(&noise)?;
    let methods = config.mitigation.methods();
    let needs_c = methods.iter().any(|&m| m != Method::Uncorrected);

    let mut session_c = Vec::new();
    let mut measured = Vec::new();
    if needs_c {
        match config.calibration {
            CalibrationSource::Exact => {
                let c = exact_calibration_matrix(&noise.readout)?;
                session_c = vec![c; config.sessions as usize];
            }
            CalibrationSource::Measured(shots) => {
                measured = (0..config.sessions)
                    .into_par_iter()
                    .map(|s| measure_calibration_matrix_in_session(&noise, shots, config.seed, s))
                    .collect::<Result<Vec<_>>>()?;
                session_c = measured.clone();
            }
        }
    }

    let grid: Vec<(u32, u32)> = (0..config.sessions)
        .flat_map(|s| (0..config.repeats).map(move |r| (s, r)))
        .collect();
    let runs = grid
        .par_iter()
        .map(|&(session, repeat)| {
            let mut counts = BTreeMap::new();
            for (xz, dist) in Xz::ALL.into_iter().zip(&dists) {
                let mut rng = stream_rng(
                    config.seed,
                    StreamId::Experiment {
                        session,
                        repeat,
                        xz,
                    },
                );
                counts.insert(xz, sample_counts_with(dist, config.shots, &mut rng)?);
            }
            let c = session_c.get(session as usize);
            let (mut reports, corrected) = score_counts(&counts, &methods, c)?;
            for r in &mut reports {
                r.meta.seed = Some(config.seed);
                r.meta.noise_label = noise.label.clone();
            }
            Ok(RunRecord {
                session,
                repeat,
                counts,
                reports,
                corrected,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut aggregates = Vec::new();
    if config.aggregates() {
        for &m in &methods {
            let sessions: Vec<Vec<f64>> = (0..config.sessions)
                .map(|s| {
                    runs.iter()
                        .filter(|r| r.session == s)
                        .map(|r| r.report(m).expect("method scored").gamma)
                        .collect()
                })
                .collect();
            aggregates.push((m, aggregate(&sessions)?));
        }
    }

    Ok(RunOutput {
        config: config.clone(),
        noise,
        runs,
        aggregates,
        measured_calibration: measured,
    })
}

/// Six-decimal fixed formatting without a negative zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

pub fn render_scores(runs: &[RunRecord], aggregates: &[(Method, SessionAggregate)]) -> String {
    let mut s = String::from("row,id,method,gamma,sigma\n");
    for run in runs {
        for r in &run.reports {
            let _ = writeln!(s, "run,{},{},{},", run.id(), r.method, fmt6(r.gamma));
        }
    }
    for (m, a) in aggregates {
        let _ = writeln!(s, "aggregate,all,{m},{},{}", fmt6(a.mean), fmt6(a.sigma));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub aggregate: bool,
    pub id: String,
    pub method: Method,
    pub gamma: f64,
    pub sigma: Option<f64>,
}

pub fn parse_scores(text: &str) -> Result<Vec<ScoreRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "row,id,method,gamma,sigma")) => {}
        _ => return Err(Error::invalid("scores file is missing its header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| Error::Parse {
            path: "scores".into(),
            line: i + 1,
            message: m.into(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err("expected 5 fields"));
        }
        let aggregate = match f[0] {
            "run" => false,
            "aggregate" => true,
            _ => return Err(err("row kind must be run or aggregate")),
        };
        rows.push(ScoreRow {
            aggregate,
            id: f[1].to_string(),
            method: f[2].parse()?,
            gamma: f[3].parse().map_err(|_| err("invalid gamma"))?,
            sigma: if f[4].is_empty() {
                None
            } else {
                Some(f[4].parse().map_err(|_| err("invalid sigma"))?)
            },
        });
    }
    Ok(rows)
}

/// Re-aggregates parsed run rows of `method`, grouping by the session in `s<k>-r<j>` ids.
pub fn reaggregate(rows: &[ScoreRow], method: Method) -> Result<SessionAggregate> {
    let mut sessions: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.aggregate && r.method == method) {
        let session =
            r.id.strip_prefix('s')
                .and_then(|s| s.split_once('-'))
                .and_then(|(s, _)| s.parse().ok())
                .ok_or_else(|| Error::invalid(format!("run id '{}' has no session", r.id)))?;
        sessions.entry(session).or_default().push(r.gamma);
    }
    aggregate(&sessions.into_values().collect::<Vec<_>>())
}

pub fn render_counts(counts: &BTreeMap<Xz, Counts>) -> String {
    let mut s = String::from("xz,abc,count\n");
    for xz in Xz::ALL {
        if let Some(k) = counts.get(&xz) {
            for (i, n) in k.counts().iter().enumerate() {
                let _ = writeln!(s, "{xz},{},{n}", bitstring(i, N_QUBITS));
            }
        }
    }
    s
}

/// Parses `xz,abc,count` rows; outcomes not listed count as zero.
pub fn parse_counts(text: &str, source: &str) -> Result<BTreeMap<Xz, Counts>> {
    let mut table: BTreeMap<Xz, Vec<Option<u64>>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "xz,abc,count") {
            continue;
        }
        let err = |m: String| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            message: m,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(err("expected xz,abc,count".into()));
        }
        let xz: Xz = f[0].parse().map_err(|e: Error| err(e.to_string()))?;
        let idx = parse_bitstring(f[1], N_QUBITS).map_err(|e| err(e.to_string()))?;
        let n: u64 = f[2]
            .parse()
            .map_err(|_| err(format!("invalid count '{}'", f[2])))?;
        let slot = &mut table.entry(xz).or_insert_with(|| vec![None; N_OUTCOMES])[idx];
        if slot.is_some() {
            return Err(err(format!("duplicate entry {xz},{}", f[1])));
        }
        *slot = Some(n);
    }
    table
        .into_iter()
        .map(|(xz, v)| {
            Ok((
                xz,
                Counts::new(v.into_iter().map(|c| c.unwrap_or(0)).collect())?,
            ))
        })
        .collect()
}

pub fn read_counts_file(path: impl AsRef<Path>) -> Result<BTreeMap<Xz, Counts>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_counts(&text, &path.display().to_string())
}

pub fn render_probability_matrix(data: &ExperimentData) -> Result<String> {
    let mut s = String::from("abc");
    for xz in Xz::ALL {
        let _ = write!(s, ",{xz}");
    }
    s.push('\n');
    let cols: Vec<&OutcomeDistribution> = Xz::ALL
        .iter()
        .map(|&xz| data.get(xz))
        .collect::<Result<_>>()?;
    for idx in 0..N_OUTCOMES {
        s.push_str(&bitstring(idx, N_QUBITS));
        for d in &cols {
            let _ = write!(s, ",{}", fmt6(d.values()[idx]));
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn emit_probability_matrix(data: &ExperimentData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_probability_matrix(data)?).map_err(|e| Error::io(path, e))
}

pub fn emit_scores(
    runs: &[RunRecord],
    aggregates: &[(Method, SessionAggregate)],
    path: impl AsRef<Path>,
) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::invalid("no runs to emit"));
    }
    let path = path.as_ref();
    fs::write(path, render_scores(runs, aggregates)).map_err(|e| Error::io(path, e))
}

/// C as CSV: rows are observed outcomes, columns prepared states.
pub fn render_calibration_matrix(c: &CalibrationMatrix) -> String {
    let mut s = String::from("observed");
    for j in 0..c.dim() {
        let _ = write!(s, ",{}", bitstring(j, N_QUBITS));
    }
    s.push('\n');
    for i in 0..c.dim() {
        s.push_str(&bitstring(i, N_QUBITS));
        for j in 0..c.dim() {
            let _ = write!(s, ",{}", fmt6(c.matrix()[(i, j)]));
        }
        s.push('\n');
    }
    s
}

/// Ideal distributions for all settings.
pub fn ideal_data() -> ExperimentData {
    ExperimentData::from_fn(Method::Uncorrected, None, |xz| {
        Ok(ideal_distribution(MeasurementConfig::for_xz(xz)))
    })
    .expect("ideal distributions are complete")
}

/// Per-method distributions averaged over all runs.
pub fn mean_distributions(runs: &[RunRecord], method: Method) -> Result<ExperimentData> {
    let datas: Vec<&ExperimentData> = runs
        .iter()
        .filter_map(|r| r.corrected.iter().find(|d| d.method == method))
        .collect();
    if datas.is_empty() {
        return Err(Error::invalid(format!("no {method} data to average")));
    }
    let shots = datas[0].shots;
    ExperimentData::from_fn(method, shots, |xz| {
        let mut acc = vec![0.0; N_OUTCOMES];
        for d in &datas {
            for (a, v) in acc.iter_mut().zip(d.get(xz)?.values()) {
                *a += v;
            }
        }
        let n = datas.len() as f64;
        OutcomeDistribution::classify(acc.into_iter().map(|v| v / n).collect())
    })
}

fn run_info(out: &RunOutput) -> String {
    let c = &out.config;
    let n = &out.noise;
    let mut s = String::new();
    let _ = writeln!(s, "shots={}", c.shots);
    let _ = writeln!(s, "repeats={}", c.repeats);
    let _ = writeln!(s, "sessions={}", c.sessions);
    let _ = writeln!(s, "seed={}", c.seed);
    let _ = writeln!(s, "mitigation={}", c.mitigation.label());
    let _ = writeln!(s, "calibration_matrix={}", c.calibration.label());
    let _ = writeln!(s, "noise_label={}", n.label);
    let ro: Vec<String> = n
        .readout
        .iter()
        .map(|r| format!("{}/{}", r.p01, r.p10))
        .collect();
    let _ = writeln!(s, "readout_p01/p10={}", ro.join(","));
    let _ = writeln!(s, "depol1q={}", n.depol1q);
    let d2: Vec<String> = n.depol2q.iter().map(|p| p.to_string()).collect();
    let _ = writeln!(s, "depol2q={}", d2.join(","));
    s
}

/// All output files as (relative path, contents), in a fixed order.
pub fn render_outputs(out: &RunOutput) -> Result<Vec<(PathBuf, String)>> {
    let mut files = vec![
        (PathBuf::from("run.txt"), run_info(out)),
        (
            PathBuf::from("scores.csv"),
            render_scores(&out.runs, &out.aggregates),
        ),
    ];
    for run in &out.runs {
        files.push((
            PathBuf::from("counts").join(format!("{}.csv", run.id())),
            render_counts(&run.counts),
        ));
    }
    for m in out.config.mitigation.methods() {
        files.push((
            PathBuf::from(format!("prob_{m}.csv")),
            render_probability_matrix(&mean_distributions(&out.runs, m)?)?,
        ));
    }
    for (s, c) in out.measured_calibration.iter().enumerate() {
        files.push((
            PathBuf::from(format!("calibration_s{s}.csv")),
            render_calibration_matrix(c),
        ));
    }
    Ok(files)
}

/// Writes `files` under `dir` atomically: everything is staged in a sibling
/// directory and moved into place only once all writes succeeded.
pub fn write_output_dir(dir: &Path, files: &[(PathBuf, String)]) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        if entries.next().is_some() {
            return Err(Error::invalid(format!(
                "output directory {} is not empty",
                dir.display()
            )));
        }
    }
    let name = dir
        .file_name()
        .ok_or_else(|| Error::invalid(format!("invalid output directory {}", dir.display())))?;
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let staging = parent.join(format!(
        ".{}.staging-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        for (rel, contents) in files {
            let p = staging.join(rel);
            if let Some(d) = p.parent() {
                fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            }
            fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
        }
        if dir.exists() {
            fs::remove_dir(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

/// Runs the experiment and writes its outputs to `dir`. Nothing is written if
/// any step fails.
pub fn run_to_dir(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let out = run_experiment(config)?;
    let files = render_outputs(&out)?;
    write_output_dir(dir, &files)?;
    Ok(out)
}
