//! Device calibration snapshots and noise models derived from them.
//!
//! File format (comma separated, one row per line):
//!
//! ```text
//! #qubits
//! date,qubit,T1_us,T2_us,freq_GHz,anharm_GHz,readout_err
//! #pairs
//! date,pair,cnot_err,gate_time_ns        (pair written as i-j)
//! ```
//!
//! Lines starting with `# ` are comments; blank lines are ignored.

use std::path::Path;

use crate::noise::{NoiseModel, ReadoutConfusion};
use crate::{Error, Result, N_QUBITS};

#[derive(Debug, Clone, PartialEq)]
pub struct QubitCalibration {
    pub date: String,
    pub qubit: usize,
    pub t1_us: f64,
    pub t2_us: f64,
    pub freq_ghz: f64,
    pub anharm_ghz: f64,
    pub readout_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCalibration {
    pub date: String,
    pub pair: (usize, usize),
    pub cnot_err: f64,
    pub gate_time_ns: f64,
}

impl PairCalibration {
    fn connects(&self, a: usize, b: usize) -> bool {
        self.pair == (a, b) || self.pair == (b, a)
    }
}

/// Parsed calibration rows, possibly spanning several dates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationRecord {
    pub qubits: Vec<QubitCalibration>,
    pub pairs: Vec<PairCalibration>,
}

pub fn load_calibration(path: impl AsRef<Path>) -> Result<CalibrationRecord> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calibration(&text, &path.display().to_string())
}

#[derive(Clone, Copy)]
enum Section {
    None,
    Qubits,
    Pairs,
}

pub fn parse_calibration(text: &str, source: &str) -> Result<CalibrationRecord> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut record = CalibrationRecord::default();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line == "#" || line.starts_with("# ") {
            continue;
        }
        match line {
            "#qubits" => {
                section = Section::Qubits;
                continue;
            }
            "#pairs" => {
                section = Section::Pairs;
                continue;
            }
            _ if line.starts_with('#') => {
                return Err(err(lineno, format!("unknown section header '{line}'")));
            }
            _ => {}
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |i: usize, name: &str| -> Result<f64> {
            let v: f64 = fields[i]
                .parse()
                .map_err(|_| err(lineno, format!("{name}: '{}' is not a number", fields[i])))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("{name} is not finite")));
            }
            Ok(v)
        };
        let prob = |i: usize, name: &str| -> Result<f64> {
            let v = num(i, name)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(lineno, format!("{name} = {v} outside [0, 1]")));
            }
            Ok(v)
        };
        let date = |s: &str| -> Result<String> {
            if s.is_empty() {
                Err(err(lineno, "empty date".into()))
            } else {
                Ok(s.to_string())
            }
        };
        match section {
            Section::None => {
                return Err(err(
                    lineno,
                    "data row before a #qubits or #pairs header".into(),
                ));
            }
            Section::Qubits => {
                if fields.len() != 7 {
                    return Err(err(
                        lineno,
                        format!("expected 7 qubit fields, found {}", fields.len()),
                    ));
                }
                let qubit = fields[1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad qubit index '{}'", fields[1])))?;
                record.qubits.push(QubitCalibration {
                    date: date(fields[0])?,
                    qubit,
                    t1_us: num(2, "T1")?,
                    t2_us: num(3, "T2")?,
                    freq_ghz: num(4, "frequency")?,
                    anharm_ghz: num(5, "anharmonicity")?,
                    readout_err: prob(6, "readout error")?,
                });
            }
            Section::Pairs => {
                if fields.len() != 4 {
                    return Err(err(
                        lineno,
                        format!("expected 4 pair fields, found {}", fields.len()),
                    ));
                }
                let pair = parse_pair(fields[1]).ok_or_else(|| {
                    err(lineno, format!("bad pair '{}', expected i-j", fields[1]))
                })?;
                record.pairs.push(PairCalibration {
                    date: date(fields[0])?,
                    pair,
                    cnot_err: prob(2, "CNOT error")?,
                    gate_time_ns: num(3, "gate time")?,
                });
            }
        }
    }
    if record.qubits.is_empty() && record.pairs.is_empty() {
        return Err(err(
            text.lines().count().max(1),
            "no calibration rows".into(),
        ));
    }
    Ok(record)
}

/// Parses `i-j`.
pub fn parse_pair(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.split_once('-')?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a != b).then_some((a, b))
}

impl CalibrationRecord {
    /// Distinct dates in file order.
    pub fn dates(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for d in self
            .qubits
            .iter()
            .map(|q| &q.date)
            .chain(self.pairs.iter().map(|p| &p.date))
        {
            if !out.contains(&d.as_str()) {
                out.push(d);
            }
        }
        out
    }

    /// Rows for a single date.
    pub fn for_date(&self, date: &str) -> Result<CalibrationRecord> {
        let rec = CalibrationRecord {
            qubits: self
                .qubits
                .iter()
                .filter(|q| q.date == date)
                .cloned()
                .collect(),
            pairs: self
                .pairs
                .iter()
                .filter(|p| p.date == date)
                .cloned()
                .collect(),
        };
        if rec.qubits.is_empty() && rec.pairs.is_empty() {
            return Err(Error::invalid(format!(
                "no calibration rows for date {date}"
            )));
        }
        Ok(rec)
    }

    pub fn qubit(&self, qubit: usize) -> Option<&QubitCalibration> {
        self.qubits.iter().find(|q| q.qubit == qubit)
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&PairCalibration> {
        self.pairs.iter().find(|p| p.connects(a, b))
    }
}

/// Builds a noise model from one calibration snapshot.
///
/// `qubits` maps logical (A, B₁, B₂, C) to physical qubits; `pairs` maps the
/// CNOT slots (A→B₁, B₂→C, B₁→B₂) to physical connections. Readout confusion
/// is symmetric with the reported assignment error; each slot's depolarizing
/// probability is the reported CNOT error rate.
pub fn noise_from_calibration(
    record: &CalibrationRecord,
    qubits: [usize; N_QUBITS],
    pairs: [(usize, usize); 3],
) -> Result<NoiseModel> {
    let dates = record.dates();
    if dates.len() != 1 {
        return Err(Error::invalid(format!(
            "calibration record spans {} dates; select one first",
            dates.len()
        )));
    }
    let mut readout = [ReadoutConfusion::PERFECT; N_QUBITS];
    for (slot, &q) in readout.iter_mut().zip(&qubits) {
        let row = record
            .qubit(q)
            .ok_or_else(|| Error::invalid(format!("qubit {q} not in calibration record")))?;
        *slot = ReadoutConfusion::symmetric(row.readout_err)?;
    }
    let mut depol2q = [0.0; 3];
    for (slot, &(a, b)) in depol2q.iter_mut().zip(&pairs) {
        let row = record
            .pair(a, b)
            .ok_or_else(|| Error::invalid(format!("pair {a}-{b} not in calibration record")))?;
        *slot = row.cnot_err;
    }
    let fmt_pairs: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    Ok(NoiseModel {
        readout,
        depol1q: 0.0,
        depol2q,
        label: format!(
            "{} qubits {:?} pairs {}",
            dates[0],
            qubits,
            fmt_pairs.join(",")
        ),
    })
}
