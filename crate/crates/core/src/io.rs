//! Line-oriented text formats for snapshots, spectra, diagnostic records and
//! study reports. Floats are written with 17 significant digits so that every
//! value parses back to the same bits.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::harness::StudyReport;
use crate::spectral::{synthesize, GridSampling, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Round-trippable float.
pub struct Exact(pub f64);

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

/// Real-space snapshot: field degree, grid size, time and samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub modes: usize,
    pub t: f64,
    pub samples: GridSampling,
}

impl Snapshot {
    pub fn from_field(field: &SpectralField, points: usize, t: f64) -> Result<Self, SpectralError> {
        Ok(Self {
            modes: field.modes(),
            t,
            samples: synthesize(field, points)?,
        })
    }

    /// Header `N=<int> M=<int> t=<float>`, then `x value` per node.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "N={} M={} t={}", self.modes, self.samples.points(), Exact(self.t));
        for (x, v) in self.samples.nodes().zip(self.samples.values()) {
            let _ = writeln!(out, "{} {}", Exact(x), Exact(*v));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty snapshot"))?;
        let mut modes = None;
        let mut points = None;
        let mut t = None;
        for tok in header.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| parse_err(1, format!("malformed header token '{tok}'")))?;
            let bad = |_| parse_err(1, format!("invalid value for {key}: '{value}'"));
            match key {
                "N" => modes = Some(value.parse::<usize>().map_err(bad)?),
                "M" => points = Some(value.parse::<usize>().map_err(bad)?),
                "t" => t = Some(value.parse::<f64>().map_err(|_| parse_err(1, format!("invalid t '{value}'")))?),
                other => return Err(parse_err(1, format!("unknown header key '{other}'"))),
            }
        }
        let (modes, points, t) = match (modes, points, t) {
            (Some(n), Some(m), Some(t)) => (n, m, t),
            _ => return Err(parse_err(1, "header must carry N, M and t")),
        };
        let mut values = Vec::with_capacity(points);
        for (i, line) in lines {
            let mut it = line.split_whitespace();
            let (x, v) = match (it.next(), it.next(), it.next()) {
                (Some(x), Some(v), None) => (x, v),
                _ => return Err(parse_err(i + 1, "expected 'x value'")),
            };
            x.parse::<f64>().map_err(|_| parse_err(i + 1, format!("invalid x '{x}'")))?;
            values.push(v.parse::<f64>().map_err(|_| parse_err(i + 1, format!("invalid value '{v}'")))?);
        }
        if values.len() != points {
            return Err(parse_err(1, format!("header declares M={points} but {} samples follow", values.len())));
        }
        if points < 2 * modes + 1 {
            return Err(SpectralError::Degree { points, modes }.into());
        }
        Ok(Self {
            modes,
            t,
            samples: GridSampling::new(values),
        })
    }
}

/// Lines `j re im` for `j = -N..=N`.
pub fn spectrum_text(field: &SpectralField) -> String {
    let mut out = String::new();
    for (j, c) in field.iter() {
        let _ = writeln!(out, "{j} {} {}", Exact(c.re), Exact(c.im));
    }
    out
}

/// Parses [`spectrum_text`] output back into a field.
pub fn parse_spectrum(text: &str) -> Result<SpectralField, FormatError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(i + 1, "expected 'j re im'"));
        }
        let j: i64 = parts[0].parse().map_err(|_| parse_err(i + 1, "invalid mode index"))?;
        let re: f64 = parts[1].parse().map_err(|_| parse_err(i + 1, "invalid real part"))?;
        let im: f64 = parts[2].parse().map_err(|_| parse_err(i + 1, "invalid imaginary part"))?;
        entries.push((j, Complex64::new(re, im)));
    }
    let modes = entries.len() / 2;
    for (idx, (j, _)) in entries.iter().enumerate() {
        if *j != idx as i64 - modes as i64 {
            return Err(parse_err(idx + 1, format!("modes must run -{modes}..={modes} in order")));
        }
    }
    Ok(SpectralField::from_coeffs(entries.into_iter().map(|(_, c)| c).collect(), 0.0)?)
}

/// One observation line: `n=.. t=.. l2=.. i1=.. i2=.. i3=.. stage_iters_max=.. gamma_max=..`.
/// `i3=na` when the KdV Hamiltonian does not apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRecord {
    pub n: usize,
    pub t: f64,
    pub l2: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: Option<f64>,
    pub stage_iters_max: usize,
    pub gamma_max: f64,
}

impl fmt::Display for DiagnosticRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} t={} l2={} i1={} i2={} i3=",
            self.n,
            Exact(self.t),
            Exact(self.l2),
            Exact(self.i1),
            Exact(self.i2)
        )?;
        match self.i3 {
            Some(v) => write!(f, "{}", Exact(v))?,
            None => f.write_str("na")?,
        }
        write!(f, " stage_iters_max={} gamma_max={}", self.stage_iters_max, Exact(self.gamma_max))
    }
}

/// Splits a `key=value` record line into pairs.
pub fn record_fields(line: &str) -> Result<Vec<(&str, &str)>, String> {
    line.split_whitespace()
        .map(|tok| tok.split_once('=').ok_or_else(|| format!("token '{tok}' is not key=value")))
        .collect()
}

impl FromStr for DiagnosticRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, String> {
        let fields = record_fields(line)?;
        let get = |key: &str| {
            fields
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| format!("missing field '{key}'"))
        };
        let float = |key: &str| -> Result<f64, String> {
            get(key)?.parse().map_err(|_| format!("invalid float for '{key}'"))
        };
        let int = |key: &str| -> Result<usize, String> {
            get(key)?.parse().map_err(|_| format!("invalid integer for '{key}'"))
        };
        let i3 = match get("i3")? {
            "na" => None,
            v => Some(v.parse().map_err(|_| "invalid float for 'i3'".to_string())?),
        };
        Ok(Self {
            n: int("n")?,
            t: float("t")?,
            l2: float("l2")?,
            i1: float("i1")?,
            i2: float("i2")?,
            i3,
            stage_iters_max: int("stage_iters_max")?,
            gamma_max: float("gamma_max")?,
        })
    }
}

/// Human-readable table `param error`, then `order=<float> points_used=<int>`.
/// The order is `nan` when no fit was possible.
pub fn study_table(report: &StudyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} study: {}", report.kind, report.reference_descriptor);
    let _ = writeln!(out, "param error");
    for p in &report.points {
        let _ = write!(out, "{} {}", Exact(p.param), Exact(p.error));
        if p.excluded {
            out.push_str(" # excluded: round-off floor");
        }
        out.push('\n');
    }
    let order = report.estimated_order.unwrap_or(f64::NAN);
    let _ = writeln!(out, "order={} points_used={}", Exact(order), report.points_used());
    out
}

/// One `key=value` record per study point.
pub fn study_records(report: &StudyReport) -> String {
    let mut out = String::new();
    for p in &report.points {
        let _ = writeln!(
            out,
            "kind={} param={} error={} excluded={} stage_iters_max={}",
            report.kind,
            Exact(p.param),
            Exact(p.error),
            p.excluded,
            p.max_stage_iterations
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::InitialData;
    use proptest::prelude::*;

    #[test]
    fn snapshot_round_trip() {
        let f = InitialData::GaussianPeriodic { amplitude: 1.0, center: 0.2, width: 0.5 }.project(6);
        let snap = Snapshot::from_field(&f, 24, 0.125).unwrap();
        let text = snap.to_text();
        assert!(text.starts_with("N=6 M=24 t=1.2500000000000000e-1\n"));
        assert_eq!(Snapshot::parse(&text).unwrap(), snap);
    }

    #[test]
    fn snapshot_errors() {
        assert!(Snapshot::parse("").is_err());
        assert!(Snapshot::parse("N=1 M=3 t=0\n0 1\n").is_err());
        assert!(matches!(
            Snapshot::parse("N=2 M=3 t=0\n0 1\n1 1\n2 1\n"),
            Err(FormatError::Spectral(SpectralError::Degree { .. }))
        ));
    }

    #[test]
    fn spectrum_round_trip() {
        let f = InitialData::GaussianPeriodic { amplitude: 1.0, center: 0.2, width: 0.5 }.project(5);
        assert_eq!(parse_spectrum(&spectrum_text(&f)).unwrap(), f);
    }

    #[test]
    fn record_na_hamiltonian() {
        let r = DiagnosticRecord {
            n: 3,
            t: 0.3,
            l2: 1.0,
            i1: 0.0,
            i2: 1.0,
            i3: None,
            stage_iters_max: 7,
            gamma_max: 0.01,
        };
        let line = r.to_string();
        assert!(line.contains("i3=na"));
        assert_eq!(line.parse::<DiagnosticRecord>().unwrap(), r);
        assert!("n=1 t=0".parse::<DiagnosticRecord>().is_err());
    }

    proptest! {
        #[test]
        fn records_round_trip_bitwise(
            n in 0usize..1_000_000,
            vals in proptest::collection::vec(-1e6f64..1e6, 6),
            iters in 0usize..200,
            has_i3 in any::<bool>(),
        ) {
            let r = DiagnosticRecord {
                n,
                t: vals[0],
                l2: vals[1].abs(),
                i1: vals[2],
                i2: vals[3].abs(),
                i3: has_i3.then_some(vals[4]),
                stage_iters_max: iters,
                gamma_max: vals[5].abs(),
            };
            prop_assert_eq!(r.to_string().parse::<DiagnosticRecord>().unwrap(), r);
        }
    }
}
