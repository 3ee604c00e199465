//! Header-exact CSV schemas.
//!
//! Floats are written with 17 significant digits, so every file reads back
//! to the same bits. Non-finite values are spelled `inf`, `-inf` and `nan`.

use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};
use tauc_core::estimation::{Branch, BranchPair, BranchStatus, DecayCurve, ErrorPoint, PsdSample};
use tauc_core::fisher::ErrorLandscape;

use crate::error::{DataError, Result, TaucError};

pub const DECAY_HEADER: [&str; 5] = ["t_ms", "mean_mx", "n_pulses", "n_shots", "n_reps"];
pub const DECAY_REPS_HEADER: [&str; 3] = ["rep", "t_ms", "mx"];
pub const ESTIMATES_HEADER: [&str; 5] = ["t_ms", "tau_minus_ms", "tau_plus_ms", "discriminant", "status"];
pub const ERRORS_HEADER: [&str; 5] = ["t_ms", "branch", "eps_r", "eps_f_bound", "excluded_reps"];
pub const SPECTROSCOPY_HEADER: [&str; 2] = ["omega_per_ms", "g_hat"];
pub const ATTENUATION_HEADER: [&str; 7] = ["t_ms", "j_obs", "non_positive_signal", "j_exact", "j_nf", "j_sm", "j_lm"];
pub const LANDSCAPE_HEADER: [&str; 5] = ["t_ms", "attenuation", "fisher", "eps_f", "is_divergent"];

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt_f64)
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn render(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Parsed rows of a CSV table with their 1-based line numbers.
struct Table<'a> {
    source: &'a str,
    rows: Vec<(u64, StringRecord)>,
}

impl Table<'_> {
    fn parse<'a>(text: &str, source: &'a str, header: &[&str]) -> Result<Table<'a>> {
        let mut reader = ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let found = reader.headers().map_err(|e| schema(source, format!("unreadable header: {e}")))?.clone();
        if found.iter().ne(header.iter().copied()) {
            return Err(schema(source, format!("header must be `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_err(source, line, 0, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Table { source, rows })
    }

    fn float(&self, line: u64, rec: &StringRecord, col: usize) -> Result<f64> {
        let raw = rec.get(col).unwrap_or("");
        parse_f64(raw).ok_or_else(|| parse_err(self.source, line, col + 1, format!("`{raw}` is not a number")))
    }

    fn finite(&self, line: u64, rec: &StringRecord, col: usize) -> Result<f64> {
        let v = self.float(line, rec, col)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(parse_err(self.source, line, col + 1, format!("`{}` must be finite", rec.get(col).unwrap_or(""))))
        }
    }

    fn optional(&self, line: u64, rec: &StringRecord, col: usize) -> Result<Option<f64>> {
        let v = self.float(line, rec, col)?;
        Ok((!v.is_nan()).then_some(v))
    }

    fn integer<T: std::str::FromStr>(&self, line: u64, rec: &StringRecord, col: usize) -> Result<T> {
        let raw = rec.get(col).unwrap_or("");
        raw.parse::<T>().map_err(|_| parse_err(self.source, line, col + 1, format!("`{raw}` is not a non-negative integer")))
    }
}

fn schema(source: &str, reason: impl Into<String>) -> TaucError {
    DataError::Schema { path: source.to_string(), reason: reason.into() }.into()
}

fn parse_err(source: &str, line: u64, column: usize, reason: impl Into<String>) -> TaucError {
    DataError::Parse { path: source.to_string(), line, column, reason: reason.into() }.into()
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| TaucError::io(path, e))
}

// ---- decay curves ----

pub fn write_decay(curve: &DecayCurve) -> String {
    render(
        &DECAY_HEADER,
        curve.times().iter().zip(curve.mean_mx()).map(|(&t, &m)| {
            vec![fmt_f64(t), fmt_f64(m), curve.n_pulses().to_string(), curve.n_shots().to_string(), curve.n_reps().to_string()]
        }),
    )
}

/// Long-format repetition table, rep-major.
pub fn write_decay_reps(curve: &DecayCurve) -> Option<String> {
    let rows = curve.per_rep()?;
    Some(render(
        &DECAY_REPS_HEADER,
        rows.iter().enumerate().flat_map(|(r, row)| {
            row.iter().zip(curve.times()).map(move |(&mx, &t)| vec![r.to_string(), fmt_f64(t), fmt_f64(mx)])
        }),
    ))
}

pub fn read_decay(text: &str, source: &str) -> Result<DecayCurve> {
    let table = Table::parse(text, source, &DECAY_HEADER)?;
    if table.rows.is_empty() {
        return Err(schema(source, "no data rows"));
    }
    let mut times = Vec::new();
    let mut mx = Vec::new();
    let mut meta: Option<(u32, u64, u32)> = None;
    for (line, rec) in &table.rows {
        let t = table.finite(*line, rec, 0)?;
        if t <= 0.0 {
            return Err(parse_err(source, *line, 1, "time must be positive"));
        }
        let m = table.finite(*line, rec, 1)?;
        if m.abs() > 1.0 {
            return Err(parse_err(source, *line, 2, format!("|mean_mx| = {} exceeds 1", m.abs())));
        }
        let this = (table.integer(*line, rec, 2)?, table.integer(*line, rec, 3)?, table.integer(*line, rec, 4)?);
        if this.0 == 0 || this.1 == 0 || this.2 == 0 {
            return Err(parse_err(source, *line, 3, "pulse, shot and repetition counts must be positive"));
        }
        match meta {
            None => meta = Some(this),
            Some(prev) if prev != this => return Err(schema(source, format!("line {line}: n_pulses/n_shots/n_reps differ from earlier rows"))),
            _ => {}
        }
        times.push(t);
        mx.push(m);
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(schema(source, "times must be strictly increasing"));
    }
    let (n, shots, reps) = meta.unwrap_or_default();
    DecayCurve::new(times, mx, n, shots, reps).map_err(|e| schema(source, e.to_string()))
}

/// Attaches a repetition table to a mean curve.
pub fn read_decay_reps(text: &str, source: &str, curve: DecayCurve) -> Result<DecayCurve> {
    let table = Table::parse(text, source, &DECAY_REPS_HEADER)?;
    let n_t = curve.len();
    let n_r = curve.n_reps() as usize;
    if table.rows.len() != n_t * n_r {
        return Err(schema(source, format!("expected {} rows ({n_r} reps x {n_t} times), found {}", n_t * n_r, table.rows.len())));
    }
    let mut rows = vec![Vec::with_capacity(n_t); n_r];
    for (k, (line, rec)) in table.rows.iter().enumerate() {
        let rep: usize = table.integer(*line, rec, 0)?;
        let t = table.finite(*line, rec, 1)?;
        let mx = table.finite(*line, rec, 2)?;
        if mx.abs() > 1.0 {
            return Err(parse_err(source, *line, 3, format!("|mx| = {} exceeds 1", mx.abs())));
        }
        let (want_rep, want_t) = (k / n_t, k % n_t);
        if rep != want_rep || t != curve.times()[want_t] {
            return Err(schema(source, format!("line {line}: expected rep {want_rep} at t = {}", fmt_f64(curve.times()[want_t]))));
        }
        rows[rep].push(mx);
    }
    curve.with_repetitions(rows).map_err(|e| schema(source, e.to_string()))
}

// ---- estimates ----

pub fn write_estimates(pairs: &[BranchPair]) -> String {
    render(
        &ESTIMATES_HEADER,
        pairs.iter().map(|p| vec![fmt_f64(p.t), fmt_opt(p.tau_minus), fmt_opt(p.tau_plus), fmt_f64(p.discriminant), p.status.as_str().to_string()]),
    )
}

pub fn read_estimates(text: &str, source: &str) -> Result<Vec<BranchPair>> {
    let table = Table::parse(text, source, &ESTIMATES_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let status_raw = rec.get(4).unwrap_or("");
        let status = BranchStatus::parse(status_raw).ok_or_else(|| parse_err(source, *line, 5, format!("unknown status `{status_raw}`")))?;
        let pair = BranchPair {
            t: table.finite(*line, rec, 0)?,
            tau_minus: table.optional(*line, rec, 1)?,
            tau_plus: table.optional(*line, rec, 2)?,
            discriminant: table.float(*line, rec, 3)?,
            status,
        };
        if let (Some(m), Some(p)) = (pair.tau_minus, pair.tau_plus) {
            if m > p {
                return Err(parse_err(source, *line, 2, "tau_minus exceeds tau_plus"));
            }
        }
        out.push(pair);
    }
    if out.windows(2).any(|w| w[0].t >= w[1].t) {
        return Err(schema(source, "times must be strictly increasing"));
    }
    Ok(out)
}

// ---- errors ----

pub fn write_errors(points: &[ErrorPoint]) -> String {
    render(
        &ERRORS_HEADER,
        points.iter().map(|p| {
            vec![fmt_f64(p.t), p.branch.name().to_string(), fmt_opt(p.eps_r), fmt_f64(p.eps_f_bound), p.excluded_reps.to_string()]
        }),
    )
}

pub fn read_errors(text: &str, source: &str) -> Result<Vec<ErrorPoint>> {
    let table = Table::parse(text, source, &ERRORS_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            let raw = rec.get(1).unwrap_or("");
            Ok(ErrorPoint {
                t: table.finite(*line, rec, 0)?,
                branch: Branch::parse(raw).ok_or_else(|| parse_err(source, *line, 2, format!("unknown branch `{raw}`")))?,
                eps_r: table.optional(*line, rec, 2)?,
                eps_f_bound: table.float(*line, rec, 3)?,
                excluded_reps: table.integer(*line, rec, 4)?,
            })
        })
        .collect()
}

// ---- spectroscopy ----

pub fn write_spectroscopy(samples: &[PsdSample]) -> String {
    render(&SPECTROSCOPY_HEADER, samples.iter().map(|s| vec![fmt_f64(s.omega), fmt_f64(s.g_hat)]))
}

pub fn read_spectroscopy(text: &str, source: &str) -> Result<Vec<PsdSample>> {
    let table = Table::parse(text, source, &SPECTROSCOPY_HEADER)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| Ok(PsdSample { omega: table.finite(*line, rec, 0)?, g_hat: table.finite(*line, rec, 1)? }))
        .collect()
}

// ---- attenuation and landscape (write-only artifacts) ----

/// One row of `attenuation.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationRow {
    pub t: f64,
    pub j_obs: Option<f64>,
    pub j_exact: f64,
    pub j_nf: f64,
    pub j_sm: f64,
    pub j_lm: f64,
}

pub fn write_attenuation(rows: &[AttenuationRow]) -> String {
    render(
        &ATTENUATION_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_opt(r.j_obs),
                u8::from(r.j_obs.is_none()).to_string(),
                fmt_f64(r.j_exact),
                fmt_f64(r.j_nf),
                fmt_f64(r.j_sm),
                fmt_f64(r.j_lm),
            ]
        }),
    )
}

pub fn write_landscape(land: &ErrorLandscape) -> String {
    render(
        &LANDSCAPE_HEADER,
        (0..land.times.len()).map(|i| {
            let eps = if land.divergent[i] { f64::INFINITY } else { land.eps_f[i] };
            vec![fmt_f64(land.times[i]), fmt_f64(land.attenuation[i]), fmt_f64(land.fisher[i]), fmt_f64(eps), u8::from(land.divergent[i]).to_string()]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 8.58, 1e-300, 6.02e23, -2.5, f64::MIN_POSITIVE] {
            assert_eq!(parse_f64(&fmt_f64(x)), Some(x));
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert!(parse_f64("nan").unwrap().is_nan());
        assert_eq!(parse_f64("banana"), None);
    }

    #[test]
    fn decay_ingest_examples() {
        let ok = "t_ms,mean_mx,n_pulses,n_shots,n_reps\n0.1,0.9,2,100,5\n0.2,0.8,2,100,5\n0.3,0.7,2,100,5\n";
        assert_eq!(read_decay(ok, "ok.csv").unwrap().len(), 3);

        let high = ok.replace("0.2,0.8", "0.2,1.2");
        match read_decay(&high, "high.csv") {
            Err(TaucError::Data(DataError::Parse { line, column, .. })) => assert_eq!((line, column), (3, 2)),
            other => panic!("{other:?}"),
        }
        let unsorted = ok.replace("0.3,0.7", "0.15,0.7");
        assert!(matches!(read_decay(&unsorted, "u.csv"), Err(TaucError::Data(DataError::Schema { .. }))));
        let header = ok.replace("mean_mx", "mx");
        assert!(matches!(read_decay(&header, "h.csv"), Err(TaucError::Data(DataError::Schema { .. }))));
        let mixed = ok.replace("0.3,0.7,2,100,5", "0.3,0.7,4,100,5");
        assert!(matches!(read_decay(&mixed, "m.csv"), Err(TaucError::Data(DataError::Schema { .. }))));
        let junk = ok.replace("0.3,0.7", "0.3,abc");
        assert!(matches!(read_decay(&junk, "j.csv"), Err(TaucError::Data(DataError::Parse { line: 4, column: 2, .. }))));
    }

    #[test]
    fn write_read_write_is_idempotent() {
        let curve = DecayCurve::from_repetitions(vec![0.1, 0.25], vec![vec![0.9, 0.3], vec![0.7, -0.1]], 2, 1000).unwrap();
        let text = write_decay(&curve);
        let back = read_decay(&text, "d").unwrap();
        assert_eq!(write_decay(&back), text);
        let reps = write_decay_reps(&curve).unwrap();
        let with = read_decay_reps(&reps, "r", back).unwrap();
        assert_eq!(with.per_rep(), curve.per_rep());

        let pairs = vec![
            BranchPair { t: 0.1, tau_minus: Some(0.01), tau_plus: Some(0.2), discriminant: 0.3, status: BranchStatus::TwoRoots },
            BranchPair { t: 0.2, tau_minus: None, tau_plus: None, discriminant: -0.1, status: BranchStatus::NoRealRoot },
            BranchPair::unique(0.3, 0.05),
        ];
        let text = write_estimates(&pairs);
        assert!(text.starts_with("t_ms,tau_minus_ms,tau_plus_ms,discriminant,status\n"));
        assert_eq!(write_estimates(&read_estimates(&text, "e").unwrap()), text);

        let errs = vec![
            ErrorPoint { t: 0.1, branch: Branch::Minus, eps_r: Some(2.5), eps_f_bound: f64::INFINITY, excluded_reps: 0 },
            ErrorPoint { t: 0.1, branch: Branch::Plus, eps_r: None, eps_f_bound: 1.0, excluded_reps: 50 },
        ];
        let text = write_errors(&errs);
        assert_eq!(write_errors(&read_errors(&text, "x").unwrap()), text);

        let spec = vec![PsdSample { omega: 3.0, g_hat: 0.5 }, PsdSample { omega: 1.0 / 7.0, g_hat: 2.0 }];
        let text = write_spectroscopy(&spec);
        assert_eq!(read_spectroscopy(&text, "s").unwrap(), spec);
    }
}
