//! CSV persistence for trial records and summaries.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::run::TrialRecord;

pub const RECORD_HEADER: [&str; 12] = [
    "trial_index",
    "snr_db",
    "algorithm",
    "sum_se",
    "common_rate",
    "per_user_private_rates",
    "iterations",
    "converged",
    "residual",
    "wall_time_ms",
    "per_antenna_power",
    "note",
];

/// Nine significant digits. Plain notation for moderate magnitudes,
/// exponent notation otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let rounded: f64 = sci.parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e9).contains(&mag) {
        let decimals = (8 - mag.log10().floor() as i32).max(0) as usize;
        let s = format!("{rounded:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        sci
    }
}

pub fn parse_float(s: &str) -> Result<f64> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Validation(format!("{s:?} is not a number"))),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| format_float(v)).collect::<Vec<_>>().join(";")
}

fn split(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(parse_float).collect()
}

pub(crate) fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_records<W: Write>(records: &[TrialRecord], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(RECORD_HEADER)?;
    for r in records {
        out.write_record([
            r.trial_index.to_string(),
            format_float(r.snr_db),
            r.algorithm.to_string(),
            format_float(r.sum_se),
            format_float(r.common_rate),
            join(&r.per_user_private_rates),
            r.iterations.to_string(),
            r.converged.to_string(),
            format_float(r.residual),
            format_float(r.wall_time_ms),
            join(&r.per_antenna_power),
            r.note.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a header row and one line per record.
pub fn write_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    write_records(records, std::fs::File::create(path)?)
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::Validation(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |j: usize| row.get(j).unwrap_or_default();
        let bad = |what: &str| Error::Validation(format!("row {}: bad {what}", i + 1));
        out.push(TrialRecord {
            trial_index: field(0).parse().map_err(|_| bad("trial_index"))?,
            snr_db: parse_float(field(1))?,
            algorithm: field(2).parse()?,
            sum_se: parse_float(field(3))?,
            common_rate: parse_float(field(4))?,
            per_user_private_rates: split(field(5))?,
            iterations: field(6).parse().map_err(|_| bad("iterations"))?,
            converged: field(7).parse().map_err(|_| bad("converged"))?,
            residual: parse_float(field(8))?,
            wall_time_ms: parse_float(field(9))?,
            per_antenna_power: split(field(10))?,
            note: field(11).to_string(),
        });
    }
    Ok(out)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    read_records(std::fs::File::open(path)?)
}
