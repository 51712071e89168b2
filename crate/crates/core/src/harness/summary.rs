//! Per-(SNR, algorithm) aggregates.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

use super::config::Algorithm;
use super::records::{format_float, writer};
use super::run::TrialRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    /// Successful records in the group.
    pub trials: usize,
    pub failures: usize,
    pub mean_sum_se: f64,
    /// Standard error of the mean; zero for a single record.
    pub stderr_sum_se: f64,
    pub mean_common_rate: f64,
    /// Mean share of the radiated power on each antenna.
    pub mean_power_ratio: Vec<f64>,
}

/// Groups records by SNR and algorithm. Failed records are counted but
/// left out of the averages.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then(a.algorithm.cmp(&b.algorithm)));
    sorted
        .chunk_by(|a, b| a.snr_db.total_cmp(&b.snr_db).is_eq() && a.algorithm == b.algorithm)
        .map(summarize_group)
        .collect()
}

fn summarize_group(group: &[&TrialRecord]) -> SummaryRow {
    let ok: Vec<&&TrialRecord> = group.iter().filter(|r| !r.failed() && r.sum_se.is_finite()).collect();
    let n = ok.len();
    let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
        if n == 0 {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / n as f64
        }
    };
    let mean_sum_se = mean(&|r| r.sum_se);
    let stderr_sum_se = if n < 2 {
        if n == 1 { 0.0 } else { f64::NAN }
    } else {
        let var = ok.iter().map(|r| (r.sum_se - mean_sum_se).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    let antennas = ok.first().map_or(0, |r| r.per_antenna_power.len());
    let mut ratio = vec![0.0; antennas];
    for r in &ok {
        let total: f64 = r.per_antenna_power.iter().sum();
        for (acc, p) in ratio.iter_mut().zip(&r.per_antenna_power) {
            *acc += p / total;
        }
    }
    ratio.iter_mut().for_each(|x| *x /= n as f64);
    SummaryRow {
        snr_db: group[0].snr_db,
        algorithm: group[0].algorithm,
        trials: n,
        failures: group.len() - n,
        mean_sum_se,
        stderr_sum_se,
        mean_common_rate: mean(&|r| r.common_rate),
        mean_power_ratio: ratio,
    }
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "snr_db",
    "algorithm",
    "trials",
    "failures",
    "mean_sum_se",
    "stderr_sum_se",
    "mean_common_rate",
    "mean_power_ratio",
];

pub fn write_summary<W: Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in rows {
        out.write_record([
            format_float(r.snr_db),
            r.algorithm.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
            format_float(r.mean_sum_se),
            format_float(r.stderr_sum_se),
            format_float(r.mean_common_rate),
            r.mean_power_ratio.iter().map(|&v| format_float(v)).collect::<Vec<_>>().join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    write_summary(rows, std::fs::File::create(path)?)
}
