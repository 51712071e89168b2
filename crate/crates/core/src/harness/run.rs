//! Monte Carlo execution.

use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{baseline_precoder, BaselineKind};
use crate::channel::{ArrayGeometry, OneRingModel};
use crate::error::{Error, Result};
use crate::gpi::{gpi_sem_solve, qgpi_rs_solve};
use crate::linalg::CMatrix;
use crate::quantization::QuantizerProfile;
use crate::rates::{antenna_loads, rate_report};
use crate::rng::SeededRng;

use super::config::{Algorithm, ExperimentSpec};

/// Noise power; the SNR in dB sets `P = 10^(snr/10)`.
pub const NOISE_POWER: f64 = 1.0;

/// One (trial, SNR, algorithm) outcome. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub sum_se: f64,
    pub common_rate: f64,
    pub per_user_private_rates: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub wall_time_ms: f64,
    /// `P·α_n Σ_i |F_{n,i}|²`.
    pub per_antenna_power: Vec<f64>,
    /// Error message when the solve failed, empty otherwise.
    pub note: String,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        !self.note.is_empty()
    }
}

/// Execution knobs that do not affect the numerical results.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Measure wall time per solve. Off by default so output is reproducible.
    pub timing: bool,
}

pub fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Runs every (trial, SNR, algorithm) combination and returns the records
/// sorted by trial, SNR and algorithm.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    run_experiment_with(spec, RunOptions::default())
}

pub fn run_experiment_with(spec: &ExperimentSpec, options: RunOptions) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let model = OneRingModel {
        geometry: ArrayGeometry::ula(spec.n, spec.antenna_spacing)?,
        spread: spec.angular_spread,
        mode: spec.channel_mode,
    };
    let job = || -> Vec<TrialRecord> {
        (0..spec.trials)
            .into_par_iter()
            .flat_map_iter(|t| run_trial(spec, &model, t, options.timing))
            .collect()
    };
    let mut records = match options.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Validation(format!("cannot start {w} workers: {e}")))?
            .install(job),
        None => job(),
    };
    records.sort_by(|a, b| {
        a.trial_index
            .cmp(&b.trial_index)
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.algorithm.cmp(&b.algorithm))
    });
    Ok(records)
}

/// The quantizer profile and channel for trial `t`; every algorithm in the
/// trial sees these.
pub fn trial_setup(spec: &ExperimentSpec, model: &OneRingModel, t: usize) -> Result<(QuantizerProfile<f64>, CMatrix<f64>)> {
    let mut rng = SeededRng::with_stream(spec.base_seed, t as u64);
    let dac = spec.dac_bits.resolve(spec.n, &mut rng);
    let adc = spec.adc_bits.resolve(spec.k, &mut rng);
    let profile = QuantizerProfile::new(dac, adc)?;
    let channel = model.sample::<f64>(spec.k, &mut rng)?;
    Ok((profile, channel.h))
}

fn run_trial(spec: &ExperimentSpec, model: &OneRingModel, t: usize, timing: bool) -> Vec<TrialRecord> {
    let setup = trial_setup(spec, model, t);
    let mut out = Vec::with_capacity(spec.snr_db.len() * spec.algorithms.len());
    for &snr in &spec.snr_db {
        for &alg in &spec.algorithms {
            let start = Instant::now();
            let res = setup
                .as_ref()
                .map_err(|e| Error::Validation(e.to_string()))
                .and_then(|(profile, h)| solve_one(spec, alg, h, profile, snr_to_power(snr)));
            let elapsed = if timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            out.push(match res {
                Ok(mut r) => {
                    r.trial_index = t;
                    r.snr_db = snr;
                    r.wall_time_ms = elapsed;
                    r
                }
                Err(e) => TrialRecord {
                    trial_index: t,
                    snr_db: snr,
                    algorithm: alg,
                    sum_se: f64::NAN,
                    common_rate: f64::NAN,
                    per_user_private_rates: vec![f64::NAN; spec.k],
                    iterations: 0,
                    converged: false,
                    residual: f64::NAN,
                    wall_time_ms: elapsed,
                    per_antenna_power: vec![f64::NAN; spec.n],
                    note: e.to_string(),
                },
            });
        }
    }
    out
}

/// Solves one algorithm on one channel and evaluates its exact rates.
pub fn solve_one(
    spec: &ExperimentSpec,
    alg: Algorithm,
    h: &CMatrix<f64>,
    profile: &QuantizerProfile<f64>,
    power: f64,
) -> Result<TrialRecord> {
    let opts = spec.solver;
    let (f, iterations, converged, residual) = match alg {
        Algorithm::QgpiRs => {
            let r = qgpi_rs_solve(h, profile, power, NOISE_POWER, &opts)?;
            (r.precoder, r.iterations, r.converged, r.residual)
        }
        Algorithm::QgpiSem => {
            let r = gpi_sem_solve(h, profile, power, NOISE_POWER, &opts)?;
            (r.precoder, r.iterations, r.converged, r.residual)
        }
        Algorithm::Qmrt | Algorithm::Qzf | Algorithm::Qrzf => {
            let kind = match alg {
                Algorithm::Qmrt => BaselineKind::Qmrt,
                Algorithm::Qzf => BaselineKind::Qzf,
                _ => BaselineKind::Qrzf(spec.rzf_regularizer),
            };
            (baseline_precoder(kind, h, profile, power, NOISE_POWER)?, 0, true, 0.0)
        }
    };
    let report = rate_report(h, f.matrix(), profile, power, NOISE_POWER)?;
    Ok(TrialRecord {
        trial_index: 0,
        snr_db: 0.0,
        algorithm: alg,
        sum_se: report.sum_se,
        common_rate: report.common_rate,
        per_user_private_rates: report.private_rates,
        iterations,
        converged,
        residual,
        wall_time_ms: 0.0,
        per_antenna_power: antenna_loads(f.matrix(), profile).into_iter().map(|l| l * power).collect(),
        note: String::new(),
    })
}
