//! JSON experiment description.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::AodMode;
use crate::error::{Error, Result};
use crate::gpi::SolverOptions;
use crate::quantization::Resolution;
use crate::rng::SeededRng;

pub const DEFAULT_ANGULAR_SPREAD: f64 = std::f64::consts::PI / 6.0;
pub const DEFAULT_ANTENNA_SPACING: f64 = 0.5;

/// Precoding schemes the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "QGPIRS")]
    QgpiRs,
    #[serde(rename = "QGPISEM")]
    QgpiSem,
    #[serde(rename = "QMRT")]
    Qmrt,
    #[serde(rename = "QZF")]
    Qzf,
    #[serde(rename = "QRZF")]
    Qrzf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::QgpiRs,
        Algorithm::QgpiSem,
        Algorithm::Qmrt,
        Algorithm::Qzf,
        Algorithm::Qrzf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::QgpiRs => "QGPIRS",
            Algorithm::QgpiSem => "QGPISEM",
            Algorithm::Qmrt => "QMRT",
            Algorithm::Qzf => "QZF",
            Algorithm::Qrzf => "QRZF",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown algorithm {s:?}")))
    }
}

/// Per-converter resolution assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum BitSpec {
    /// Same resolution everywhere.
    Uniform(Resolution),
    /// One entry per converter.
    Explicit(Vec<Resolution>),
    /// Independent uniform integer draw per converter and trial.
    UniformRandom { lo: u32, hi: u32 },
    /// `count@bits` groups, laid out in order.
    Mixed(Vec<(usize, Resolution)>),
}

impl BitSpec {
    /// Checks the assignment against the converter count without drawing anything.
    pub fn validate(&self, len: usize, what: &str) -> Result<()> {
        match self {
            BitSpec::Uniform(_) => Ok(()),
            BitSpec::Explicit(v) if v.len() != len => Err(Error::Validation(format!(
                "{what} lists {} resolutions but there are {len} converters",
                v.len()
            ))),
            BitSpec::Explicit(_) => Ok(()),
            BitSpec::UniformRandom { lo, hi } if *lo == 0 || lo > hi => {
                Err(Error::Validation(format!("{what} range {lo}..{hi} must satisfy 1 ≤ lo ≤ hi")))
            }
            BitSpec::UniformRandom { .. } => Ok(()),
            BitSpec::Mixed(groups) => {
                let total: usize = groups.iter().map(|g| g.0).sum();
                if total != len {
                    return Err(Error::Validation(format!(
                        "{what} groups cover {total} converters but there are {len}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Resolves to one resolution per converter. Only the random variant
    /// consumes draws from `rng`.
    pub fn resolve(&self, len: usize, rng: &mut SeededRng) -> Vec<Resolution> {
        match self {
            BitSpec::Uniform(r) => vec![*r; len],
            BitSpec::Explicit(v) => v.clone(),
            BitSpec::UniformRandom { lo, hi } => (0..len).map(|_| Resolution::Bits(rng.uniform_int(*lo, *hi))).collect(),
            BitSpec::Mixed(groups) => groups.iter().flat_map(|&(c, r)| std::iter::repeat_n(r, c)).collect(),
        }
    }

    fn from_value(v: &Value, what: &str) -> Result<Self> {
        match v {
            Value::Number(_) => Ok(BitSpec::Uniform(resolution_from_value(v, what)?)),
            Value::Array(items) => Ok(BitSpec::Explicit(
                items.iter().map(|x| resolution_from_value(x, what)).collect::<Result<_>>()?,
            )),
            Value::String(s) => s.parse().map_err(|e: Error| Error::Validation(format!("{what}: {e}"))),
            _ => Err(Error::Validation(format!(
                "{what} must be a number, \"inf\", an array or a pattern string"
            ))),
        }
    }
}

fn resolution_from_value(v: &Value, what: &str) -> Result<Resolution> {
    match v {
        Value::Number(n) => {
            let b = n
                .as_i64()
                .ok_or_else(|| Error::Validation(format!("{what}: resolution {n} is not an integer")))?;
            Resolution::bits(b)
        }
        Value::String(s) => parse_resolution(s),
        other => Err(Error::Validation(format!("{what}: {other} is not a resolution"))),
    }
}

fn parse_resolution(s: &str) -> Result<Resolution> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") {
        return Ok(Resolution::Infinite);
    }
    let b: i64 = s
        .parse()
        .map_err(|_| Error::Validation(format!("{s:?} is not a bit count or \"inf\"")))?;
    Resolution::bits(b)
}

impl FromStr for BitSpec {
    type Err = Error;

    /// Accepts `"inf"`, `"6"`, `"uniform-random 2..8"` and
    /// `"mixed 3@3 + 1@8"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("uniform-random") {
            let (lo, hi) = rest
                .trim()
                .split_once("..")
                .ok_or_else(|| Error::Validation(format!("expected \"uniform-random lo..hi\", got {s:?}")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Validation(format!("bad bound {t:?} in {s:?}")))
            };
            return Ok(BitSpec::UniformRandom {
                lo: parse(lo)?,
                hi: parse(hi)?,
            });
        }
        if let Some(rest) = s.strip_prefix("mixed") {
            let groups = rest
                .split('+')
                .map(|g| {
                    let (count, bits) = g
                        .trim()
                        .split_once('@')
                        .ok_or_else(|| Error::Validation(format!("expected count@bits, got {:?}", g.trim())))?;
                    let count = count
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Validation(format!("bad count {count:?} in {s:?}")))?;
                    Ok((count, parse_resolution(bits)?))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(BitSpec::Mixed(groups));
        }
        Ok(BitSpec::Uniform(parse_resolution(s)?))
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub n: usize,
    pub k: usize,
    pub snr_db: Vec<f64>,
    pub dac_bits: BitSpec,
    pub adc_bits: BitSpec,
    pub channel_mode: AodMode,
    pub trials: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Shared by both GPI solvers; the stream mode is set per algorithm.
    pub solver: SolverOptions,
    pub angular_spread: f64,
    pub antenna_spacing: f64,
    /// RZF loading; `None` means `Kσ²/P`.
    pub rzf_regularizer: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    snr_db: Vec<f64>,
    #[serde(alias = "dac_bits_spec")]
    dac_bits: Value,
    #[serde(alias = "adc_bits_spec")]
    adc_bits: Value,
    channel_mode: AodMode,
    trials: usize,
    base_seed: u64,
    algorithms: Vec<Algorithm>,
    #[serde(default)]
    solver: RawSolver,
    angular_spread: Option<f64>,
    antenna_spacing: Option<f64>,
    rzf_regularizer: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    tau: f64,
    epsilon: f64,
    t_max: usize,
}

impl Default for RawSolver {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tau: d.tau,
            epsilon: d.epsilon,
            t_max: d.t_max,
        }
    }
}

/// Parses and validates a JSON experiment document.
pub fn load_spec(document: &str) -> Result<ExperimentSpec> {
    let raw: RawSpec = serde_json::from_str(document).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let spec = ExperimentSpec {
        n: raw.n,
        k: raw.k,
        snr_db: raw.snr_db,
        dac_bits: BitSpec::from_value(&raw.dac_bits, "dac_bits")?,
        adc_bits: BitSpec::from_value(&raw.adc_bits, "adc_bits")?,
        channel_mode: raw.channel_mode,
        trials: raw.trials,
        base_seed: raw.base_seed,
        algorithms: raw.algorithms,
        solver: SolverOptions {
            tau: raw.solver.tau,
            epsilon: raw.solver.epsilon,
            t_max: raw.solver.t_max,
            ..SolverOptions::default()
        },
        angular_spread: raw.angular_spread.unwrap_or(DEFAULT_ANGULAR_SPREAD),
        antenna_spacing: raw.antenna_spacing.unwrap_or(DEFAULT_ANTENNA_SPACING),
        rzf_regularizer: raw.rzf_regularizer,
    };
    spec.validate()?;
    Ok(spec)
}

/// Reads and parses a spec file; I/O failures surface as [`Error::Io`].
pub fn load_spec_file(path: impl AsRef<Path>) -> Result<ExperimentSpec> {
    load_spec(&std::fs::read_to_string(path)?)
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.n == 0 {
            return fail("N must be at least 1".into());
        }
        if self.k == 0 {
            return fail("K must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return fail("snr_db must not be empty".into());
        }
        if let Some(x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return fail(format!("snr_db entry {x} is not finite"));
        }
        if self.algorithms.is_empty() {
            return fail("algorithms must not be empty".into());
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return fail("algorithms contains duplicates".into());
        }
        self.dac_bits.validate(self.n, "dac_bits")?;
        self.adc_bits.validate(self.k, "adc_bits")?;
        self.channel_mode.validate(self.k)?;
        self.solver.validate().map_err(|e| Error::Validation(e.to_string()))?;
        if !(self.angular_spread > 0.0 && self.angular_spread <= std::f64::consts::PI) {
            return fail(format!("angular_spread {} must lie in (0, π]", self.angular_spread));
        }
        if !(self.antenna_spacing > 0.0 && self.antenna_spacing.is_finite()) {
            return fail(format!("antenna_spacing {} must be positive", self.antenna_spacing));
        }
        if let Some(l) = self.rzf_regularizer {
            if !(l >= 0.0 && l.is_finite()) {
                return fail(format!("rzf_regularizer {l} must be non-negative"));
            }
        }
        Ok(())
    }
}
