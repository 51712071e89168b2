//! Quantization-aware rate-splitting precoding for the multiuser MIMO downlink.
//!
//! Transmit DACs and receive ADCs are modelled with the additive
//! quantization noise model. The main solver, [`gpi::qgpi_rs_solve`],
//! maximizes a smoothed sum spectral efficiency of a common stream plus
//! per-user private streams by generalized power iteration. Linear
//! baselines and a Monte Carlo harness sit on top.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod gpi;
pub mod harness;
pub mod linalg;
pub mod quantization;
pub mod rates;
pub mod rng;
pub mod scalar;

pub use baselines::{baseline_precoder, normalize_power, BaselineKind};
pub use channel::{effective_channel, one_ring_covariance, AodMode, ArrayGeometry, OneRingModel, UserGeometry};
pub use error::{Error, Result};
pub use gpi::{gpi_sem_solve, gpi_solve, qgpi_rs_solve, SolveResult, SolverOptions, StackedPrecoder, StreamMode};
pub use linalg::{BlockDiag, CMatrix};
pub use quantization::{beta_of_bits, QuantizerProfile, Resolution};
pub use rates::{check_power, rate_report, sinr_common, sinr_private, Precoder, RateReport};
pub use rng::SeededRng;
pub use scalar::{Real, C};

pub type CMatrix64 = CMatrix<f64>;
pub type CMatrix32 = CMatrix<f32>;
pub type BlockDiag64 = BlockDiag<f64>;
pub type BlockDiag32 = BlockDiag<f32>;
pub type QuantizerProfile64 = QuantizerProfile<f64>;
pub type QuantizerProfile32 = QuantizerProfile<f32>;
pub type Precoder64 = Precoder<f64>;
pub type Precoder32 = Precoder<f32>;
pub type RateReport64 = RateReport<f64>;
pub type RateReport32 = RateReport<f32>;
pub type SolveResult64 = SolveResult<f64>;
pub type SolveResult32 = SolveResult<f32>;
