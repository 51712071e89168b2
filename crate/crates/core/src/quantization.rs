//! Additive quantization noise model (AQNM) for the transmit DACs and the
//! receive ADCs.
//!
//! A `b`-bit converter is linearized as `α·x + q` with `q` Gaussian and
//! uncorrelated with `x`. The normalized distortion `β = 1 − α` comes from the
//! optimal (Lloyd-Max) scalar quantizer MSE of a unit-variance Gaussian for
//! `b ≤ 5` and from `π√3/2 · 2^{−2b}` above that.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cr, Real};

/// Lloyd-Max normalized MSE for 1..=5 bits.
const BETA_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// Converter resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    Bits(u32),
    Infinite,
}

impl Resolution {
    pub fn bits(b: i64) -> Result<Self> {
        if b <= 0 {
            return Err(Error::InvalidResolution(b));
        }
        u32::try_from(b)
            .map(Resolution::Bits)
            .map_err(|_| Error::InvalidResolution(b))
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Infinite => f.write_str("inf"),
        }
    }
}

/// Normalized quantization MSE `β` for a converter of resolution `b`.
pub fn beta_of_bits(b: Resolution) -> Result<f64> {
    match b {
        Resolution::Infinite => Ok(0.0),
        Resolution::Bits(0) => Err(Error::InvalidResolution(0)),
        Resolution::Bits(b @ 1..=5) => Ok(BETA_TABLE[b as usize - 1]),
        Resolution::Bits(b) => {
            let sqrt3 = 3f64.sqrt();
            Ok(std::f64::consts::PI * sqrt3 / 2.0 * (-2.0 * b as f64).exp2())
        }
    }
}

/// Per-antenna DAC and per-user ADC quantization gains.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerProfile<T: Real> {
    dac_bits: Option<Vec<Resolution>>,
    adc_bits: Option<Vec<Resolution>>,
    dac_alpha: Vec<T>,
    dac_beta: Vec<T>,
    adc_alpha: Vec<T>,
    adc_beta: Vec<T>,
}

fn split_gains<T: Real>(bits: &[Resolution]) -> Result<(Vec<T>, Vec<T>)> {
    let mut alpha = Vec::with_capacity(bits.len());
    let mut beta = Vec::with_capacity(bits.len());
    for &b in bits {
        let a = T::one() - T::lit(beta_of_bits(b)?);
        // α ≥ 1/2, so 1 − α is exact and α + β == 1 holds bit for bit.
        alpha.push(a);
        beta.push(T::one() - a);
    }
    Ok((alpha, beta))
}

impl<T: Real> QuantizerProfile<T> {
    pub fn new(dac_bits: Vec<Resolution>, adc_bits: Vec<Resolution>) -> Result<Self> {
        let (dac_alpha, dac_beta) = split_gains(&dac_bits)?;
        let (adc_alpha, adc_beta) = split_gains(&adc_bits)?;
        Ok(Self {
            dac_bits: Some(dac_bits),
            adc_bits: Some(adc_bits),
            dac_alpha,
            dac_beta,
            adc_alpha,
            adc_beta,
        })
    }

    /// Same resolution on every antenna and every user.
    pub fn uniform(n: usize, k: usize, dac: Resolution, adc: Resolution) -> Result<Self> {
        Self::new(vec![dac; n], vec![adc; k])
    }

    /// No quantization anywhere (α = 1, β = 0).
    pub fn perfect(n: usize, k: usize) -> Self {
        Self::uniform(n, k, Resolution::Infinite, Resolution::Infinite)
            .expect("infinite resolution is always valid")
    }

    /// Profile with explicit gains; `β = 1 − α`. Every gain must lie in (0, 1].
    pub fn from_gains(dac_alpha: Vec<T>, adc_alpha: Vec<T>) -> Result<Self> {
        for &a in dac_alpha.iter().chain(&adc_alpha) {
            if !(a > T::zero() && a <= T::one()) {
                return Err(Error::InvalidProfile(format!("gain {a} outside (0, 1]")));
            }
        }
        let dac_beta = dac_alpha.iter().map(|&a| T::one() - a).collect();
        let adc_beta = adc_alpha.iter().map(|&a| T::one() - a).collect();
        Ok(Self {
            dac_bits: None,
            adc_bits: None,
            dac_alpha,
            dac_beta,
            adc_alpha,
            adc_beta,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.dac_alpha.len()
    }

    pub fn num_users(&self) -> usize {
        self.adc_alpha.len()
    }

    pub fn dac_bits(&self) -> Option<&[Resolution]> {
        self.dac_bits.as_deref()
    }

    pub fn adc_bits(&self) -> Option<&[Resolution]> {
        self.adc_bits.as_deref()
    }

    pub fn dac_alpha(&self) -> &[T] {
        &self.dac_alpha
    }

    pub fn dac_beta(&self) -> &[T] {
        &self.dac_beta
    }

    pub fn adc_alpha(&self) -> &[T] {
        &self.adc_alpha
    }

    pub fn adc_beta(&self) -> &[T] {
        &self.adc_beta
    }

    /// Diagonal of `Φ_{α_DAC}^{1/2}`.
    pub fn dac_alpha_sqrt(&self) -> Vec<T> {
        self.dac_alpha.iter().map(|a| a.sqrt()).collect()
    }

    pub fn is_perfect(&self) -> bool {
        self.dac_beta.iter().chain(&self.adc_beta).all(|&b| b == T::zero())
    }

    pub(crate) fn check_dims(&self, n: usize, k: usize) -> Result<()> {
        if self.num_antennas() != n || self.num_users() != k {
            return Err(Error::DimensionMismatch(format!(
                "profile is {}x{} (antennas x users), channel is {n}x{k}",
                self.num_antennas(),
                self.num_users()
            )));
        }
        Ok(())
    }
}

/// DAC noise covariance `Φ_α Φ_β diag(P F Fᴴ)`; diagonal and PSD.
pub fn dac_noise_covariance<T: Real>(profile: &QuantizerProfile<T>, f: &CMatrix<T>, power: T) -> Result<CMatrix<T>> {
    if f.rows() != profile.num_antennas() {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} rows, profile has {} antennas",
            f.rows(),
            profile.num_antennas()
        )));
    }
    let diag: Vec<T> = (0..f.rows())
        .map(|n| {
            let row_energy: T = f.row(n).iter().map(|z| z.norm_sqr()).sum();
            profile.dac_alpha[n] * profile.dac_beta[n] * power * row_energy
        })
        .collect();
    Ok(CMatrix::from_real_diagonal(&diag))
}

/// Covariance of the quantized transmit signal,
/// `E[x_q x_qᴴ] = P Φ_α F Fᴴ Φ_αᴴ + R_{q_DAC}`.
pub fn transmit_covariance<T: Real>(profile: &QuantizerProfile<T>, f: &CMatrix<T>, power: T) -> Result<CMatrix<T>> {
    let mut cov = dac_noise_covariance(profile, f, power)?;
    let n = f.rows();
    let a = &profile.dac_alpha;
    let ffh = f.matmul(&f.adjoint());
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] += ffh[(i, j)] * (power * a[i] * a[j]);
        }
    }
    Ok(cov)
}

/// ADC noise variance at user `k`,
/// `α_k β_k (P Σ_i f_iᴴ(Φ_α h_k h_kᴴ Φ_α + Φ_α Φ_β diag(h_k h_kᴴ)) f_i + σ²)`.
pub fn adc_noise_variance<T: Real>(
    profile: &QuantizerProfile<T>,
    k: usize,
    h: &CMatrix<T>,
    f: &CMatrix<T>,
    power: T,
    noise: T,
) -> Result<T> {
    profile.check_dims(h.rows(), h.cols())?;
    if k >= h.cols() {
        return Err(Error::InvalidUser {
            index: k,
            users: h.cols(),
        });
    }
    if f.rows() != h.rows() {
        return Err(Error::DimensionMismatch("precoder and channel row counts differ".into()));
    }
    let ab = profile.adc_alpha[k] * profile.adc_beta[k];
    if ab == T::zero() {
        return Ok(T::zero());
    }
    let hk = h.col(k);
    let a = &profile.dac_alpha;
    let b = &profile.dac_beta;
    let mut acc = T::zero();
    for i in 0..f.cols() {
        let mut coherent = cr(T::zero());
        let mut distortion = T::zero();
        for n in 0..f.rows() {
            let fin = f[(n, i)];
            coherent += hk[n].conj() * fin * a[n];
            distortion += a[n] * b[n] * hk[n].norm_sqr() * fin.norm_sqr();
        }
        acc += coherent.norm_sqr() + distortion;
    }
    Ok(ab * (power * acc + noise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;

    #[test]
    fn beta_values() {
        assert_eq!(beta_of_bits(Resolution::Infinite).unwrap(), 0.0);
        let b6 = beta_of_bits(Resolution::Bits(6)).unwrap();
        assert!((b6 - 6.6423e-4).abs() < 1e-8, "{b6}");
        assert_eq!(beta_of_bits(Resolution::Bits(1)).unwrap(), 0.3634);
        assert_eq!(beta_of_bits(Resolution::Bits(5)).unwrap(), 0.002499);
        assert!(matches!(Resolution::bits(0), Err(Error::InvalidResolution(0))));
        assert!(matches!(Resolution::bits(-3), Err(Error::InvalidResolution(-3))));
    }

    #[test]
    fn beta_monotone_and_bounded() {
        let mut prev = f64::INFINITY;
        for b in 1..=16 {
            let beta = beta_of_bits(Resolution::Bits(b)).unwrap();
            assert!(beta < prev && (0.0..=0.3634).contains(&beta));
            prev = beta;
        }
    }

    #[test]
    fn alpha_plus_beta_is_exactly_one() {
        let bits: Vec<Resolution> = (1..=12).map(Resolution::Bits).chain([Resolution::Infinite]).collect();
        let p = QuantizerProfile::<f64>::new(bits.clone(), bits).unwrap();
        for (a, b) in p.dac_alpha().iter().zip(p.dac_beta()) {
            assert_eq!(a + b, 1.0);
            assert!(*a > 0.6 && *a <= 1.0);
        }
        let p32 = QuantizerProfile::<f32>::uniform(3, 2, Resolution::Bits(3), Resolution::Bits(7)).unwrap();
        assert!(p32.adc_alpha().iter().zip(p32.adc_beta()).all(|(a, b)| a + b == 1.0));
    }

    #[test]
    fn perfect_dacs_produce_no_noise() {
        let p = QuantizerProfile::<f64>::perfect(3, 2);
        let f = CMatrix::from_fn(3, 3, |i, j| C::new(i as f64 + 1.0, j as f64));
        let r = dac_noise_covariance(&p, &f, 10.0).unwrap();
        assert_eq!(r, CMatrix::zeros(3, 3));
    }

    #[test]
    fn single_antenna_dac_noise() {
        let p = QuantizerProfile::<f64>::uniform(1, 0, Resolution::Bits(6), Resolution::Infinite).unwrap();
        let f = CMatrix::from_real_diagonal(&[1.0]);
        let r = dac_noise_covariance(&p, &f, 1.0).unwrap();
        assert!((r[(0, 0)].re - 6.638e-4).abs() < 1e-6);
    }

    #[test]
    fn adc_noise_example() {
        let p = QuantizerProfile::<f64>::new(vec![Resolution::Infinite], vec![Resolution::Bits(6)]).unwrap();
        let h = CMatrix::from_real_diagonal(&[1.0]);
        let f = CMatrix::from_row_major(1, 2, vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]).unwrap();
        let r = adc_noise_variance(&p, 0, &h, &f, 1.0, 1.0).unwrap();
        assert!((r - 1.3276e-3).abs() < 1e-6, "{r}");
        assert!(matches!(
            adc_noise_variance(&p, 1, &h, &f, 1.0, 1.0),
            Err(Error::InvalidUser { index: 1, users: 1 })
        ));
    }

    #[test]
    fn infinite_adc_gives_zero_variance() {
        let p = QuantizerProfile::<f64>::uniform(2, 1, Resolution::Bits(2), Resolution::Infinite).unwrap();
        let h = CMatrix::from_fn(2, 1, |i, _| C::new(1.0, i as f64));
        let f = CMatrix::from_fn(2, 2, |_, _| C::new(0.3, -0.2));
        assert_eq!(adc_noise_variance(&p, 0, &h, &f, 5.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let p = QuantizerProfile::<f64>::perfect(3, 2);
        assert!(matches!(
            dac_noise_covariance(&p, &CMatrix::zeros(2, 3), 1.0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn from_gains_validates() {
        assert!(QuantizerProfile::<f64>::from_gains(vec![0.0], vec![1.0]).is_err());
        assert!(QuantizerProfile::<f64>::from_gains(vec![1.2], vec![1.0]).is_err());
        let p = QuantizerProfile::<f64>::from_gains(vec![0.25, 1.0], vec![0.5]).unwrap();
        assert_eq!(p.dac_beta(), &[0.75, 0.0]);
        assert!(p.dac_bits().is_none());
    }
}
