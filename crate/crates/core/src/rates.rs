//! SINR and spectral-efficiency evaluation for the common and private
//! streams under DAC/ADC quantization.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quantization::QuantizerProfile;
use crate::scalar::{cz, Real, C};

/// Linear precoder `F = [f₀, f₁, …, f_K]`; column 0 carries the common stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder<T: Real> {
    f: CMatrix<T>,
}

impl<T: Real> Precoder<T> {
    /// Wraps an N×(K+1) matrix. Entries must be finite.
    pub fn new(f: CMatrix<T>) -> Result<Self> {
        if f.cols() == 0 {
            return Err(Error::DimensionMismatch("precoder needs at least the common column".into()));
        }
        if !f.is_finite() {
            return Err(Error::Validation("precoder has non-finite entries".into()));
        }
        Ok(Self { f })
    }

    /// Builds `[f₀ | private]` from a common vector and an N×K private block.
    pub fn from_parts(common: &[C<T>], private: &CMatrix<T>) -> Result<Self> {
        if common.len() != private.rows() {
            return Err(Error::DimensionMismatch("common precoder length differs from antenna count".into()));
        }
        let f = CMatrix::from_fn(private.rows(), private.cols() + 1, |n, j| {
            if j == 0 {
                common[n]
            } else {
                private[(n, j - 1)]
            }
        });
        Self::new(f)
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.f
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.f
    }

    pub fn num_antennas(&self) -> usize {
        self.f.rows()
    }

    pub fn num_users(&self) -> usize {
        self.f.cols() - 1
    }

    pub fn common(&self) -> Vec<C<T>> {
        self.f.col(0)
    }

    pub fn private(&self, k: usize) -> Vec<C<T>> {
        self.f.col(k + 1)
    }
}

/// Achievable rates of one precoder, in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T: Real> {
    pub common_sinrs: Vec<T>,
    pub common_rates: Vec<T>,
    /// Exact minimum of `common_rates`.
    pub common_rate: T,
    pub private_sinrs: Vec<T>,
    pub private_rates: Vec<T>,
    pub sum_se: T,
}

struct UserTerms<T: Real> {
    /// `|h_kᴴ Φ_α f_i|²` for i = 0..=K.
    coherent: Vec<T>,
    /// `Σ_i f_iᴴ Φ_α Φ_β diag(h_k h_kᴴ) f_i`.
    distortion: T,
}

fn check_inputs<T: Real>(h: &CMatrix<T>, f: &CMatrix<T>, profile: &QuantizerProfile<T>, k: usize) -> Result<()> {
    profile.check_dims(h.rows(), h.cols())?;
    if f.rows() != h.rows() || f.cols() != h.cols() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "precoder is {}x{}, expected {}x{}",
            f.rows(),
            f.cols(),
            h.rows(),
            h.cols() + 1
        )));
    }
    if k >= h.cols() {
        return Err(Error::InvalidUser {
            index: k,
            users: h.cols(),
        });
    }
    Ok(())
}

fn user_terms<T: Real>(k: usize, h: &CMatrix<T>, f: &CMatrix<T>, profile: &QuantizerProfile<T>) -> UserTerms<T> {
    let a = profile.dac_alpha();
    let b = profile.dac_beta();
    let mut coherent = Vec::with_capacity(f.cols());
    let mut distortion = T::zero();
    for i in 0..f.cols() {
        let mut acc: C<T> = cz();
        for n in 0..f.rows() {
            let hn = h[(n, k)];
            let fin = f[(n, i)];
            acc += hn.conj() * fin * a[n];
            distortion += a[n] * b[n] * hn.norm_sqr() * fin.norm_sqr();
        }
        coherent.push(acc.norm_sqr());
    }
    UserTerms { coherent, distortion }
}

fn ratio<T: Real>(num: T, den: T) -> T {
    if num == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

/// SINR of the common stream at user `k`:
/// `α_k|h_kᴴΦ_α f₀|² / (Σ_i|h_kᴴΦ_α f_i|² − α_k|h_kᴴΦ_α f₀|² + Σ_i f_iᴴΦ_αΦ_β diag(h_k h_kᴴ) f_i + σ²/P)`.
pub fn sinr_common<T: Real>(
    k: usize,
    h: &CMatrix<T>,
    f: &CMatrix<T>,
    profile: &QuantizerProfile<T>,
    power: T,
    noise: T,
) -> Result<T> {
    check_inputs(h, f, profile, k)?;
    Ok(common_from_terms(&user_terms(k, h, f, profile), profile.adc_alpha()[k], noise / power))
}

/// SINR of user `k`'s private stream after the common stream is removed.
pub fn sinr_private<T: Real>(
    k: usize,
    h: &CMatrix<T>,
    f: &CMatrix<T>,
    profile: &QuantizerProfile<T>,
    power: T,
    noise: T,
) -> Result<T> {
    check_inputs(h, f, profile, k)?;
    Ok(private_from_terms(&user_terms(k, h, f, profile), k, profile.adc_alpha()[k], noise / power))
}

fn common_from_terms<T: Real>(t: &UserTerms<T>, adc_alpha: T, inv_snr: T) -> T {
    let total: T = t.coherent.iter().copied().sum();
    let c0 = t.coherent[0];
    ratio(adc_alpha * c0, total - adc_alpha * c0 + t.distortion + inv_snr)
}

fn private_from_terms<T: Real>(t: &UserTerms<T>, k: usize, adc_alpha: T, inv_snr: T) -> T {
    let total: T = t.coherent.iter().copied().sum();
    let c0 = t.coherent[0];
    let ck = t.coherent[k + 1];
    ratio(adc_alpha * ck, total - adc_alpha * (ck + c0) + t.distortion + inv_snr)
}

/// Exact rates with the true minimum for the common stream.
pub fn rate_report<T: Real>(
    h: &CMatrix<T>,
    f: &CMatrix<T>,
    profile: &QuantizerProfile<T>,
    power: T,
    noise: T,
) -> Result<RateReport<T>> {
    let k_users = h.cols();
    if k_users == 0 {
        return Err(Error::DimensionMismatch("at least one user is required".into()));
    }
    check_inputs(h, f, profile, 0)?;
    let inv_snr = noise / power;
    let mut common_sinrs = Vec::with_capacity(k_users);
    let mut private_sinrs = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let t = user_terms(k, h, f, profile);
        let alpha = profile.adc_alpha()[k];
        common_sinrs.push(common_from_terms(&t, alpha, inv_snr));
        private_sinrs.push(private_from_terms(&t, k, alpha, inv_snr));
    }
    let rate = |g: &T| (T::one() + *g).log2();
    let common_rates: Vec<T> = common_sinrs.iter().map(rate).collect();
    let private_rates: Vec<T> = private_sinrs.iter().map(rate).collect();
    let common_rate = common_rates.iter().copied().fold(T::infinity(), T::min);
    let sum_se = common_rate + private_rates.iter().copied().sum::<T>();
    Ok(RateReport {
        common_sinrs,
        common_rates,
        common_rate,
        private_sinrs,
        private_rates,
        sum_se,
    })
}

/// `tr(Φ_α F Fᴴ)`; the quantized transmit power as a fraction of `P`.
pub fn check_power<T: Real>(f: &CMatrix<T>, profile: &QuantizerProfile<T>) -> T {
    antenna_loads(f, profile).into_iter().sum()
}

/// `α_n Σ_i |F_{n,i}|²` per antenna; multiply by `P` for watts.
pub fn antenna_loads<T: Real>(f: &CMatrix<T>, profile: &QuantizerProfile<T>) -> Vec<T> {
    (0..f.rows())
        .map(|n| profile.dac_alpha()[n] * f.row(n).iter().map(|z| z.norm_sqr()).sum::<T>())
        .collect()
}

/// Smooth minimum `−τ ln Σ exp(−x_i/τ)`, evaluated shifted by the true
/// minimum so tiny `τ` does not underflow.
pub fn lse_min<T: Real>(values: &[T], tau: T) -> T {
    assert!(!values.is_empty(), "lse_min of an empty list");
    assert!(tau > T::zero(), "lse_min needs a positive temperature");
    let m = values.iter().copied().fold(T::infinity(), T::min);
    let s: T = values.iter().map(|&x| (-(x - m) / tau).exp()).sum();
    m - tau * s.ln()
}

/// Softmax weights `exp(−x_k/τ) / Σ_ℓ exp(−x_ℓ/τ)`, the derivative of
/// [`lse_min`] with respect to each entry.
pub fn lse_weights<T: Real>(values: &[T], tau: T) -> Vec<T> {
    let m = values.iter().copied().fold(T::infinity(), T::min);
    let e: Vec<T> = values.iter().map(|&x| (-(x - m) / tau).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}
