//! Closed-form linear precoders on the effective channel (private streams only).

use serde::{Deserialize, Serialize};

use crate::channel::effective_channel;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_solve, norm, CMatrix};
use crate::quantization::QuantizerProfile;
use crate::rates::{check_power, Precoder};
use crate::scalar::{cr, cz, Real, C};

/// Linear baseline family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BaselineKind {
    Qmrt,
    Qzf,
    /// Regularized ZF; `None` picks `λ = Kσ²/P`.
    Qrzf(Option<f64>),
}

impl BaselineKind {
    pub fn regularizer(&self, k: usize, power: f64, noise: f64) -> Option<f64> {
        match *self {
            BaselineKind::Qrzf(Some(l)) => Some(l),
            BaselineKind::Qrzf(None) => Some(k as f64 * noise / power),
            _ => None,
        }
    }
}

/// `N×(K+1)` precoder with a zero common column and the private columns
/// chosen by `kind`, scaled so `tr(Φ_α F Fᴴ) = 1`.
pub fn baseline_precoder<T: Real>(
    kind: BaselineKind,
    h: &CMatrix<T>,
    profile: &QuantizerProfile<T>,
    power: T,
    noise: T,
) -> Result<Precoder<T>> {
    let heff = effective_channel(profile, h)?;
    let (n, k) = (heff.rows(), heff.cols());
    if heff.as_slice().iter().all(|z| *z == cz()) {
        return Err(Error::ZeroChannel);
    }
    let directions = match kind {
        BaselineKind::Qmrt => heff,
        BaselineKind::Qzf => {
            if k > n {
                return Err(Error::RankDeficient);
            }
            inverse_directions(&heff, T::zero())?
        }
        BaselineKind::Qrzf(_) => {
            let lambda = kind
                .regularizer(k, power.to_f64_lossy(), noise.to_f64_lossy())
                .unwrap_or_default();
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::InvalidOptions(format!("RZF regularizer must be non-negative, got {lambda}")));
            }
            if lambda == 0.0 && k > n {
                return Err(Error::RankDeficient);
            }
            inverse_directions(&heff, T::lit(lambda))?
        }
    };
    let scale = T::lit(k as f64).sqrt().recip();
    let mut f = CMatrix::zeros(n, k + 1);
    for j in 0..k {
        let col = directions.col(j);
        let nrm = norm(&col);
        if nrm == T::zero() {
            continue;
        }
        let s = cr(scale / nrm);
        f.set_col(j + 1, &col.iter().map(|&z| z * s).collect::<Vec<_>>());
    }
    normalize_power(f, profile)
}

/// Columns of `H (HᴴH + λI)⁻¹`.
fn inverse_directions<T: Real>(heff: &CMatrix<T>, lambda: T) -> Result<CMatrix<T>> {
    let mut gram = heff.adjoint().matmul(heff);
    gram.add_to_diagonal(lambda);
    let k = gram.rows();
    let mut inv_cols = Vec::with_capacity(k);
    for j in 0..k {
        let e: Vec<C<T>> = (0..k).map(|i| if i == j { cr(T::one()) } else { cz() }).collect();
        let x = hermitian_solve(&gram, &e).map_err(|err| match err {
            Error::SingularMatrix { .. } => Error::RankDeficient,
            other => other,
        })?;
        inv_cols.push(x);
    }
    Ok(heff.matmul(&CMatrix::from_columns(k, &inv_cols)))
}

/// Scales `F` so that `tr(Φ_α F Fᴴ) = 1`.
pub fn normalize_power<T: Real>(f: CMatrix<T>, profile: &QuantizerProfile<T>) -> Result<Precoder<T>> {
    if f.rows() != profile.num_antennas() {
        return Err(Error::DimensionMismatch("precoder rows differ from antenna count".into()));
    }
    let p = check_power(&f, profile);
    if p == T::zero() {
        return Err(Error::ZeroPrecoder);
    }
    if p == T::one() {
        return Precoder::new(f);
    }
    Precoder::new(f.scale_real(p.sqrt().recip()))
}
