//! Rayleigh-quotient forms of the per-user rates over the stacked weighted
//! precoder `w̄ = vec([w₀, w₁, …, w_K])`, `w_k = Φ_α^{1/2} f_k`.
//!
//! Every rate is `log₂(w̄ᴴA w̄ / w̄ᴴB w̄)` with block-diagonal `A`, `B` whose
//! blocks are all of the form `G_k + (σ²/P) I`, optionally minus the
//! rank-one term `E_k = α_{ADC,k} Φ_α^{1/2} h_k h_kᴴ Φ_α^{1/2}`. Only `G_k` and
//! `E_k` are stored; block matrices are assembled on demand.

use crate::error::{Error, Result};
use crate::linalg::{dot, BlockDiag, CMatrix};
use crate::quantization::QuantizerProfile;
use crate::rates::{lse_min, lse_weights};
use crate::scalar::{Real, C};

use serde::{Deserialize, Serialize};

/// Whether a common stream is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamMode {
    /// Rate splitting: common stream in block 0, private stream k in block k+1.
    Rsma,
    /// Private streams only: stream k in block k.
    Sdma,
}

/// Quadratic-form data for one channel/quantizer/SNR instance.
#[derive(Debug, Clone)]
pub struct QuadraticForms<T: Real> {
    mode: StreamMode,
    n: usize,
    /// σ²/P
    inv_snr: T,
    /// `G_k = Φ_α^{1/2} h_k h_kᴴ Φ_α^{1/2} + Φ_β diag(h_k h_kᴴ)`
    g: Vec<CMatrix<T>>,
    /// `Φ_α^{1/2} h_k`
    h_weighted: Vec<Vec<C<T>>>,
    adc_alpha: Vec<T>,
    dac_alpha_sqrt: Vec<T>,
}

/// Quadratic values `w̄ᴴ M w̄` of every form at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValues<T: Real> {
    /// Common stream numerators / denominators (empty for SDMA).
    pub common_num: Vec<T>,
    pub common_den: Vec<T>,
    pub private_num: Vec<T>,
    pub private_den: Vec<T>,
}

impl<T: Real> FormValues<T> {
    pub fn common_rates(&self) -> Vec<T> {
        self.common_num
            .iter()
            .zip(&self.common_den)
            .map(|(&a, &b)| (a / b).log2())
            .collect()
    }

    pub fn private_rates(&self) -> Vec<T> {
        self.private_num
            .iter()
            .zip(&self.private_den)
            .map(|(&a, &b)| (a / b).log2())
            .collect()
    }
}

impl<T: Real> QuadraticForms<T> {
    /// Forms for channel `h` (N×K) under `profile` at transmit power `power`
    /// and noise variance `noise`.
    pub fn new(h: &CMatrix<T>, profile: &QuantizerProfile<T>, power: T, noise: T, mode: StreamMode) -> Result<Self> {
        profile.check_dims(h.rows(), h.cols())?;
        if h.cols() == 0 {
            return Err(Error::DimensionMismatch("at least one user is required".into()));
        }
        if profile.dac_alpha().iter().any(|&a| a <= T::zero()) {
            return Err(Error::InvalidProfile("DAC gains must be positive".into()));
        }
        if !(power > T::zero()) {
            return Err(Error::Validation("transmit power must be positive".into()));
        }
        let n = h.rows();
        let sqrt_a = profile.dac_alpha_sqrt();
        let beta = profile.dac_beta();
        let mut g = Vec::with_capacity(h.cols());
        let mut h_weighted = Vec::with_capacity(h.cols());
        for k in 0..h.cols() {
            let hk = h.col(k);
            let hw: Vec<C<T>> = hk.iter().zip(&sqrt_a).map(|(&z, &s)| z * s).collect();
            let mut gk = CMatrix::from_fn(n, n, |i, j| hw[i] * hw[j].conj());
            for i in 0..n {
                gk[(i, i)].re += beta[i] * hk[i].norm_sqr();
            }
            g.push(gk);
            h_weighted.push(hw);
        }
        Ok(Self {
            mode,
            n,
            inv_snr: noise / power,
            g,
            h_weighted,
            adc_alpha: profile.adc_alpha().to_vec(),
            dac_alpha_sqrt: sqrt_a,
        })
    }

    /// Forms without any quantization model: `G_k = h_k h_kᴴ`, unit gains.
    pub fn unquantized(h: &CMatrix<T>, power: T, noise: T, mode: StreamMode) -> Result<Self> {
        if h.cols() == 0 {
            return Err(Error::DimensionMismatch("at least one user is required".into()));
        }
        if !(power > T::zero()) {
            return Err(Error::Validation("transmit power must be positive".into()));
        }
        let n = h.rows();
        let k = h.cols();
        let h_weighted: Vec<Vec<C<T>>> = (0..k).map(|c| h.col(c)).collect();
        let g = h_weighted
            .iter()
            .map(|hk| CMatrix::from_fn(n, n, |i, j| hk[i] * hk[j].conj()))
            .collect();
        Ok(Self {
            mode,
            n,
            inv_snr: noise / power,
            g,
            h_weighted,
            adc_alpha: vec![T::one(); k],
            dac_alpha_sqrt: vec![T::one(); n],
        })
    }

    pub fn mode(&self) -> StreamMode {
        self.mode
    }

    pub fn num_antennas(&self) -> usize {
        self.n
    }

    pub fn num_users(&self) -> usize {
        self.g.len()
    }

    pub fn num_blocks(&self) -> usize {
        match self.mode {
            StreamMode::Rsma => self.num_users() + 1,
            StreamMode::Sdma => self.num_users(),
        }
    }

    /// Length of the stacked precoder.
    pub fn dim(&self) -> usize {
        self.n * self.num_blocks()
    }

    pub fn g(&self, k: usize) -> &CMatrix<T> {
        &self.g[k]
    }

    pub fn inv_snr(&self) -> T {
        self.inv_snr
    }

    pub fn dac_alpha_sqrt(&self) -> &[T] {
        &self.dac_alpha_sqrt
    }

    /// Block index carrying user `k`'s private stream.
    pub fn private_block(&self, k: usize) -> usize {
        match self.mode {
            StreamMode::Rsma => k + 1,
            StreamMode::Sdma => k,
        }
    }

    /// `E_k`.
    pub fn rank_one(&self, k: usize) -> CMatrix<T> {
        let hw = &self.h_weighted[k];
        CMatrix::from_fn(self.n, self.n, |i, j| hw[i] * hw[j].conj() * self.adc_alpha[k])
    }

    fn check_len(&self, w: &[C<T>]) {
        assert_eq!(w.len(), self.dim(), "stacked precoder has the wrong length");
    }

    /// `w̄ᴴ A w̄` and `w̄ᴴ B w̄` for every common and private form.
    pub fn values(&self, w: &[C<T>]) -> FormValues<T> {
        self.check_len(w);
        let n = self.n;
        let nb = self.num_blocks();
        let ww: T = w.iter().map(|z| z.norm_sqr()).sum();
        let shift = self.inv_snr * ww;
        let k_users = self.num_users();
        let mut out = FormValues {
            common_num: Vec::new(),
            common_den: Vec::new(),
            private_num: Vec::with_capacity(k_users),
            private_den: Vec::with_capacity(k_users),
        };
        for k in 0..k_users {
            let mut total = T::zero();
            let mut e = Vec::with_capacity(nb);
            for j in 0..nb {
                let wj = &w[j * n..(j + 1) * n];
                total += dot(wj, &self.g[k].mul_vec(wj)).re;
                e.push(self.adc_alpha[k] * dot(&self.h_weighted[k], wj).norm_sqr());
            }
            let base = total + shift;
            let pb = self.private_block(k);
            match self.mode {
                StreamMode::Rsma => {
                    out.common_num.push(base);
                    out.common_den.push(base - e[0]);
                    let den = base - e[0] - e[pb];
                    out.private_num.push(den + e[pb]);
                    out.private_den.push(den);
                }
                StreamMode::Sdma => {
                    out.private_num.push(base);
                    out.private_den.push(base - e[pb]);
                }
            }
        }
        out
    }

    /// Smoothed sum rate in bits/s/Hz: LogSumExp minimum of the common
    /// rates plus the private rates. Invariant to scaling of `w`.
    pub fn objective(&self, w: &[C<T>], tau: T) -> T {
        let v = self.values(w);
        let private: T = v.private_rates().into_iter().sum();
        match self.mode {
            StreamMode::Rsma => lse_min(&v.common_rates(), tau) + private,
            StreamMode::Sdma => private,
        }
    }

    /// Sum rate with the exact minimum over common rates.
    pub fn exact_sum_rate(&self, w: &[C<T>]) -> T {
        let v = self.values(w);
        let private: T = v.private_rates().into_iter().sum();
        let common = v.common_rates().into_iter().fold(T::infinity(), T::min);
        match self.mode {
            StreamMode::Rsma => common + private,
            StreamMode::Sdma => private,
        }
    }

    fn assemble(&self, coef_g: &[T], coef_shift: T, minus_e: &[Vec<(usize, T)>]) -> BlockDiag<T> {
        // Block j = Σ_k coef_g[k]·G_k + coef_shift·I − Σ_{(k,c) ∈ minus_e[j]} c·E_k
        let n = self.n;
        let mut base = CMatrix::zeros(n, n);
        for (k, &c) in coef_g.iter().enumerate() {
            base.add_scaled(c, &self.g[k]);
        }
        base.add_to_diagonal(coef_shift);
        let mut out = BlockDiag::zeros(n, self.num_blocks());
        for (j, terms) in minus_e.iter().enumerate() {
            let mut blk = base.clone();
            for &(k, c) in terms {
                let hw = &self.h_weighted[k];
                let s = c * self.adc_alpha[k];
                for r in 0..n {
                    for q in 0..n {
                        blk[(r, q)] -= hw[r] * hw[q].conj() * s;
                    }
                }
            }
            *out.block_mut(j) = blk;
        }
        out
    }

    /// Common-stream pencil `(A_{c,k}, B_{c,k})` of user `k` (RSMA only).
    pub fn common_pencil(&self, k: usize) -> (BlockDiag<T>, BlockDiag<T>) {
        assert_eq!(self.mode, StreamMode::Rsma, "SDMA has no common stream");
        let mut coef = vec![T::zero(); self.num_users()];
        coef[k] = T::one();
        let nb = self.num_blocks();
        let none = vec![Vec::new(); nb];
        let mut sub = vec![Vec::new(); nb];
        sub[0].push((k, T::one()));
        (self.assemble(&coef, self.inv_snr, &none), self.assemble(&coef, self.inv_snr, &sub))
    }

    /// Private-stream pencil `(A_k, B_k)` of user `k`.
    pub fn private_pencil(&self, k: usize) -> (BlockDiag<T>, BlockDiag<T>) {
        let mut coef = vec![T::zero(); self.num_users()];
        coef[k] = T::one();
        let nb = self.num_blocks();
        let pb = self.private_block(k);
        let mut a_sub = vec![Vec::new(); nb];
        let mut b_sub = vec![Vec::new(); nb];
        if self.mode == StreamMode::Rsma {
            a_sub[0].push((k, T::one()));
            b_sub[0].push((k, T::one()));
        }
        b_sub[pb].push((k, T::one()));
        (self.assemble(&coef, self.inv_snr, &a_sub), self.assemble(&coef, self.inv_snr, &b_sub))
    }

    /// Softmax weights on the common rates at `w` (empty for SDMA).
    pub fn common_weights(&self, w: &[C<T>], tau: T) -> Vec<T> {
        match self.mode {
            StreamMode::Rsma => lse_weights(&self.values(w).common_rates(), tau),
            StreamMode::Sdma => Vec::new(),
        }
    }

    /// First-order optimality pencil at `w`:
    /// `Ā = Σ_k μ_k A_{c,k}/(w̄ᴴA_{c,k}w̄) + A_k/(w̄ᴴA_k w̄)` and `B̄` likewise,
    /// with `μ` the softmax weights of the common rates. Stationary points
    /// satisfy `Ā w̄ = B̄ w̄`; the gradient of the objective with respect to
    /// `w̄*` is `(Ā − B̄) w̄ / ln 2`.
    pub fn kkt_matrices(&self, w: &[C<T>], tau: T) -> (BlockDiag<T>, BlockDiag<T>) {
        let v = self.values(w);
        let k_users = self.num_users();
        let nb = self.num_blocks();
        let mut ga = vec![T::zero(); k_users];
        let mut gb = vec![T::zero(); k_users];
        let mut a_sub = vec![Vec::new(); nb];
        let mut b_sub = vec![Vec::new(); nb];
        let mu = match self.mode {
            StreamMode::Rsma => lse_weights(&v.common_rates(), tau),
            StreamMode::Sdma => Vec::new(),
        };
        for k in 0..k_users {
            let ap = v.private_num[k].recip();
            let bp = v.private_den[k].recip();
            ga[k] += ap;
            gb[k] += bp;
            let pb = self.private_block(k);
            b_sub[pb].push((k, bp));
            if self.mode == StreamMode::Rsma {
                let ac = mu[k] / v.common_num[k];
                let bc = mu[k] / v.common_den[k];
                ga[k] += ac;
                gb[k] += bc;
                a_sub[0].push((k, ap));
                b_sub[0].push((k, bc + bp));
            }
        }
        let sa: T = ga.iter().copied().sum::<T>() * self.inv_snr;
        let sb: T = gb.iter().copied().sum::<T>() * self.inv_snr;
        (self.assemble(&ga, sa, &a_sub), self.assemble(&gb, sb, &b_sub))
    }
}

/// Convenience constructor for rate-splitting forms.
pub fn build_forms<T: Real>(h: &CMatrix<T>, profile: &QuantizerProfile<T>, power: T, noise: T) -> Result<QuadraticForms<T>> {
    QuadraticForms::new(h, profile, power, noise, StreamMode::Rsma)
}

/// Objective of the smoothed problem at `w`.
pub fn objective<T: Real>(forms: &QuadraticForms<T>, w: &[C<T>], tau: T) -> T {
    forms.objective(w, tau)
}

/// KKT pencil at `w`.
pub fn kkt_matrices<T: Real>(forms: &QuadraticForms<T>, w: &[C<T>], tau: T) -> (BlockDiag<T>, BlockDiag<T>) {
    forms.kkt_matrices(w, tau)
}
