//! One-ring spatially correlated channels with Karhunen-Loeve sampling.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::quantization::QuantizerProfile;
use crate::rng::SeededRng;
use crate::scalar::{cr, cz, Real, C};

/// Eigenvalues below this fraction of the largest are dropped by default.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const QUAD_ABS_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: usize = 40;
const GL_ORDER: usize = 10;

/// Antenna positions in the plane, in units of the carrier wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 2]>,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Validation("array needs at least one antenna".into()));
        }
        if positions.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Validation("antenna positions must be finite".into()));
        }
        Ok(Self { positions })
    }

    /// Uniform linear array along the x axis.
    pub fn ula(n: usize, spacing: f64) -> Result<Self> {
        Self::new((0..n).map(|i| [i as f64 * spacing, 0.0]).collect())
    }

    pub fn num_antennas(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }
}

/// Angle of departure and angular spread of one user, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    pub aod: f64,
    pub spread: f64,
}

impl UserGeometry {
    pub fn new(aod: f64, spread: f64) -> Result<Self> {
        if !(spread > 0.0) {
            return Err(Error::Validation(format!("angular spread must be positive, got {spread}")));
        }
        if !(0.0..PI).contains(&aod) {
            return Err(Error::Validation(format!("angle of departure {aod} outside [0, π)")));
        }
        Ok(Self { aod, spread })
    }
}

fn gauss_legendre() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Three-term recurrence for P_n and its derivative.
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

fn gl_panel<T: Real>(f: &impl Fn(T) -> C<T>, a: T, b: T) -> C<T> {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    gauss_legendre()
        .iter()
        .fold(cz(), |acc, &(x, w)| acc + f(mid + half * T::lit(x)) * (half * T::lit(w)))
}

fn adaptive<T: Real>(f: &impl Fn(T) -> C<T>, a: T, b: T, whole: C<T>, tol: T, depth: usize) -> C<T> {
    let m = (a + b) * T::lit(0.5);
    let left = gl_panel(f, a, m);
    let right = gl_panel(f, m, b);
    let split = left + right;
    if depth >= QUAD_MAX_DEPTH || (split - whole).norm() <= tol {
        return split;
    }
    let half_tol = tol * T::lit(0.5);
    adaptive(f, a, m, left, half_tol, depth + 1) + adaptive(f, m, b, right, half_tol, depth + 1)
}

/// Adaptive Gauss-Legendre quadrature of a complex integrand on `[a, b]`.
pub fn integrate<T: Real>(f: impl Fn(T) -> C<T>, a: T, b: T) -> C<T> {
    let tol = T::lit(QUAD_ABS_TOL).max(T::epsilon() * T::lit(16.0));
    let whole = gl_panel(&f, a, b);
    adaptive(&f, a, b, whole, tol, 0)
}

/// One-ring spatial covariance:
/// `[R]_{n,m} = 1/(2Δ) ∫_{θ−Δ}^{θ+Δ} exp(−j2π Ψ(x)·(r_n − r_m)) dx`
/// with `Ψ(x) = (cos x, sin x)`.
pub fn one_ring_covariance<T: Real>(geom: &ArrayGeometry, user: &UserGeometry) -> CMatrix<T> {
    let n = geom.num_antennas();
    let mut r = CMatrix::zeros(n, n);
    let two_pi = T::lit(2.0 * PI);
    let lo = T::lit(user.aod - user.spread);
    let hi = T::lit(user.aod + user.spread);
    let norm = T::lit(2.0 * user.spread).recip();
    for i in 0..n {
        r[(i, i)] = cr(T::one());
        for j in (i + 1)..n {
            let dx = T::lit(geom.positions[i][0] - geom.positions[j][0]);
            let dy = T::lit(geom.positions[i][1] - geom.positions[j][1]);
            let entry = if dx == T::zero() && dy == T::zero() {
                cr(T::one())
            } else {
                integrate(
                    |x: T| {
                        let phase = -two_pi * (x.cos() * dx + x.sin() * dy);
                        C::new(phase.cos(), phase.sin())
                    },
                    lo,
                    hi,
                ) * norm
            };
            r[(i, j)] = entry;
            r[(j, i)] = entry.conj();
        }
    }
    r
}

/// Karhunen-Loeve factor `R ≈ U Λ Uᴴ` restricted to the numerical rank.
#[derive(Debug, Clone)]
pub struct KlFactor<T: Real> {
    pub covariance: CMatrix<T>,
    /// N×r orthonormal columns.
    pub basis: CMatrix<T>,
    /// r positive eigenvalues, descending.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> KlFactor<T> {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U Λ Uᴴ`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.basis.rows();
        CMatrix::from_fn(n, n, |i, j| {
            self.eigenvalues
                .iter()
                .enumerate()
                .fold(cz(), |acc, (r, &l)| acc + self.basis[(i, r)] * self.basis[(j, r)].conj() * l)
        })
    }
}

/// Eigen-factorizes a PSD covariance, keeping eigenvalues above
/// `rank_tol · λ_max`.
pub fn kl_factorize<T: Real>(r: &CMatrix<T>, rank_tol: T) -> Result<KlFactor<T>> {
    let eig = hermitian_eigen(r)?;
    let n = r.rows();
    let lmax = eig.values.first().copied().unwrap_or(T::zero());
    let keep: Vec<usize> = (0..n)
        .filter(|&i| lmax > T::zero() && eig.values[i] > rank_tol * lmax)
        .collect();
    let basis = CMatrix::from_fn(n, keep.len(), |i, c| eig.vectors[(i, keep[c])]);
    let eigenvalues = keep.iter().map(|&i| eig.values[i]).collect();
    Ok(KlFactor {
        covariance: r.clone(),
        basis,
        eigenvalues,
    })
}

/// One block-fading channel draw.
#[derive(Debug, Clone)]
pub struct ChannelRealization<T: Real> {
    /// N×K, column k is `h_k`.
    pub h: CMatrix<T>,
    pub covariances: Vec<CMatrix<T>>,
    pub ranks: Vec<usize>,
}

/// Draws `h_k = U_k Λ_k^{1/2} g_k` with fresh `g_k ~ CN(0, I)` per user.
pub fn sample_channel<T: Real>(factors: &[KlFactor<T>], rng: &mut SeededRng) -> Result<ChannelRealization<T>> {
    let n = factors
        .first()
        .map(|f| f.covariance.rows())
        .ok_or_else(|| Error::Validation("at least one user is required".into()))?;
    let mut columns = Vec::with_capacity(factors.len());
    for f in factors {
        if f.covariance.rows() != n {
            return Err(Error::DimensionMismatch("users disagree on antenna count".into()));
        }
        let g: Vec<C<T>> = rng.complex_gaussian_vec(f.rank());
        let weighted: Vec<C<T>> = g
            .iter()
            .zip(&f.eigenvalues)
            .map(|(&gi, &l)| gi * l.sqrt())
            .collect();
        columns.push(if f.rank() == 0 { vec![cz(); n] } else { f.basis.mul_vec(&weighted) });
    }
    Ok(ChannelRealization {
        h: CMatrix::from_columns(n, &columns),
        covariances: factors.iter().map(|f| f.covariance.clone()).collect(),
        ranks: factors.iter().map(KlFactor::rank).collect(),
    })
}

/// `h_eff_k = Φ_{α_DAC} h_k α_{ADC,k}`.
pub fn effective_channel<T: Real>(profile: &QuantizerProfile<T>, h: &CMatrix<T>) -> Result<CMatrix<T>> {
    profile.check_dims(h.rows(), h.cols())?;
    let a = profile.dac_alpha();
    let g = profile.adc_alpha();
    Ok(CMatrix::from_fn(h.rows(), h.cols(), |n, k| h[(n, k)] * (a[n] * g[k])))
}

/// How users' angles of departure are drawn per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AodMode {
    /// I.i.d. uniform on `[0, π)`.
    RandomAod,
    /// All pairwise differences within π/6.
    CorrelatedAod,
    /// Users spaced by a fixed angular difference (radians) around a random center.
    AngularSeparation(f64),
}

const CORRELATED_HALF_WIDTH: f64 = PI / 12.0;

impl AodMode {
    pub fn validate(&self, k: usize) -> Result<()> {
        if let AodMode::AngularSeparation(d) = *self {
            if !(d >= 0.0 && d.is_finite()) || d * (k.saturating_sub(1)) as f64 >= PI {
                return Err(Error::Validation(format!(
                    "angular separation {d} does not fit {k} users in [0, π)"
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, k: usize, rng: &mut SeededRng) -> Vec<f64> {
        match *self {
            AodMode::RandomAod => (0..k).map(|_| rng.uniform(0.0, PI)).collect(),
            AodMode::CorrelatedAod => {
                let center = rng.uniform(CORRELATED_HALF_WIDTH, PI - CORRELATED_HALF_WIDTH);
                (0..k)
                    .map(|_| center + rng.uniform(-CORRELATED_HALF_WIDTH, CORRELATED_HALF_WIDTH))
                    .collect()
            }
            AodMode::AngularSeparation(d) => {
                let span = d * (k.saturating_sub(1)) as f64;
                let start = rng.uniform(0.0, PI - span);
                (0..k).map(|i| start + d * i as f64).collect()
            }
        }
    }
}

/// Per-trial channel generator: draw AoDs, build one-ring covariances,
/// factorize and sample.
#[derive(Debug, Clone)]
pub struct OneRingModel {
    pub geometry: ArrayGeometry,
    pub spread: f64,
    pub mode: AodMode,
}

impl OneRingModel {
    pub fn sample<T: Real>(&self, k: usize, rng: &mut SeededRng) -> Result<ChannelRealization<T>> {
        let aods = self.mode.sample(k, rng);
        let factors = aods
            .iter()
            .map(|&aod| {
                let user = UserGeometry::new(aod, self.spread)?;
                kl_factorize(&one_ring_covariance::<T>(&self.geometry, &user), T::lit(DEFAULT_RANK_TOL))
            })
            .collect::<Result<Vec<_>>>()?;
        sample_channel(&factors, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};

    type Z = C<f64>;

    #[test]
    fn diagonal_is_exactly_one_and_matrix_hermitian() {
        let geom = ArrayGeometry::ula(6, 0.5).unwrap();
        let r = one_ring_covariance::<f64>(&geom, &UserGeometry::new(1.0, PI / 6.0).unwrap());
        for i in 0..6 {
            assert_eq!(r[(i, i)], Z::new(1.0, 0.0));
        }
        assert!(r.is_hermitian(1e-12));
        let eig = hermitian_eigen(&r).unwrap();
        assert!(*eig.values.last().unwrap() >= -1e-9);
    }

    #[test]
    fn coincident_antennas_give_all_ones() {
        let geom = ArrayGeometry::new(vec![[0.3, 0.1]; 3]).unwrap();
        let r = one_ring_covariance::<f64>(&geom, &UserGeometry::new(0.4, 0.2).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r[(i, j)], Z::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn quadrature_integrates_polynomial_exactly() {
        let v = integrate(|x: f64| Z::new(x.powi(5), -x * x), -1.0, 2.0);
        assert!((v.re - (64.0 - 1.0) / 6.0).abs() < 1e-12);
        assert!((v.im + 3.0).abs() < 1e-12);
    }

    #[test]
    fn kl_identity_and_rank_one() {
        let f = kl_factorize(&CMatrix::<f64>::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.rank(), 3);
        assert!(f.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));

        let a = vec![Z::new(1.0, 1.0), Z::new(0.0, -2.0), Z::new(0.5, 0.0)];
        let r = CMatrix::from_fn(3, 3, |i, j| a[i] * a[j].conj());
        let f = kl_factorize(&r, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.eigenvalues[0] - dot(&a, &a).re).abs() < 1e-12);
        let diff = &f.reconstruct() - &r;
        assert!(diff.frobenius_norm() < 1e-12);
    }

    #[test]
    fn rank_tolerance_can_exclude_everything() {
        let f = kl_factorize(&CMatrix::<f64>::identity(2), 1.0).unwrap();
        assert_eq!(f.rank(), 0);
        let ch = sample_channel(&[f.clone(), f], &mut SeededRng::new(1)).unwrap();
        assert_eq!(ch.h, CMatrix::zeros(2, 2));
    }

    #[test]
    fn sampling_is_deterministic_and_in_column_space() {
        let geom = ArrayGeometry::ula(4, 0.5).unwrap();
        let model = OneRingModel {
            geometry: geom,
            spread: PI / 6.0,
            mode: AodMode::RandomAod,
        };
        let a: ChannelRealization<f64> = model.sample(2, &mut SeededRng::new(9)).unwrap();
        let b: ChannelRealization<f64> = model.sample(2, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a.h, b.h);

        // Narrow spread gives a rank-deficient covariance; h_k must live in span(U_k).
        let r = one_ring_covariance::<f64>(&ArrayGeometry::ula(6, 0.5).unwrap(), &UserGeometry::new(0.3, 0.05).unwrap());
        let f = kl_factorize(&r, 1e-6).unwrap();
        assert!(f.rank() < 6);
        let ch = sample_channel(std::slice::from_ref(&f), &mut SeededRng::new(4)).unwrap();
        let h = ch.h.col(0);
        let proj: Vec<Z> = (0..f.rank()).map(|c| dot(&f.basis.col(c), &h)).collect();
        let back = f.basis.mul_vec(&proj);
        assert!(norm(&crate::linalg::sub_vec(&h, &back)) < 1e-12 * norm(&h).max(1.0));
    }

    #[test]
    fn effective_channel_examples() {
        let p = QuantizerProfile::<f64>::perfect(2, 2);
        let h = CMatrix::from_fn(2, 2, |i, j| Z::new(i as f64, j as f64 + 1.0));
        assert_eq!(effective_channel(&p, &h).unwrap(), h);

        let p = QuantizerProfile::<f64>::from_gains(vec![0.5, 1.0], vec![0.5]).unwrap();
        let h = CMatrix::from_fn(2, 1, |_, _| Z::new(1.0, 0.0));
        let e = effective_channel(&p, &h).unwrap();
        assert_eq!(e.col(0), vec![Z::new(0.25, 0.0), Z::new(0.5, 0.0)]);

        assert!(effective_channel(&p, &CMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn aod_modes_respect_their_ranges() {
        let mut rng = SeededRng::new(3);
        for _ in 0..500 {
            let r = AodMode::RandomAod.sample(4, &mut rng);
            assert!(r.iter().all(|&t| (0.0..PI).contains(&t)));
            let c = AodMode::CorrelatedAod.sample(4, &mut rng);
            let spread = c.iter().cloned().fold(f64::MIN, f64::max) - c.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread <= PI / 6.0);
            assert!(c.iter().all(|&t| (0.0..PI).contains(&t)));
            let s = AodMode::AngularSeparation(PI / 4.0).sample(3, &mut rng);
            assert!((s[1] - s[0] - PI / 4.0).abs() < 1e-12);
            assert!(s.iter().all(|&t| (0.0..PI).contains(&t)));
        }
        assert!(AodMode::AngularSeparation(PI / 2.0).validate(3).is_err());
    }

    #[test]
    fn user_geometry_validation() {
        assert!(UserGeometry::new(0.1, 0.0).is_err());
        assert!(UserGeometry::new(PI, 0.1).is_err());
    }
}
