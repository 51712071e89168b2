//! Generalized power iteration for quantization-aware precoding.
//!
//! The smoothed sum-rate objective is a sum of log Rayleigh quotients in
//! the stacked weighted precoder `w̄`. Its stationarity condition is the
//! nonlinear eigenproblem `B̄(w̄)⁻¹ Ā(w̄) w̄ = λ w̄`; the solver repeatedly
//! applies `B̄⁻¹Ā` at the current iterate and renormalizes. Both pencil
//! matrices are block diagonal, so each step costs `O(blocks · N³)`.

mod forms;

pub use forms::{build_forms, kkt_matrices, objective, FormValues, QuadraticForms, StreamMode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{blockdiag_solve, dot, fix_phase, norm, normalized, phase_aligned_distance, BlockDiag, CMatrix};
use crate::quantization::QuantizerProfile;
use crate::rates::Precoder;
use crate::scalar::{cr, cz, Real, C};

pub const DEFAULT_TAU: f64 = 0.3;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_T_MAX: usize = 500;

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// LogSumExp temperature for the common-rate minimum.
    pub tau: f64,
    /// Stop once consecutive iterates differ by at most this (phase aligned).
    pub epsilon: f64,
    pub t_max: usize,
    pub mode: StreamMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            epsilon: DEFAULT_EPSILON,
            t_max: DEFAULT_T_MAX,
            mode: StreamMode::Rsma,
        }
    }
}

impl SolverOptions {
    pub fn sdma(self) -> Self {
        Self {
            mode: StreamMode::Sdma,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidOptions(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidOptions(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidOptions("t_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Unit-norm stacked weighted precoder `vec([w₀, …, w_K])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedPrecoder<T: Real>(Vec<C<T>>);

impl<T: Real> StackedPrecoder<T> {
    /// Normalizes and phase-fixes `w`.
    pub fn new(w: Vec<C<T>>) -> Result<Self> {
        let mut w = normalized(&w).ok_or(Error::ZeroPrecoder)?;
        fix_phase(&mut w);
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<C<T>> {
        self.0
    }
}

/// Anything that yields a Hermitian block-diagonal pencil at a point.
pub trait Pencil<T: Real> {
    fn dim(&self) -> usize;
    fn pencil(&self, w: &[C<T>]) -> (BlockDiag<T>, BlockDiag<T>);
    fn objective(&self, w: &[C<T>]) -> T;
}

/// The smoothed sum-rate problem at temperature `tau`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedProblem<'a, T: Real> {
    pub forms: &'a QuadraticForms<T>,
    pub tau: T,
}

impl<T: Real> Pencil<T> for SmoothedProblem<'_, T> {
    fn dim(&self) -> usize {
        self.forms.dim()
    }

    fn pencil(&self, w: &[C<T>]) -> (BlockDiag<T>, BlockDiag<T>) {
        self.forms.kkt_matrices(w, self.tau)
    }

    fn objective(&self, w: &[C<T>]) -> T {
        self.forms.objective(w, self.tau)
    }
}

/// A fixed linear pencil; the objective is its generalized Rayleigh quotient.
#[derive(Debug, Clone)]
pub struct FrozenPencil<T: Real> {
    pub a: BlockDiag<T>,
    pub b: BlockDiag<T>,
}

impl<T: Real> Pencil<T> for FrozenPencil<T> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn pencil(&self, _w: &[C<T>]) -> (BlockDiag<T>, BlockDiag<T>) {
        (self.a.clone(), self.b.clone())
    }

    fn objective(&self, w: &[C<T>]) -> T {
        self.a.quad_form(w) / self.b.quad_form(w)
    }
}

/// Outcome of a power iteration run, in stacked form.
#[derive(Debug, Clone)]
pub struct IterationOutcome<T: Real> {
    /// Best iterate visited.
    pub stacked: StackedPrecoder<T>,
    pub iterations: usize,
    /// Objective at the start point and after every iteration.
    pub objective_trace: Vec<T>,
    pub converged: bool,
    /// `‖B̄⁻¹Āw̄ − ρw̄‖` at the returned point, `ρ = w̄ᴴĀw̄ / w̄ᴴB̄w̄`.
    pub residual: T,
}

/// Fixed-point residual `‖B̄⁻¹Āw̄ − ρw̄‖ / ‖w̄‖` and the quotient `ρ`.
pub fn nep_residual<T: Real>(problem: &impl Pencil<T>, w: &[C<T>]) -> Result<(T, T)> {
    let (a, b) = problem.pencil(w);
    let aw = a.mul_vec(w);
    let rho = dot(w, &aw).re / b.quad_form(w);
    let v = blockdiag_solve(&b, &aw)?;
    let r: Vec<C<T>> = v.iter().zip(w).map(|(&x, &y)| x - y * rho).collect();
    Ok((norm(&r) / norm(w), rho))
}

/// Runs `w̄ ← normalize(B̄(w̄)⁻¹ Ā(w̄) w̄)` until consecutive iterates are
/// within `epsilon` (after phase alignment) or `t_max` steps were taken.
/// The highest-objective iterate is returned.
pub fn power_iterate<T: Real>(
    problem: &impl Pencil<T>,
    epsilon: T,
    t_max: usize,
    w0: &[C<T>],
) -> Result<IterationOutcome<T>> {
    if w0.len() != problem.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start point has length {}, problem dimension is {}",
            w0.len(),
            problem.dim()
        )));
    }
    let mut w = StackedPrecoder::new(w0.to_vec())?.into_vec();
    let mut trace = vec![problem.objective(&w)];
    let mut best = (trace[0], w.clone());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < t_max {
        let (a, b) = problem.pencil(&w);
        let v = blockdiag_solve(&b, &a.mul_vec(&w))?;
        let next = StackedPrecoder::new(v)?.into_vec();
        let step = phase_aligned_distance(&next, &w);
        w = next;
        iterations += 1;
        let obj = problem.objective(&w);
        trace.push(obj);
        if obj >= best.0 || !best.0.is_finite() {
            best = (obj, w.clone());
        }
        if step <= epsilon {
            converged = true;
            break;
        }
    }
    let (residual, _) = nep_residual(problem, &best.1)?;
    Ok(IterationOutcome {
        stacked: StackedPrecoder(best.1),
        iterations,
        objective_trace: trace,
        converged,
        residual,
    })
}

/// Solver result with the precoder recovered from the stacked vector.
#[derive(Debug, Clone)]
pub struct SolveResult<T: Real> {
    pub precoder: Precoder<T>,
    pub stacked: StackedPrecoder<T>,
    pub iterations: usize,
    pub objective_trace: Vec<T>,
    pub converged: bool,
    pub residual: T,
}

/// Power iteration on the smoothed problem defined by `forms`.
pub fn gpi_solve<T: Real>(forms: &QuadraticForms<T>, options: &SolverOptions, w0: &StackedPrecoder<T>) -> Result<SolveResult<T>> {
    options.validate()?;
    let problem = SmoothedProblem {
        forms,
        tau: T::lit(options.tau),
    };
    let out = power_iterate(&problem, T::lit(options.epsilon), options.t_max, w0.as_slice())?;
    let precoder = unstack(out.stacked.as_slice(), forms.dac_alpha_sqrt(), forms.mode())?;
    Ok(SolveResult {
        precoder,
        stacked: out.stacked,
        iterations: out.iterations,
        objective_trace: out.objective_trace,
        converged: out.converged,
        residual: out.residual,
    })
}

/// Quantization-aware rate-splitting solve from the MRT start point.
pub fn qgpi_rs_solve<T: Real>(
    h: &CMatrix<T>,
    profile: &QuantizerProfile<T>,
    power: T,
    noise: T,
    options: &SolverOptions,
) -> Result<SolveResult<T>> {
    let forms = QuadraticForms::new(h, profile, power, noise, StreamMode::Rsma)?;
    let w0 = init_precoder(h, profile, StreamMode::Rsma)?;
    gpi_solve(&forms, options, &w0)
}

/// Same machinery without a common stream; `f₀ = 0` in the result.
pub fn gpi_sem_solve<T: Real>(
    h: &CMatrix<T>,
    profile: &QuantizerProfile<T>,
    power: T,
    noise: T,
    options: &SolverOptions,
) -> Result<SolveResult<T>> {
    let forms = QuadraticForms::new(h, profile, power, noise, StreamMode::Sdma)?;
    let w0 = init_precoder(h, profile, StreamMode::Sdma)?;
    gpi_solve(&forms, &options.sdma(), &w0)
}

/// MRT start point: `f_k = h_k`, and `f₀ = H·1/K` for the common stream.
pub fn init_precoder<T: Real>(h: &CMatrix<T>, profile: &QuantizerProfile<T>, mode: StreamMode) -> Result<StackedPrecoder<T>> {
    profile.check_dims(h.rows(), h.cols())?;
    if h.as_slice().iter().all(|z| *z == cz()) {
        return Err(Error::ZeroChannel);
    }
    let k_users = h.cols();
    let mut columns = Vec::with_capacity(k_users + 1);
    if mode == StreamMode::Rsma {
        let inv_k = T::lit(k_users as f64).recip();
        columns.push((0..h.rows()).map(|n| h.row(n).iter().fold(cz(), |acc, &z| acc + z) * inv_k).collect());
    }
    for k in 0..k_users {
        columns.push(h.col(k));
    }
    let f = CMatrix::from_columns(h.rows(), &columns);
    stack_precoder(&f, profile)
}

/// `w_k = Φ_α^{1/2} f_k`, stacked, normalized and phase-fixed. `f` may be
/// N×(K+1) (rate splitting) or N×K (private streams only).
pub fn stack_precoder<T: Real>(f: &CMatrix<T>, profile: &QuantizerProfile<T>) -> Result<StackedPrecoder<T>> {
    if f.rows() != profile.num_antennas() {
        return Err(Error::DimensionMismatch("precoder rows differ from antenna count".into()));
    }
    let s = profile.dac_alpha_sqrt();
    let w = (0..f.cols())
        .flat_map(|j| (0..f.rows()).map(move |n| (n, j)))
        .map(|(n, j)| f[(n, j)] * s[n])
        .collect();
    StackedPrecoder::new(w)
}

/// Recovers `F` from `w̄` via `f_k = Φ_α^{−1/2} w_k`. The block count decides
/// the mode: K+1 blocks carry a common stream, K blocks do not (and `f₀ = 0`).
pub fn extract_precoder<T: Real>(w: &StackedPrecoder<T>, profile: &QuantizerProfile<T>) -> Result<Precoder<T>> {
    let n = profile.num_antennas();
    let k = profile.num_users();
    let mode = if w.0.len() == n * (k + 1) {
        StreamMode::Rsma
    } else if w.0.len() == n * k {
        StreamMode::Sdma
    } else {
        return Err(Error::DimensionMismatch(format!(
            "stacked precoder of length {} fits neither {} nor {} blocks of {n}",
            w.0.len(),
            k + 1,
            k
        )));
    };
    if profile.dac_alpha().iter().any(|&a| a <= T::zero()) {
        return Err(Error::InvalidProfile("cannot invert a zero DAC gain".into()));
    }
    unstack(&w.0, &profile.dac_alpha_sqrt(), mode)
}

fn unstack<T: Real>(w: &[C<T>], sqrt_alpha: &[T], mode: StreamMode) -> Result<Precoder<T>> {
    let n = sqrt_alpha.len();
    let blocks = w.len() / n;
    let offset = usize::from(mode == StreamMode::Sdma);
    let f = CMatrix::from_fn(n, blocks + offset, |r, j| {
        if j < offset {
            cz()
        } else {
            w[(j - offset) * n + r] * cr(sqrt_alpha[r].recip())
        }
    });
    Precoder::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{principal_gep_oracle, subspace_angle};
    use crate::quantization::Resolution;
    use crate::rates::check_power;
    use crate::rng::SeededRng;

    type Z = C<f64>;

    fn random_hpd_blocks(rng: &mut SeededRng, n: usize, count: usize, shift: f64) -> BlockDiag<f64> {
        let blocks = (0..count)
            .map(|_| {
                let g = CMatrix::from_fn(n, n, |_, _| rng.complex_gaussian());
                let mut m = g.matmul(&g.adjoint());
                m.add_to_diagonal(shift);
                m
            })
            .collect();
        BlockDiag::new(blocks).unwrap()
    }

    #[test]
    fn frozen_pencil_converges_to_principal_eigenvector() {
        let mut rng = SeededRng::new(21);
        let a = random_hpd_blocks(&mut rng, 3, 2, 0.1);
        let b = random_hpd_blocks(&mut rng, 3, 2, 1.0);
        let (_, v_ref) = principal_gep_oracle(&a.to_dense(), &b.to_dense()).unwrap();
        let p = FrozenPencil { a, b };
        let w0: Vec<Z> = rng.complex_gaussian_vec(6);
        let out = power_iterate(&p, 1e-13, 100_000, &w0).unwrap();
        assert!(out.converged);
        assert!(subspace_angle(out.stacked.as_slice(), &v_ref) < 1e-6);
    }

    #[test]
    fn identical_pencil_stops_after_one_step() {
        let mut rng = SeededRng::new(2);
        let a = random_hpd_blocks(&mut rng, 2, 3, 1.0);
        let p = FrozenPencil { a: a.clone(), b: a };
        let w0: Vec<Z> = rng.complex_gaussian_vec(6);
        let out = power_iterate(&p, 0.01, 500, &w0).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.objective_trace.len(), 2);
    }

    #[test]
    fn init_examples() {
        let h = CMatrix::from_fn(3, 1, |i, _| Z::new(i as f64 + 1.0, -1.0));
        let p = QuantizerProfile::perfect(3, 1);
        let w = init_precoder(&h, &p, StreamMode::Rsma).unwrap();
        assert!(norm(&crate::linalg::sub_vec(&w.as_slice()[..3], &w.as_slice()[3..])) < 1e-15);
        assert!((norm(w.as_slice()) - 1.0).abs() < 1e-15);

        let h = CMatrix::from_fn(2, 2, |i, j| if i == j { Z::new(1.0, 0.0) } else { Z::new(0.0, 0.0) });
        let w = init_precoder(&h, &QuantizerProfile::perfect(2, 2), StreamMode::Rsma).unwrap();
        let f = extract_precoder(&w, &QuantizerProfile::perfect(2, 2)).unwrap();
        let f0 = f.common();
        assert!((f0[0] - f0[1]).norm() < 1e-15);
        assert!((f0[0] * 2.0 - f.private(0)[0]).norm() < 1e-15);

        assert!(matches!(
            init_precoder(&CMatrix::<f64>::zeros(2, 2), &QuantizerProfile::perfect(2, 2), StreamMode::Rsma),
            Err(Error::ZeroChannel)
        ));
    }

    #[test]
    fn extract_examples() {
        let w = StackedPrecoder::new(vec![Z::new(0.5, 0.0), Z::new(0.5, 0.0), Z::new(0.5, 0.0), Z::new(0.0, 0.5)]).unwrap();
        let f = extract_precoder(&w, &QuantizerProfile::perfect(2, 1)).unwrap();
        assert_eq!(f.matrix().col(0), w.as_slice()[..2].to_vec());

        let p = QuantizerProfile::from_gains(vec![0.25, 1.0], vec![1.0]).unwrap();
        let f = extract_precoder(&w, &p).unwrap();
        assert!((f.matrix()[(0, 0)] - w.as_slice()[0] * 2.0).norm() < 1e-15);
        assert!((check_power(f.matrix(), &p) - 1.0).abs() < 1e-12);

        // Round trip through stacking.
        let mut rng = SeededRng::new(4);
        let pr = QuantizerProfile::uniform(3, 2, Resolution::Bits(3), Resolution::Bits(3)).unwrap();
        let w: Vec<Z> = rng.complex_gaussian_vec(9);
        let s = StackedPrecoder::new(w).unwrap();
        let f = extract_precoder(&s, &pr).unwrap();
        let back = stack_precoder(f.matrix(), &pr).unwrap();
        assert!(norm(&crate::linalg::sub_vec(back.as_slice(), s.as_slice())) < 1e-12);
    }

    #[test]
    fn sdma_extract_has_zero_common_column() {
        let p = QuantizerProfile::perfect(2, 2);
        let w = StackedPrecoder::new(vec![Z::new(1.0, 0.0); 4]).unwrap();
        let f = extract_precoder(&w, &p).unwrap();
        assert_eq!(f.matrix().cols(), 3);
        assert!(f.common().iter().all(|z| *z == Z::new(0.0, 0.0)));
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        assert!(SolverOptions { tau: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { epsilon: -1.0, ..Default::default() }.validate().is_err());
        assert!(SolverOptions { t_max: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn solve_keeps_unit_norm_and_power_constraint() {
        let mut rng = SeededRng::new(77);
        let h = CMatrix::from_fn(4, 2, |_, _| rng.complex_gaussian::<f64>());
        let p = QuantizerProfile::uniform(4, 2, Resolution::Bits(4), Resolution::Bits(6)).unwrap();
        let res = qgpi_rs_solve(&h, &p, 100.0, 1.0, &SolverOptions::default()).unwrap();
        assert!((norm(res.stacked.as_slice()) - 1.0).abs() < 1e-12);
        assert!((check_power(res.precoder.matrix(), &p) - 1.0).abs() < 1e-10);
        assert_eq!(res.objective_trace.len(), res.iterations + 1);
        assert!(res.residual.is_finite());
    }

    #[test]
    fn f32_solver_tracks_f64() {
        let mut rng = SeededRng::new(5);
        let h64 = CMatrix::from_fn(3, 2, |_, _| rng.complex_gaussian::<f64>());
        let h32 = CMatrix::from_fn(3, 2, |i, j| C::new(h64[(i, j)].re as f32, h64[(i, j)].im as f32));
        let opts = SolverOptions::default();
        let p64 = QuantizerProfile::uniform(3, 2, Resolution::Bits(5), Resolution::Bits(6)).unwrap();
        let p32 = QuantizerProfile::uniform(3, 2, Resolution::Bits(5), Resolution::Bits(6)).unwrap();
        let r64 = qgpi_rs_solve(&h64, &p64, 10.0, 1.0, &opts).unwrap();
        let r32 = qgpi_rs_solve(&h32, &p32, 10.0f32, 1.0, &opts).unwrap();
        let o64 = *r64.objective_trace.last().unwrap();
        let o32 = *r32.objective_trace.last().unwrap();
        assert!((o64 - o32 as f64).abs() < 1e-3, "{o64} vs {o32}");
    }
}
