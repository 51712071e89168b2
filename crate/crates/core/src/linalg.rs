//! Dense complex linear algebra: matrices, block-diagonal Hermitian
//! operators, pivoted Hermitian solves and a Jacobi eigensolver.
//!
//! Everything here is small-dimension, allocation-light code sized for
//! precoder design (N up to a few tens). Matrices are stored row-major.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};
use crate::scalar::{cr, cz, Real, C};

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![cz(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cr(T::one());
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors (all the same length).
    pub fn from_columns(rows: usize, columns: &[Vec<C<T>>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = cr(d);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<C<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C<T>]) {
        assert_eq!(v.len(), self.rows);
        for (i, &z) in v.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(cr(s))
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn add_to_diagonal(&mut self, s: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)].re += s;
        }
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(cz(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == cz() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest absolute entry; used as the scale for pivot tolerances.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).fold(cz(), |acc, i| acc + self[(i, i)])
    }

    /// Hermitian within `rel_tol` relative to the largest entry.
    pub fn is_hermitian(&self, rel_tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(T::min_positive_value());
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Real parts of the diagonal.
    pub fn real_diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

// ---------------------------------------------------------------------------
// Vector helpers

/// Inner product `xᴴ y`.
pub fn dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(cz(), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn scale_vec<T: Real>(x: &[C<T>], s: C<T>) -> Vec<C<T>> {
    x.iter().map(|&z| z * s).collect()
}

pub fn sub_vec<T: Real>(x: &[C<T>], y: &[C<T>]) -> Vec<C<T>> {
    x.iter().zip(y).map(|(&a, &b)| a - b).collect()
}

/// Unit-norm copy of `x`, or `None` for the zero vector.
pub fn normalized<T: Real>(x: &[C<T>]) -> Option<Vec<C<T>>> {
    let n = norm(x);
    if n > T::zero() && n.is_finite() {
        Some(scale_vec(x, cr(n.recip())))
    } else {
        None
    }
}

/// Rotates `x` by a global phase so its largest-magnitude entry is real
/// and positive. Ties resolve to the lowest index.
pub fn fix_phase<T: Real>(x: &mut [C<T>]) {
    let mut best = 0;
    let mut best_mag = T::zero();
    for (i, z) in x.iter().enumerate() {
        let m = z.norm();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    if best_mag > T::zero() {
        let rot = x[best].conj() / best_mag;
        for z in x.iter_mut() {
            *z *= rot;
        }
        x[best] = cr(best_mag);
    }
}

/// Distance between the lines spanned by `x` and `y`: `min_φ ‖x − e^{jφ}y‖`.
pub fn phase_aligned_distance<T: Real>(x: &[C<T>], y: &[C<T>]) -> T {
    let c = dot(y, x);
    let rot = if c.norm() > T::zero() {
        c / c.norm()
    } else {
        cr(T::one())
    };
    norm(&sub_vec(x, &scale_vec(y, rot)))
}

/// Angle between the complex lines spanned by `x` and `y`, in radians.
pub fn subspace_angle<T: Real>(x: &[C<T>], y: &[C<T>]) -> T {
    let nx = norm(x);
    let ny = norm(y);
    let c = (dot(x, y).norm() / (nx * ny)).min(T::one());
    c.acos()
}

// ---------------------------------------------------------------------------
// Block-diagonal Hermitian operators

/// Block-diagonal matrix with equally sized square Hermitian blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiag<T: Real> {
    block_dim: usize,
    blocks: Vec<CMatrix<T>>,
}

impl<T: Real> BlockDiag<T> {
    pub fn new(blocks: Vec<CMatrix<T>>) -> Result<Self> {
        let block_dim = blocks.first().map_or(0, |b| b.rows());
        for (idx, b) in blocks.iter().enumerate() {
            if b.rows() != block_dim || b.cols() != block_dim {
                return Err(Error::DimensionMismatch(format!(
                    "block {idx} is {}x{}, expected {block_dim}x{block_dim}",
                    b.rows(),
                    b.cols()
                )));
            }
            if !b.is_hermitian(T::lit(1e-12).max(T::epsilon() * T::lit(16.0))) {
                return Err(Error::DimensionMismatch(format!("block {idx} is not Hermitian")));
            }
        }
        Ok(Self { block_dim, blocks })
    }

    /// `count` zero blocks of size `block_dim`.
    pub fn zeros(block_dim: usize, count: usize) -> Self {
        Self {
            block_dim,
            blocks: vec![CMatrix::zeros(block_dim, block_dim); count],
        }
    }

    #[inline]
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.block_dim * self.blocks.len()
    }

    pub fn blocks(&self) -> &[CMatrix<T>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &CMatrix<T> {
        &self.blocks[j]
    }

    pub(crate) fn block_mut(&mut self, j: usize) -> &mut CMatrix<T> {
        &mut self.blocks[j]
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.dim());
        let n = self.block_dim;
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(j, b)| b.mul_vec(&v[j * n..(j + 1) * n]))
            .collect()
    }

    /// `vᴴ M v` (real for Hermitian `M`).
    pub fn quad_form(&self, v: &[C<T>]) -> T {
        dot(v, &self.mul_vec(v)).re
    }

    /// Dense `dim × dim` matrix.
    pub fn to_dense(&self) -> CMatrix<T> {
        let n = self.block_dim;
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (j, b) in self.blocks.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    m[(j * n + r, j * n + c)] = b[(r, c)];
                }
            }
        }
        m
    }
}

/// Solves `B x = v` block by block, O(blocks · N³).
pub fn blockdiag_solve<T: Real>(b: &BlockDiag<T>, v: &[C<T>]) -> Result<Vec<C<T>>> {
    if v.len() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} for block operator of dimension {}",
            v.len(),
            b.dim()
        )));
    }
    let n = b.block_dim();
    let mut out = Vec::with_capacity(v.len());
    for (j, block) in b.blocks().iter().enumerate() {
        let x = hermitian_solve(block, &v[j * n..(j + 1) * n]).map_err(|e| Error::SingularBlock {
            block: j,
            source: Box::new(e),
        })?;
        out.extend(x);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Bunch-Kaufman LDLᴴ

/// Symmetric-pivoted `P A Pᵀ = L D Lᴴ` factorization of a Hermitian matrix
/// with 1×1 and 2×2 diagonal pivots.
#[derive(Debug, Clone)]
pub struct LdlFactor<T: Real> {
    n: usize,
    perm: Vec<usize>,
    l: CMatrix<T>,
    /// Pivot blocks as (start, size, inverse entries row-major).
    pivots: Vec<(usize, usize, [C<T>; 4])>,
}

impl<T: Real> LdlFactor<T> {
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let tol = T::lit(T::PIVOT_TOL) * a.max_abs();
        let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
        let mut w = a.clone();
        let mut l = CMatrix::identity(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();

        let swap = |w: &mut CMatrix<T>, l: &mut CMatrix<T>, perm: &mut Vec<usize>, p: usize, q: usize, done: usize| {
            if p == q {
                return;
            }
            for c in 0..n {
                let t = w[(p, c)];
                w[(p, c)] = w[(q, c)];
                w[(q, c)] = t;
            }
            for r in 0..n {
                let t = w[(r, p)];
                w[(r, p)] = w[(r, q)];
                w[(r, q)] = t;
            }
            for c in 0..done {
                let t = l[(p, c)];
                l[(p, c)] = l[(q, c)];
                l[(q, c)] = t;
            }
            perm.swap(p, q);
        };

        let mut k = 0;
        while k < n {
            let akk = w[(k, k)].re.abs();
            let (imax, colmax) = ((k + 1)..n)
                .map(|i| (i, w[(i, k)].norm()))
                .fold((k, T::zero()), |best, cand| if cand.1 > best.1 { cand } else { best });

            if akk.max(colmax) <= tol {
                return Err(Error::SingularMatrix {
                    pivot: akk.max(colmax).to_f64_lossy(),
                    tol: tol.to_f64_lossy(),
                });
            }

            let mut two_by_two = false;
            if akk < alpha * colmax {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| w[(imax, j)].norm())
                    .fold(T::zero(), T::max);
                if akk * rowmax >= alpha * colmax * colmax {
                    // keep k
                } else if w[(imax, imax)].re.abs() >= alpha * rowmax {
                    swap(&mut w, &mut l, &mut perm, k, imax, k);
                } else {
                    swap(&mut w, &mut l, &mut perm, k + 1, imax, k);
                    two_by_two = true;
                }
            }

            if !two_by_two {
                let d = w[(k, k)].re;
                if d.abs() <= tol {
                    return Err(Error::SingularMatrix {
                        pivot: d.abs().to_f64_lossy(),
                        tol: tol.to_f64_lossy(),
                    });
                }
                let dinv = d.recip();
                let col: Vec<C<T>> = ((k + 1)..n).map(|i| w[(i, k)]).collect();
                for (ii, &ci) in col.iter().enumerate() {
                    let i = k + 1 + ii;
                    l[(i, k)] = ci * dinv;
                    for (jj, &cj) in col.iter().enumerate() {
                        let j = k + 1 + jj;
                        w[(i, j)] -= ci * cj.conj() * dinv;
                    }
                }
                pivots.push((k, 1, [cr(dinv), cz(), cz(), cz()]));
                k += 1;
            } else {
                let e11 = w[(k, k)];
                let e21 = w[(k + 1, k)];
                let e12 = w[(k, k + 1)];
                let e22 = w[(k + 1, k + 1)];
                let det = e11 * e22 - e12 * e21;
                let escale = e11.norm().max(e22.norm()).max(e21.norm());
                if det.norm() <= tol * escale {
                    return Err(Error::SingularMatrix {
                        pivot: (det.norm() / escale).to_f64_lossy(),
                        tol: tol.to_f64_lossy(),
                    });
                }
                let inv = [e22 / det, -e12 / det, -e21 / det, e11 / det];
                let rows: Vec<(C<T>, C<T>)> = ((k + 2)..n).map(|i| (w[(i, k)], w[(i, k + 1)])).collect();
                // L_i = C_i E⁻¹ with C_i the (row) coupling to the pivot block.
                let lrows: Vec<(C<T>, C<T>)> = rows
                    .iter()
                    .map(|&(c0, c1)| (c0 * inv[0] + c1 * inv[2], c0 * inv[1] + c1 * inv[3]))
                    .collect();
                for (ii, &(l0, l1)) in lrows.iter().enumerate() {
                    let i = k + 2 + ii;
                    l[(i, k)] = l0;
                    l[(i, k + 1)] = l1;
                    for (jj, &(c0, c1)) in rows.iter().enumerate() {
                        let j = k + 2 + jj;
                        w[(i, j)] -= l0 * c0.conj() + l1 * c1.conj();
                    }
                }
                pivots.push((k, 2, inv));
                k += 2;
            }
        }
        Ok(Self { n, perm, l, pivots })
    }

    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut y: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.l[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for &(start, size, inv) in &self.pivots {
            if size == 1 {
                y[start] *= inv[0];
            } else {
                let (a, c) = (y[start], y[start + 1]);
                y[start] = inv[0] * a + inv[1] * c;
                y[start + 1] = inv[2] * a + inv[3] * c;
            }
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.l[(j, i)].conj() * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![cz(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }
}

/// Solves `A x = b` for Hermitian nonsingular `A`.
pub fn hermitian_solve<T: Real>(a: &CMatrix<T>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    LdlFactor::new(a)?.solve(b)
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let tol = T::lit(T::PIVOT_TOL) * a.max_abs();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= tol {
            return Err(Error::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[(j, j)] = cr(djj);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn lower_solve<T: Real>(l: &CMatrix<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for j in 0..i {
            s -= l[(i, j)] * y[j];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

fn lower_adjoint_solve<T: Real>(l: &CMatrix<T>, b: &[C<T>]) -> Vec<C<T>> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= l[(j, i)].conj() * y[j];
        }
        y[i] = s / l[(i, i)].conj();
    }
    y
}

// ---------------------------------------------------------------------------
// Hermitian eigenproblems

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: CMatrix<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic complex Jacobi eigensolver.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigen needs a square matrix".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    // Symmetrize so rounding noise in the input does not bias the result.
    for i in 0..n {
        m[(i, i)] = cr(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * T::lit(0.5);
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    let tol = T::lit(T::JACOBI_TOL) * scale;

    let off = |m: &CMatrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > tol {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::ConvergenceFailure { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= T::min_positive_value() || r <= tol * T::epsilon() {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let zeta = (m[(q, q)].re - m[(p, p)].re) / (T::lit(2.0) * r);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + T::one()).sqrt());
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                // U = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] on coordinates (p, q).
                let ph_c = phase.conj();
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - mkq * ph_c * s;
                    m[(k, q)] = mkp * s + mkq * ph_c * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - mqk * phase * s;
                    m[(q, k)] = mpk * s + mqk * phase * c;
                }
                m[(p, q)] = cz();
                m[(q, p)] = cz();
                m[(p, p)] = cr(m[(p, p)].re);
                m[(q, q)] = cr(m[(q, q)].re);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ph_c * s;
                    v[(k, q)] = vkp * s + vkq * ph_c * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.partial_cmp(&m[(i, i)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Principal eigenpair of the pencil `(A, B)` with `B` positive definite:
/// the largest `λ` with `A v = λ B v`. The eigenvector has unit norm and the
/// phase convention of [`fix_phase`].
pub fn principal_gep_oracle<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<(T, Vec<C<T>>)> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal size".into()));
    }
    let n = a.rows();
    let l = cholesky(b)?;
    // C = L⁻¹ A L⁻ᴴ, built column by column.
    let mut tmp = CMatrix::zeros(n, n);
    for j in 0..n {
        tmp.set_col(j, &lower_solve(&l, &a.col(j)));
    }
    let tmp_h = tmp.adjoint();
    let mut c = CMatrix::zeros(n, n);
    for j in 0..n {
        c.set_col(j, &lower_solve(&l, &tmp_h.col(j)));
    }
    let eig = hermitian_eigen(&c)?;
    let y = eig.vectors.col(0);
    let mut v = lower_adjoint_solve(&l, &y);
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    fix_phase(&mut v);
    Ok((eig.values[0], v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    type Z = C<f64>;

    fn z(re: f64, im: f64) -> Z {
        Z::new(re, im)
    }

    fn random_hermitian(rng: &mut SeededRng, n: usize, pd: bool) -> CMatrix<f64> {
        let g = CMatrix::from_fn(n, n, |_, _| rng.complex_gaussian::<f64>());
        let mut h = &g + &g.adjoint();
        if pd {
            h = g.matmul(&g.adjoint());
            h.add_to_diagonal(0.5);
        }
        h
    }

    fn residual(a: &CMatrix<f64>, x: &[Z], b: &[Z]) -> f64 {
        norm(&sub_vec(&a.mul_vec(x), b)) / norm(b)
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = vec![z(1.0, 0.0), z(0.0, 2.0), z(-1.0, 0.0)];
        let x = hermitian_solve(&CMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = CMatrix::from_real_diagonal(&[2.0, 4.0]);
        let x = hermitian_solve(&a, &[z(2.0, 0.0), z(4.0, 0.0)]).unwrap();
        assert!((x[0] - z(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - z(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_pd_solve_residual() {
        let mut rng = SeededRng::new(11);
        for _ in 0..20 {
            let a = random_hermitian(&mut rng, 6, true);
            let b = rng.complex_gaussian_vec::<f64>(6);
            let x = hermitian_solve(&a, &b).unwrap();
            assert!(residual(&a, &x, &b) < 1e-10);
        }
    }

    #[test]
    fn indefinite_solve_uses_two_by_two_pivots() {
        // Zero diagonal forces a 2x2 pivot on the first step.
        let a = CMatrix::from_row_major(
            2,
            2,
            vec![z(0.0, 0.0), z(1.0, 1.0), z(1.0, -1.0), z(0.0, 0.0)],
        )
        .unwrap();
        let b = vec![z(1.0, 0.0), z(0.0, 1.0)];
        let x = hermitian_solve(&a, &b).unwrap();
        assert!(residual(&a, &x, &b) < 1e-14);

        let mut rng = SeededRng::new(12);
        for n in 1..9 {
            let a = random_hermitian(&mut rng, n, false);
            let b = rng.complex_gaussian_vec::<f64>(n);
            let x = hermitian_solve(&a, &b).unwrap();
            assert!(residual(&a, &x, &b) < 1e-9, "n={n}");
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMatrix::from_real_diagonal(&[1.0, 0.0, 2.0]);
        let err = hermitian_solve(&a, &[cz(), cz(), cz()]).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));

        let v = vec![z(1.0, 0.5), z(-2.0, 0.0)];
        let rank_one = CMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj());
        assert!(hermitian_solve(&rank_one, &v).is_err());
    }

    #[test]
    fn blockdiag_trivial_cases() {
        let b = BlockDiag::new(vec![CMatrix::identity(2), CMatrix::identity(2)]).unwrap();
        let ones = vec![z(1.0, 0.0); 4];
        assert_eq!(blockdiag_solve(&b, &ones).unwrap(), ones);

        let b = BlockDiag::new(vec![
            CMatrix::from_real_diagonal(&[2.0]),
            CMatrix::from_real_diagonal(&[4.0]),
        ])
        .unwrap();
        let x = blockdiag_solve(&b, &[z(2.0, 0.0), z(4.0, 0.0)]).unwrap();
        assert!((x[0] - z(1.0, 0.0)).norm() < 1e-15 && (x[1] - z(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn blockdiag_reports_offending_block() {
        let b = BlockDiag::new(vec![
            CMatrix::identity(2),
            CMatrix::identity(2),
            CMatrix::zeros(2, 2),
        ])
        .unwrap();
        match blockdiag_solve(&b, &[z(1.0, 0.0); 6]) {
            Err(Error::SingularBlock { block, .. }) => assert_eq!(block, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blockdiag_rejects_non_hermitian_block() {
        let m = CMatrix::from_row_major(2, 2, vec![z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)]).unwrap();
        assert!(BlockDiag::new(vec![m]).is_err());
    }

    #[test]
    fn from_row_major_rejects_nan() {
        let err = CMatrix::<f64>::from_row_major(1, 2, vec![z(1.0, 0.0), z(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn jacobi_diagonalizes_random_hermitian() {
        let mut rng = SeededRng::new(3);
        for n in 1..8 {
            let a = random_hermitian(&mut rng, n, false);
            let eig = hermitian_eigen(&a).unwrap();
            for k in 0..n {
                let v = eig.vectors.col(k);
                let r = sub_vec(&a.mul_vec(&v), &scale_vec(&v, cr(eig.values[k])));
                assert!(norm(&r) < 1e-10 * a.frobenius_norm().max(1.0));
                for j in 0..k {
                    assert!(dot(&eig.vectors.col(j), &v).norm() < 1e-12);
                }
            }
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn gep_oracle_diagonal_case() {
        let a = CMatrix::from_real_diagonal(&[1.0, 3.0]);
        let (lam, v) = principal_gep_oracle(&a, &CMatrix::identity(2)).unwrap();
        assert!((lam - 3.0f64).abs() < 1e-14);
        assert!((v[0].norm()) < 1e-14 && (v[1] - z(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gep_oracle_identity_pencil() {
        let mut rng = SeededRng::new(5);
        let b = random_hermitian(&mut rng, 4, true);
        let (lam, v) = principal_gep_oracle(&b, &b).unwrap();
        assert!((lam - 1.0).abs() < 1e-12);
        let bv = b.mul_vec(&v);
        let back = hermitian_solve(&b, &bv).unwrap();
        assert!(norm(&sub_vec(&back, &v)) < 1e-10);
    }

    #[test]
    fn phase_convention() {
        let mut v = vec![z(0.1, 0.0), z(0.0, -2.0), z(1.0, 1.0)];
        fix_phase(&mut v);
        assert_eq!(v[1], z(2.0, 0.0));
        assert!((norm(&v) - (0.01f64 + 4.0 + 2.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn f32_solve_works() {
        let a = CMatrix::<f32>::from_real_diagonal(&[2.0, 4.0]);
        let x = hermitian_solve(&a, &[cr(2.0f32), cr(4.0f32)]).unwrap();
        assert!((x[0].re - 1.0).abs() < 1e-6 && (x[1].re - 1.0).abs() < 1e-6);
    }
}
