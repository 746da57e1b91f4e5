//! Small dense matrices: symmetric and positive definite values, the Jacobi
//! eigensolver, determinants, adjugates and seeded random test matrices.
//!
//! Dimensions are runtime values. Everything here is intended for `n` up to
//! a couple of dozen; no blocking or sparsity tricks are attempted.

use std::fmt;
use std::ops::{Deref, Mul};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Generator used by every seeded sampler in the crate.
pub type SampleRng = ChaCha8Rng;

/// Human readable name of [`SampleRng`] and its seeding procedure, recorded
/// in reports so that runs can be reproduced.
pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng (rand_chacha 0.9), seeded via SeedableRng::seed_from_u64";

/// Sweep cap for [`jacobi_eigen`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative floor below which an eigenvalue does not count as positive.
pub const POSDEF_RELATIVE_FLOOR: f64 = 1e-12;

pub fn sample_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_diag(d: &[T]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { T::zero() })
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("matrix must have at least one row".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Matrix with all off-diagonal entries set to zero.
    pub fn diag_part(&self) -> Self {
        Self::from_fn(
            self.n,
            |i, j| if i == j { self.get(i, i) } else { T::zero() },
        )
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn scaled(&self, t: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| x * t).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch in matrix addition");
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-T::one()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn det(&self) -> T {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r1, &r2| {
                    a[r1 * n + col]
                        .abs()
                        .partial_cmp(&a[r2 * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            let p = a[pivot * n + col];
            if p == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            det = det * p;
            for r in (col + 1)..n {
                let factor = a[r * n + col] / p;
                if factor != T::zero() {
                    for k in col..n {
                        let v = a[col * n + k];
                        a[r * n + k] = a[r * n + k] - factor * v;
                    }
                }
            }
        }
        det
    }

    /// The matrix with row `row` and column `col` removed.
    fn minor(&self, row: usize, col: usize) -> Self {
        let m = self.n - 1;
        Self::from_fn(m, |i, j| {
            let si = if i < row { i } else { i + 1 };
            let sj = if j < col { j } else { j + 1 };
            self.get(si, sj)
        })
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        Matrix::from_fn(n, |i, j| {
            (0..n).fold(T::zero(), |acc, k| acc + self.get(i, k) * rhs.get(k, j))
        })
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.data.chunks(self.n.max(1)))
            .finish()
    }
}

/// Real symmetric matrix. The lower triangle is authoritative; the upper
/// triangle is always its mirror image.
#[derive(Clone, PartialEq)]
pub struct SymMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Real> SymMatrix<T> {
    /// Builds from a function evaluated on the lower triangle (`i >= j`).
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut inner = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                inner.set(i, j, v);
                inner.set(j, i, v);
            }
        }
        Self { inner }
    }

    /// Symmetric matrix taken from the lower triangle of `m`.
    pub fn from_lower(m: &Matrix<T>) -> Self {
        Self::from_lower_fn(m.n(), |i, j| m.get(i, j))
    }

    /// Builds from rows; only the lower triangle is read. Entries must be finite.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        let s = Self::from_lower(&m);
        if !s.is_finite() {
            return Err(Error::Numerical("matrix has non-finite entries".into()));
        }
        Ok(s)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: Matrix::zeros(n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Matrix::identity(n),
        }
    }

    pub fn from_diag(d: &[T]) -> Self {
        Self {
            inner: Matrix::from_diag(d),
        }
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn scaled(&self, t: T) -> Self {
        Self {
            inner: self.inner.scaled(t),
        }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, other: &Self, t: T) -> Self {
        Self::from_lower_fn(self.n(), |i, j| self.get(i, j) + t * other.get(i, j))
    }

    /// `Q * self * Q^T`.
    pub fn congruence(&self, q: &Matrix<T>) -> Self {
        let m = &(q * &self.inner) * &q.transpose();
        Self::from_lower(&m)
    }
}

impl<T> Deref for SymMatrix<T> {
    type Target = Matrix<T>;

    fn deref(&self) -> &Matrix<T> {
        &self.inner
    }
}

impl<T: fmt::Debug> fmt::Debug for SymMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.fmt(f)
    }
}

/// Orthogonal eigendecomposition `A = Q D Q^T` of a symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition<T> {
    /// Eigenvectors as columns.
    pub q: Matrix<T>,
    /// Eigenvalues, ascending.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn d(&self) -> Matrix<T> {
        Matrix::from_diag(&self.eigenvalues)
    }

    /// `Q D Q^T`.
    pub fn reconstruct(&self) -> Matrix<T> {
        &(&self.q * &self.d()) * &self.q.transpose()
    }

    /// `Q diag(g(lambda_i)) Q^T`, symmetric by construction.
    pub fn map_spectrum(&self, g: impl Fn(T) -> T) -> SymMatrix<T> {
        let n = self.q.n();
        let mapped: Vec<T> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        SymMatrix::from_lower_fn(n, |i, j| {
            (0..n).fold(T::zero(), |acc, k| {
                acc + self.q.get(i, k) * mapped[k] * self.q.get(j, k)
            })
        })
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius norm drops to `1e-14 * ||A||_F`
/// (or a few ulps for `f32`). Fails after [`JACOBI_MAX_SWEEPS`] sweeps.
pub fn jacobi_eigen<T: Real>(a: &SymMatrix<T>) -> Result<EigenDecomposition<T>> {
    if !a.is_finite() {
        return Err(Error::Numerical(
            "eigendecomposition of a non-finite matrix".into(),
        ));
    }
    let n = a.n();
    let mut w = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let tol = lit::<T>(1e-14).max(T::epsilon() * lit(45.0)) * a.frobenius_norm();

    let off_norm = |w: &Matrix<T>| {
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc = acc + w.get(i, j) * w.get(i, j);
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&w) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(T::one()));
                let c = T::one() / t.hypot(T::one());
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w.get(k, p);
                    let akq = w.get(k, q);
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    w.set(k, p, new_kp);
                    w.set(p, k, new_kp);
                    w.set(k, q, new_kq);
                    w.set(q, k, new_kq);
                }
                w.set(p, p, app - t * apq);
                w.set(q, q, aqq + t * apq);
                w.set(p, q, T::zero());
                w.set(q, p, T::zero());
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w.get(i, i)
            .partial_cmp(&w.get(j, j))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&k| w.get(k, k)).collect();
    let q = Matrix::from_fn(n, |i, j| v.get(i, order[j]));
    Ok(EigenDecomposition { q, eigenvalues })
}

/// Adjugate (transposed cofactor matrix); `adj(A) A = det(A) I` for every `A`.
pub fn adjugate<T: Real>(a: &Matrix<T>) -> Matrix<T> {
    let n = a.n();
    if n == 1 {
        return Matrix::identity(1);
    }
    Matrix::from_fn(n, |i, j| {
        let cof = a.minor(j, i).det();
        if (i + j) % 2 == 0 {
            cof
        } else {
            -cof
        }
    })
}

/// Trace inner product `<A, B> = tr(A B^T) = sum_ij A_ij B_ij`.
pub fn frob_inner<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
    if a.n() != b.n() {
        return Err(Error::Dimension(format!(
            "inner product of {0}x{0} and {1}x{1} matrices",
            a.n(),
            b.n()
        )));
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y))
}

/// Symmetric positive definite matrix together with its eigendecomposition,
/// determinant and inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct PosDefMatrix<T> {
    base: SymMatrix<T>,
    eigen: EigenDecomposition<T>,
    det: T,
    inverse: SymMatrix<T>,
}

impl<T: Real> PosDefMatrix<T> {
    /// Accepts `base` when every eigenvalue exceeds `1e-12 * ||base||_F`.
    pub fn new(base: SymMatrix<T>) -> Result<Self> {
        if base.n() == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let eigen = jacobi_eigen(&base)?;
        let floor = lit::<T>(POSDEF_RELATIVE_FLOOR) * base.frobenius_norm();
        let min = eigen.eigenvalues[0];
        if !(min > floor) || min <= T::zero() {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min.to_f64().unwrap_or(f64::NAN),
            });
        }
        let det = base.det();
        let inverse = eigen.map_spectrum(|l| T::one() / l);
        Ok(Self {
            base,
            eigen,
            det,
            inverse,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(SymMatrix::identity(n)).expect("identity is positive definite")
    }

    pub fn from_diag(d: &[T]) -> Result<Self> {
        Self::new(SymMatrix::from_diag(d))
    }

    pub fn sym(&self) -> &SymMatrix<T> {
        &self.base
    }

    pub fn det(&self) -> T {
        self.det
    }

    pub fn inverse(&self) -> &SymMatrix<T> {
        &self.inverse
    }

    pub fn eigen(&self) -> &EigenDecomposition<T> {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigen.eigenvalues
    }
}

impl<T> Deref for PosDefMatrix<T> {
    type Target = SymMatrix<T>;

    fn deref(&self) -> &SymMatrix<T> {
        &self.base
    }
}

/// Haar-like orthogonal matrix: Gram-Schmidt QR of a Gaussian matrix with
/// the diagonal of R made positive.
pub fn random_orthogonal<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix<T> {
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    for j in 0..n {
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for k in 0..j {
                let proj: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (done, rest) = cols.split_at_mut(j);
                for (x, y) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    Matrix::from_fn(n, |i, j| lit(cols[j][i]))
}

/// Random SPD matrix `Q diag(exp(u_i)) Q^T` with `u_i ~ U[lo, hi]` drawn from `rng`.
pub fn random_posdef_with<T: Real, R: Rng + ?Sized>(
    n: usize,
    log_eig_range: (f64, f64),
    rng: &mut R,
) -> Result<PosDefMatrix<T>> {
    let (lo, hi) = log_eig_range;
    if n == 0 {
        return Err(Error::Dimension("random_posdef needs n >= 1".into()));
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter(format!(
            "invalid log-eigenvalue range [{lo}, {hi}]"
        )));
    }
    let eig: Vec<T> = (0..n)
        .map(|_| {
            let u = if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            };
            lit(u.exp())
        })
        .collect();
    let q = random_orthogonal::<T, R>(n, rng);
    let base = SymMatrix::from_diag(&eig).congruence(&q);
    PosDefMatrix::new(base)
}

/// Seeded variant of [`random_posdef_with`].
pub fn random_posdef<T: Real>(
    n: usize,
    log_eig_range: (f64, f64),
    seed: u64,
) -> Result<PosDefMatrix<T>> {
    random_posdef_with(n, log_eig_range, &mut sample_rng(seed))
}

/// Random symmetric matrix with entries `i <= j` uniform in `[-scale, scale]`.
pub fn random_sym_with<T: Real, R: Rng + ?Sized>(
    n: usize,
    scale: f64,
    rng: &mut R,
) -> Result<SymMatrix<T>> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Parameter(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    Ok(SymMatrix::from_lower_fn(n, |_, _| {
        lit(rng.random_range(-scale..=scale))
    }))
}

/// Seeded variant of [`random_sym_with`].
pub fn random_sym<T: Real>(n: usize, scale: f64, seed: u64) -> Result<SymMatrix<T>> {
    random_sym_with(n, scale, &mut sample_rng(seed))
}

/// Random general (not necessarily symmetric) matrix with uniform entries.
pub fn random_matrix_with<T: Real, R: Rng + ?Sized>(
    n: usize,
    scale: f64,
    rng: &mut R,
) -> Matrix<T> {
    Matrix::from_fn(n, |_, _| lit(rng.random_range(-scale..=scale)))
}
