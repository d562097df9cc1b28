//! Dense vectors and square matrices over a generic scalar.
//!
//! Everything here targets desk-scale dimensions (n up to about 10^3):
//! storage is dense, linear solves use LU with partial pivoting, and
//! symmetric eigenvalues come from cyclic Jacobi sweeps. Exactness matters
//! more than speed; the downstream certification tolerances assume direct
//! factorizations.
//!
//! Dimension agreement between operands is a programming contract and is
//! enforced with assertions; data-level failures (singular systems,
//! non-converged eigensolves) are reported through [`LinalgError`].

use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("linear system is singular to working precision")]
    Singular,
    #[error("symmetric eigensolve did not converge within the sweep limit")]
    EigenNoConvergence,
    #[error("vector entries must be finite")]
    NonFinite,
}

/// Dense real vector; entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    /// Builds a vector, rejecting NaN/Inf entries.
    pub fn new(entries: Vec<T>) -> Result<Self, LinalgError> {
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { entries })
    }

    /// Builds a vector from entries known to be finite; asserts in debug builds.
    pub fn from_slice(entries: &[T]) -> Self {
        debug_assert!(entries.iter().all(|e| e.is_finite()));
        Self {
            entries: entries.to_vec(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![T::zero(); dim],
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> T) -> Self {
        Self {
            entries: (0..dim).map(f).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.entries.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }

    /// Euclidean inner product. Panics on dimension mismatch.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &e| acc.max(e.abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "add: dimension mismatch");
        Self::from_fn(self.dim(), |i| self.entries[i] + other.entries[i])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sub: dimension mismatch");
        Self::from_fn(self.dim(), |i| self.entries[i] - other.entries[i])
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::from_fn(self.dim(), |i| factor * self.entries[i])
    }

    /// `self - factor * other`, fused elementwise.
    pub fn sub_scaled(&self, factor: T, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sub_scaled: dimension mismatch");
        Self::from_fn(self.dim(), |i| self.entries[i] - factor * other.entries[i])
    }

    pub fn distance(&self, other: &Self) -> T {
        self.sub(other).norm()
    }

    /// Relaxed fixed-point update `x + eta * (b - a)`, the algebraic form of
    /// `x - eta*a + eta*b`. The difference is computed first so that `a == b`
    /// yields `x` bit-exactly.
    pub fn relaxed_step(x: &Self, a: &Self, b: &Self, eta: T) -> Self {
        assert_eq!(x.dim(), a.dim(), "relaxed_step: dimension mismatch");
        assert_eq!(x.dim(), b.dim(), "relaxed_step: dimension mismatch");
        Self::from_fn(x.dim(), |i| {
            x.entries[i] + eta * (b.entries[i] - a.entries[i])
        })
    }

    /// `((1 - lambda)*x + lambda*a) - delta*c`, the argument fed to the second
    /// resolvent. Evaluation order is fixed so algebraic collapses (e.g.
    /// `a == x`, `lambda == 2`) stay exact in floating point.
    pub fn prox_argument(x: &Self, a: &Self, c: &Self, lambda: T, delta: T) -> Self {
        assert_eq!(x.dim(), a.dim(), "prox_argument: dimension mismatch");
        assert_eq!(x.dim(), c.dim(), "prox_argument: dimension mismatch");
        let one_minus = T::one() - lambda;
        Self::from_fn(x.dim(), |i| {
            (one_minus * x.entries[i] + lambda * a.entries[i]) - delta * c.entries[i]
        })
    }
}

impl<T: Scalar> std::ops::Index<usize> for Vector<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.entries[i]
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from a row-major flat slice of length n*n.
    pub fn from_row_major(n: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), n * n, "from_row_major: bad length");
        Self {
            n,
            data: data.to_vec(),
        }
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { diag[i] } else { T::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row_major(&self) -> &[T] {
        &self.data
    }

    pub fn matvec(&self, x: &Vector<T>) -> Vector<T> {
        assert_eq!(self.n, x.dim(), "matvec: dimension mismatch");
        Vector::from_fn(self.n, |i| {
            let mut acc = T::zero();
            for j in 0..self.n {
                acc = acc + self[(i, j)] * x[j];
            }
            acc
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    /// `(M + M^T) / 2`.
    pub fn symmetric_part(&self) -> Self {
        let half = lit::<T>(0.5);
        Self::from_fn(self.n, |i, j| half * (self[(i, j)] + self[(j, i)]))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "add: dimension mismatch");
        Self::from_fn(self.n, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::from_fn(self.n, |i, j| factor * self[(i, j)])
    }

    /// `self + tau * I`.
    pub fn add_diagonal(&self, tau: T) -> Self {
        Self::from_fn(self.n, |i, j| {
            if i == j {
                self[(i, j)] + tau
            } else {
                self[(i, j)]
            }
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul: dimension mismatch");
        Self::from_fn(self.n, |i, j| {
            let mut acc = T::zero();
            for k in 0..self.n {
                acc = acc + self[(i, k)] * other[(k, j)];
            }
            acc
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &e| acc.max(e.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Principal submatrix indexed by `idx` (strictly increasing indices).
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Solves `self * x = rhs` by LU with partial pivoting.
    pub fn lu_solve(&self, rhs: &Vector<T>) -> Result<Vector<T>, LinalgError> {
        assert_eq!(self.n, rhs.dim(), "lu_solve: dimension mismatch");
        let n = self.n;
        if n == 0 {
            return Ok(Vector::zeros(0));
        }
        let mut a = self.data.clone();
        let mut b: Vec<T> = rhs.as_slice().to_vec();
        let scale = self.max_abs().max(T::one());
        let pivot_floor = scale * lit::<T>(1e-300).max(T::epsilon() * lit::<T>(1e-6));

        for col in 0..n {
            // partial pivot
            let mut pivot_row = col;
            let mut pivot_val = a[col * n + col].abs();
            for row in (col + 1)..n {
                let v = a[row * n + col].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if pivot_val < pivot_floor || !pivot_val.is_finite() {
                return Err(LinalgError::Singular);
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                b.swap(col, pivot_row);
            }
            let inv_pivot = T::one() / a[col * n + col];
            for row in (col + 1)..n {
                let factor = a[row * n + col] * inv_pivot;
                if factor == T::zero() {
                    continue;
                }
                a[row * n + col] = T::zero();
                for j in (col + 1)..n {
                    a[row * n + j] = a[row * n + j] - factor * a[col * n + j];
                }
                b[row] = b[row] - factor * b[col];
            }
        }

        let mut x = vec![T::zero(); n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for j in (row + 1)..n {
                acc = acc - a[row * n + j] * x[j];
            }
            x[row] = acc / a[row * n + row];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular);
        }
        Ok(Vector { entries: x })
    }

    /// All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi
    /// rotations. The caller is responsible for symmetry; only the lower
    /// triangle consistency is assumed through `symmetric_part` upstream.
    pub fn sym_eigenvalues(&self) -> Result<Vec<T>, LinalgError> {
        let n = self.n;
        if n == 0 {
            return Ok(vec![]);
        }
        if n == 1 {
            return Ok(vec![self[(0, 0)]]);
        }
        let mut a = self.clone();
        let norm = a.max_abs().max(T::one());
        // target well below the certification tolerance of 1e-10
        let target = norm * T::epsilon() * lit::<T>(4.0);
        let max_sweeps = 64;

        for _ in 0..max_sweeps {
            let mut off = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[(i, j)].abs());
                }
            }
            if off <= target {
                let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
                eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
                return Ok(eig);
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= target * lit::<T>(1e-2) {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                    // stable tangent of the rotation angle
                    let t = {
                        let sign = if theta >= T::zero() {
                            T::one()
                        } else {
                            -T::one()
                        };
                        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        Err(LinalgError::EigenNoConvergence)
    }

    pub fn min_eigenvalue(&self) -> Result<T, LinalgError> {
        Ok(self.sym_eigenvalues()?[0])
    }

    pub fn max_eigenvalue(&self) -> Result<T, LinalgError> {
        let eig = self.sym_eigenvalues()?;
        Ok(eig[eig.len() - 1])
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Orthonormalizes the rows of `rows` by modified Gram-Schmidt and returns the
/// matrix whose rows are the resulting basis. Returns `None` if the input is
/// numerically rank-deficient.
pub fn orthonormal_rows<T: Scalar>(rows: &[Vector<T>]) -> Option<Matrix<T>> {
    let n = rows.len();
    if n == 0 {
        return Some(Matrix::zeros(0));
    }
    assert!(
        rows.iter().all(|r| r.dim() == n),
        "orthonormal_rows: square input expected"
    );
    let mut basis: Vec<Vector<T>> = Vec::with_capacity(n);
    for row in rows {
        let mut v = row.clone();
        for b in &basis {
            let coeff = v.dot(b);
            v = v.sub_scaled(coeff, b);
        }
        let norm = v.norm();
        if norm < lit::<T>(1e-8) {
            return None;
        }
        basis.push(v.scale(T::one() / norm));
    }
    Some(Matrix::from_fn(n, |i, j| basis[i][j]))
}
