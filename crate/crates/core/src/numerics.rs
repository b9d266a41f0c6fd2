//! Dense linear algebra kernels: Hermitian eigendecomposition, unitary
//! exponentials, Cholesky factorization and direct solvers.
//!
//! Everything here works on small dense matrices (a few dozen rows at most),
//! so the algorithms favour robustness over asymptotic speed.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

pub type C64 = Complex64;

/// Relative tolerance used to accept a matrix as Hermitian / symmetric.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative eigenvalue ratio below which a matrix is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: entries ({row},{col}) and ({col},{row}) differ by {deviation:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular: |lambda_min|/|lambda_max| = {ratio:e}")]
    Singular { ratio: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type ComplexMatrix = Matrix<C64>;
pub type RealMatrix = Matrix<f64>;

impl<T: Copy + Zero> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Principal submatrix selected by `idx` on both axes.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }
}

impl<T: Copy + Zero + One> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = T::one();
        }
        out
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut out = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            out[(i, i)] = d;
        }
        out
    }
}

impl<T: Copy + Zero + std::ops::Mul<Output = T>> Matrix<T> {
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl ComplexMatrix {
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        RealMatrix::from_rows(rows).to_complex()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    pub fn real_part(&self) -> RealMatrix {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.re).collect(),
        }
    }

    pub fn imag_part(&self) -> RealMatrix {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.im).collect(),
        }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    /// Largest elementwise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Checks the Hermitian property within `HERMITIAN_TOL` relative to the
    /// largest entry and returns the symmetrized matrix (A + A†)/2.
    pub fn hermitian_part(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(NumericsError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let tol = HERMITIAN_TOL * self.max_abs();
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in i..n {
                let a = self[(i, j)];
                let b = self[(j, i)].conj();
                let deviation = (a - b).norm();
                if deviation > tol {
                    return Err(NumericsError::NotHermitian {
                        row: i,
                        col: j,
                        deviation,
                    });
                }
                let avg = (a + b) * 0.5;
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        Ok(out)
    }

    /// Distance of `self` from unitarity, max |U†U - I|.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.adjoint().matmul(self);
        gram.max_abs_diff(&Self::identity(self.cols))
    }
}

/// Spectral decomposition A = Q Λ Q† of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Real eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Q f(Λ) Q† for a scalar function applied to each eigenvalue.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim();
        let q = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                let qik = q[(i, k)] * fk;
                for j in 0..n {
                    out[(i, j)] += qik * q[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| C64::new(l, 0.0))
    }

    /// e^{iAt}.
    pub fn exp_i(&self, t: f64) -> ComplexMatrix {
        self.map_spectrum(|l| C64::from_polar(1.0, l * t))
    }

    /// Coefficients of `v` in the eigenbasis, Q† v.
    pub fn coefficients(&self, v: &[C64]) -> Vec<C64> {
        self.eigenvectors.adjoint().mul_vec(v)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigendecomposition(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let mut m = a.hermitian_part()?;
    let n = m.rows();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q, scale);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, col)] = v[(i, k)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

// Zeroes m[p][q] with the unitary J = diag(1, e^{-i phi}) * R(theta) acting on
// columns p, q; accumulates J into v.
fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, scale: f64) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag <= 1e-300 || mag <= 1e-18 * scale {
        m[(p, q)] = C64::zero();
        m[(q, p)] = C64::zero();
        return;
    }
    let phase = apq / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let e_minus = phase.conj();
    let n = m.rows();

    // A <- A J
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * e_minus * s;
        m[(k, q)] = akp * s + akq * e_minus * c;
    }
    // A <- J† A
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * phase * s;
        m[(q, k)] = apk * s + aqk * phase * c;
    }
    m[(p, q)] = C64::zero();
    m[(q, p)] = C64::zero();
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e_minus * s;
        v[(k, q)] = vkp * s + vkq * e_minus * c;
    }
}

/// U = e^{iAt} for Hermitian A.
pub fn unitary_exponential(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(hermitian_eigendecomposition(a)?.exp_i(t))
}

/// Lower-triangular L with L Lᵀ = C for a symmetric positive-definite C.
pub fn cholesky(c: &RealMatrix) -> Result<RealMatrix> {
    if !c.is_square() {
        return Err(NumericsError::NotSquare {
            rows: c.rows(),
            cols: c.cols(),
        });
    }
    let n = c.rows();
    let tol = HERMITIAN_TOL * c.max_abs();
    for i in 0..n {
        for j in (i + 1)..n {
            let deviation = (c[(i, j)] - c[(j, i)]).abs();
            if deviation > tol {
                return Err(NumericsError::NotHermitian {
                    row: i,
                    col: j,
                    deviation,
                });
            }
        }
    }
    let mut l = RealMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = c[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(NumericsError::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = c[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves A x = b for Hermitian nonsingular A by LU with partial pivoting.
///
/// Singularity is judged on the spectrum (|λ|min / |λ|max below `SINGULAR_TOL`);
/// the solve itself does not go through the eigendecomposition.
pub fn solve_direct(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let h = a.hermitian_part()?;
    if b.len() != h.rows() {
        return Err(NumericsError::DimensionMismatch {
            expected: h.rows(),
            found: b.len(),
        });
    }
    if h.rows() == 0 {
        return Ok(Vec::new());
    }
    let eig = hermitian_eigendecomposition(&h)?;
    let abs_max = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let abs_min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    if abs_max == 0.0 || abs_min < SINGULAR_TOL * abs_max {
        let ratio = if abs_max == 0.0 { 0.0 } else { abs_min / abs_max };
        return Err(NumericsError::Singular { ratio });
    }
    lu_solve(h, b.to_vec()).ok_or(NumericsError::Singular { ratio: 0.0 })
}

/// Solves a general real square system by LU with partial pivoting.
pub fn solve_real(a: &RealMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if b.len() != a.rows() {
        return Err(NumericsError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    lu_solve(a.clone(), b.to_vec()).ok_or(NumericsError::Singular { ratio: 0.0 })
}

trait Pivot: Copy + Zero + One + std::ops::Sub<Output = Self> + std::ops::Mul<Output = Self> + std::ops::Div<Output = Self> {
    fn magnitude(self) -> f64;
}

impl Pivot for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Pivot for C64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

fn lu_solve<T: Pivot>(mut a: Matrix<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = a.rows();
    let scale = a.data.iter().fold(0.0f64, |m, x| m.max(x.magnitude()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].magnitude().total_cmp(&a[(j, col)].magnitude()))?;
        if a[(piv, col)].magnitude() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(piv, j)];
                a[(piv, j)] = tmp;
            }
            b.swap(col, piv);
        }
        let d = a[(col, col)];
        for i in (col + 1)..n {
            let f = a[(i, col)] / d;
            if f.magnitude() == 0.0 {
                continue;
            }
            for j in col..n {
                a[(i, j)] = a[(i, j)] - f * a[(col, j)];
            }
            b[i] = b[i] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s = s - a[(i, j)] * x[j];
        }
        x[i] = s / a[(i, i)];
    }
    Some(x)
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// |⟨x, y⟩| / (‖x‖‖y‖).
pub fn fidelity(x: &[C64], y: &[C64]) -> f64 {
    let inner: C64 = x.iter().zip(y).map(|(a, b)| a.conj() * b).sum();
    let denom = norm2(x) * norm2(y);
    if denom == 0.0 {
        0.0
    } else {
        inner.norm() / denom
    }
}
