//! Dense row-major matrices and the spectral quantities used throughout:
//! singular spectra, the stable ranks `r_inf = |A|_F^2 / |A|^2` and
//! `r_4 = |A|_F^4 / |A A^T|_F^2`, intrinsic dimension `tr S / |S|`, and the
//! top eigenvalue of a symmetric positive semidefinite matrix.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating point scalar the linear algebra is written against.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Singular values below this fraction of `sigma_1` count as zero for rank.
pub const RANK_RELATIVE_TOL: f64 = 1e-12;

/// Allowed asymmetry `max |S_ij - S_ji|` relative to `|S|_F`.
pub const SYMMETRY_RELATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from row-major entries, rejecting bad shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input(format!("matrix shape {rows}x{cols} is empty")));
        }
        if data.len() != rows * cols {
            return Err(Error::Input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("non-finite entry at ({}, {})", pos / cols, pos % cols)));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be nonempty");
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Input("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a `rows x columns.len()` matrix whose j-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Input(format!("every column must have {rows} entries")));
        }
        let cols = columns.len();
        let mut data = vec![T::zero(); rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &x) in c.iter().enumerate() {
                data[i * cols + j] = x;
            }
        }
        Self::new(rows, cols, data)
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
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Input(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Input(format!("vector of length {} does not match {} columns", x.len(), self.cols)));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `A A^T`, symmetric by construction.
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    /// `A^T A`, symmetric by construction.
    pub fn gram_cols(&self) -> Self {
        self.transpose().gram_rows()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Input("shape mismatch in subtraction".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn column_norms(&self) -> Vec<T> {
        let mut sq = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, &x) in sq.iter_mut().zip(self.row(i)) {
                *s = *s + x * x;
            }
        }
        sq.into_iter().map(Float::sqrt).collect()
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::Input("empty column selection".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.cols) {
            return Err(Error::Input(format!("column {bad} out of range")));
        }
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(Self { rows: self.rows, cols: idx.len(), data })
    }

    /// Largest asymmetry `max |S_ij - S_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| U::of(x.as_f64())).collect() }
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSpectrum<T> {
    /// Non-increasing, non-negative.
    pub values: Vec<T>,
}

impl<T: Scalar> SingularSpectrum<T> {
    pub fn largest(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn sum_sq(&self) -> T {
        self.values.iter().map(|&s| s * s).sum()
    }

    /// Numerical rank with the cutoff `RANK_RELATIVE_TOL * sigma_1`.
    pub fn rank(&self) -> usize {
        let cutoff = self.largest() * T::of(RANK_RELATIVE_TOL);
        self.values.iter().filter(|&&s| s > cutoff).count()
    }
}

/// Singular values of `a`, sorted non-increasing.
///
/// One-sided Jacobi (Hestenes) on whichever of `a`, `a^T` has fewer columns:
/// pairs of columns are rotated until mutually orthogonal, after which the
/// column norms are the singular values. Small singular values come out with
/// absolute error near `eps * sigma_1`.
pub fn singular_spectrum<T: Scalar>(a: &DenseMatrix<T>) -> Result<SingularSpectrum<T>> {
    if let Some(pos) = a.data.iter().position(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite entry at flat index {pos}")));
    }
    // Columns of the working matrix, stored contiguously.
    let mut w: Vec<Vec<T>> = if a.cols <= a.rows { a.columns() } else { a.transpose().columns() };
    let p = w.len();
    let tol = T::epsilon() * T::of_usize(w[0].len().max(p));
    const MAX_SWEEPS: usize = 80;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::of(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = w.split_at_mut(j);
                for (x, y) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (xi, yj) = (*x, *y);
                    *x = c * xi - s * yj;
                    *y = s * xi + c * yj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut values: Vec<T> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    values.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    Ok(SingularSpectrum { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableRanks {
    pub r_inf: f64,
    pub r_4: f64,
    pub frob_sq: f64,
    pub op_norm_sq: f64,
}

impl StableRanks {
    pub fn from_spectrum<T: Scalar>(spectrum: &SingularSpectrum<T>) -> Result<Self> {
        let sq: Vec<f64> = spectrum.values.iter().map(|s| s.as_f64().powi(2)).collect();
        let op_norm_sq = sq.first().copied().unwrap_or(0.0);
        if op_norm_sq == 0.0 {
            return Err(Error::Domain("stable ranks of the zero matrix are undefined".into()));
        }
        let frob_sq: f64 = sq.iter().sum();
        let fourth: f64 = sq.iter().map(|s| s * s).sum();
        Ok(Self { r_inf: frob_sq / op_norm_sq, r_4: frob_sq * frob_sq / fourth, frob_sq, op_norm_sq })
    }
}

/// `r_inf` and `r_4` of a nonzero matrix, both read off its singular spectrum.
pub fn stable_ranks<T: Scalar>(a: &DenseMatrix<T>) -> Result<StableRanks> {
    StableRanks::from_spectrum(&singular_spectrum(a)?)
}

fn check_symmetric<T: Scalar>(s: &DenseMatrix<T>) -> Result<()> {
    if !s.is_square() {
        return Err(Error::Domain(format!("expected a square matrix, got {}x{}", s.rows, s.cols)));
    }
    let frob = s.frobenius_sq().sqrt();
    if s.asymmetry() > T::of(SYMMETRY_RELATIVE_TOL) * frob {
        return Err(Error::Domain("matrix is not symmetric within tolerance".into()));
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// non-increasing. The input is symmetrized as `(S + S^T)/2` first.
pub fn symmetric_eigenvalues<T: Scalar>(s: &DenseMatrix<T>) -> Result<Vec<T>> {
    check_symmetric(s)?;
    let n = s.rows;
    let half = T::of(0.5);
    let mut a: Vec<T> = (0..n * n).map(|k| (s.data[k] + s.data[(k % n) * n + k / n]) * half).collect();
    let off = |a: &[T]| -> T {
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc = acc + a[i * n + j] * a[i * n + j];
                }
            }
        }
        acc
    };
    let scale = s.frobenius_sq();
    for _ in 0..100 {
        if off(&a) <= T::epsilon() * T::epsilon() * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok(eig)
}

/// Operator norm of a symmetric (possibly indefinite) matrix.
pub fn symmetric_operator_norm<T: Scalar>(s: &DenseMatrix<T>) -> Result<T> {
    let eig = symmetric_eigenvalues(s)?;
    Ok(eig.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
}

/// `tr S / |S|` for a nonzero symmetric positive semidefinite `S`.
/// Invariant under positive scaling.
pub fn intrinsic_dimension<T: Scalar>(sigma: &DenseMatrix<T>) -> Result<f64> {
    let eig = symmetric_eigenvalues(sigma)?;
    let top = eig[0].as_f64();
    let bottom = eig[eig.len() - 1].as_f64();
    if top <= 0.0 {
        return Err(Error::Domain("intrinsic dimension of the zero matrix is undefined".into()));
    }
    if bottom < -SYMMETRY_RELATIVE_TOL * top {
        return Err(Error::Domain(format!("matrix is indefinite (eigenvalue {bottom:e})")));
    }
    Ok(sigma.trace().as_f64() / top)
}

/// Iteration cap of [`top_eigenvalue`] for an `n x n` input.
pub fn power_iteration_cap(n: usize) -> usize {
    let n = n as f64;
    (10.0 * n * n.ln() + 100.0).ceil() as usize
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// Starts from the normalized all-ones vector. If that vector is annihilated
/// by `S`, or the converged value is below the largest diagonal entry (which
/// cannot happen when the start vector sees the dominant eigenspace), the
/// iteration is repeated once from a fixed irrational perturbation of it.
/// Stops when successive Rayleigh quotients agree to relative `tol`.
pub fn top_eigenvalue<T: Scalar>(sigma: &DenseMatrix<T>, tol: f64) -> Result<T> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    check_symmetric(sigma)?;
    let n = sigma.rows;
    let max_diag = (0..n).map(|i| sigma.get(i, i)).fold(T::neg_infinity(), T::max);
    if sigma.max_abs() == T::zero() {
        return Ok(T::zero());
    }

    let ones = vec![T::one(); n];
    match power_iterate(sigma, ones, tol)? {
        Some(lambda) if lambda >= max_diag * (T::one() - T::of(tol.max(1e-12))) => Ok(lambda),
        _ => {
            let golden = 0.618_033_988_749_894_9_f64;
            let start = (0..n).map(|i| T::of(1.0 + (i as f64 * golden).fract())).collect();
            match power_iterate(sigma, start, tol)? {
                Some(lambda) => Ok(lambda),
                None => Err(Error::Numeric {
                    message: "start vectors are annihilated by the matrix".into(),
                    estimate: max_diag.as_f64(),
                }),
            }
        }
    }
}

/// Returns `None` when the start vector is mapped to zero.
fn power_iterate<T: Scalar>(s: &DenseMatrix<T>, start: Vec<T>, tol: f64) -> Result<Option<T>> {
    let norm = dot(&start, &start).sqrt();
    let mut v: Vec<T> = start.into_iter().map(|x| x / norm).collect();
    let scale = s.frobenius_sq().sqrt();
    let tol = T::of(tol);
    let mut lambda = T::neg_infinity();
    for _ in 0..power_iteration_cap(s.rows) {
        let w = s.matvec(&v)?;
        let wn = dot(&w, &w).sqrt();
        if wn <= T::epsilon() * scale {
            return Ok(None);
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / wn).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok(Some(next));
        }
        lambda = next;
    }
    Err(Error::Numeric {
        message: format!("power iteration did not converge in {} steps", power_iteration_cap(s.rows)),
        estimate: lambda.as_f64(),
    })
}

/// Upper-triangular Cholesky-like factor: returns `R` with `R^T R = S` for a
/// symmetric positive definite `S`.
pub fn cholesky_upper<T: Scalar>(s: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_symmetric(s)?;
    let n = s.rows;
    let mut l = DenseMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = s.get(j, j);
        for k in 0..j {
            d = d - l.get(j, k) * l.get(j, k);
        }
        if d <= T::zero() {
            return Err(Error::Domain("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in (j + 1)..n {
            let mut v = s.get(i, j);
            for k in 0..j {
                v = v - l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / d);
        }
    }
    Ok(l.transpose())
}
