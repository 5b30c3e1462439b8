//! Dense square matrices, Cholesky factorization and triangular kernels.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.n.max(1)).take(self.n)
    }

    pub fn diagonal(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n).map(move |i| self[(i, i)])
    }

    pub fn trace(&self) -> T {
        self.diagonal().sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// `self * selfᵀ`.
    pub fn mul_transpose_self(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower Cholesky factor of a symmetric matrix.
///
/// A pivot here is the Schur-complement diagonal `d_j = V_jj - Σ_k L_jk²`
/// before the square root. Factorization fails at the first `d_j <= threshold`
/// with `threshold = rel_tol * max_i V_ii`.
pub fn cholesky<T: Scalar>(v: &DenseMatrix<T>, rel_tol: T) -> Result<DenseMatrix<T>> {
    let n = v.dim();
    let max_diag = v.diagonal().fold(T::zero(), |m, x| m.max(x));
    let threshold = rel_tol * max_diag;
    let mut l = DenseMatrix::zeros(n);
    for j in 0..n {
        let (done, rest) = l.data.split_at_mut(j * n);
        let row_j = &mut rest[..n];
        for i in 0..j {
            let row_i = &done[i * n..i * n + n];
            let s = v[(j, i)] - dot(&row_i[..i], &row_j[..i]);
            row_j[i] = s / row_i[i];
        }
        let d = v[(j, j)] - dot(&row_j[..j], &row_j[..j]);
        if !(d > threshold) {
            return Err(Error::NotPositiveDefinite {
                pivot_index: j,
                pivot_value: d.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        row_j[j] = d.sqrt();
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_solve<T: Scalar>(l: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = l.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let row = l.row(i);
        let s = b[i] - dot(&row[..i], &x[..i]);
        x.push(s / row[i]);
    }
    Ok(x)
}

/// `L z` for lower-triangular `L`.
pub fn lower_mul_vec<T: Scalar>(l: &DenseMatrix<T>, z: &[T]) -> Result<Vec<T>> {
    let n = l.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: z.len() });
    }
    Ok((0..n).map(|i| dot(&l.row(i)[..=i], &z[..=i])).collect())
}
