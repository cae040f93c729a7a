//! Dense row-major square matrices for the small `N × N` kernels.

use std::ops::{Index, IndexMut, Mul};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// `Σ w · a bᵀ` style outer product `a bᵀ`.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = a[r] * b[c];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.dim).map(|r| self[(r, c)]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.dim).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| crate::scalar::dot(self.row(r), v))
            .collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `‖A − Aᵀ‖_F`.
    pub fn asymmetry(&self) -> T {
        let mut acc = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let d = self[(r, c)] - self[(c, r)];
                acc = acc + d * d;
            }
        }
        acc.sqrt()
    }

    /// `‖A Aᵀ − I‖_F`.
    pub fn orthogonality_error(&self) -> T {
        (self * &self.transpose())
            .sub(&Self::identity(self.dim))
            .frobenius_norm()
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn determinant(&self) -> T {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| {
                    a[x * n + col]
                        .abs()
                        .partial_cmp(&a[y * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[pivot * n + col] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for c in 0..n {
                    a.swap(pivot * n + c, col * n + c);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det = det * p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for c in col..n {
                    a[r * n + c] = a[r * n + c] - f * a[col * n + c];
                }
            }
        }
        det
    }
}

impl<T> Index<(usize, usize)> for SquareMatrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.dim + c]
    }
}

impl<T> IndexMut<(usize, usize)> for SquareMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Real> Mul for &SquareMatrix<T> {
    type Output = SquareMatrix<T>;

    fn mul(self, rhs: &SquareMatrix<T>) -> SquareMatrix<T> {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = SquareMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == T::zero() {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] = out[(r, c)] + a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn determinant_of_permutation_and_triangular() {
        let p = SquareMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(p.determinant(), -1.0);

        let t = SquareMatrix::from_rows(&[vec![2.0, 5.0], vec![0.0, -3.0]]).unwrap();
        assert_relative_eq!(t.determinant(), -6.0);
        assert_eq!(SquareMatrix::<f64>::zeros(3).determinant(), 0.0);
    }

    #[test]
    fn product_and_transpose() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = &a * &a.transpose();
        assert_eq!(b.rows(), vec![vec![5.0, 11.0], vec![11.0, 25.0]]);
        assert_eq!(a.mul_vec(&[1.0, -1.0]), vec![-1.0, -1.0]);
        assert_eq!(b.asymmetry(), 0.0);
        assert_eq!(a.trace(), 5.0);
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(SquareMatrix::<f64>::from_row_major(0, vec![]).is_err());
    }
}
