//! Small dense linear algebra over any [`Scalar`].

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Submatrix with the given row and column index sequences (order kept).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput("dimension mismatch in product".into()));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    /// The empty matrix has determinant one.
    pub fn determinant(&self) -> T {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for k in 0..n {
            let mut best = k;
            let mut best_w = a[k * n + k].pivot_weight();
            for r in k + 1..n {
                let w = a[r * n + k].pivot_weight();
                if w > best_w {
                    best = r;
                    best_w = w;
                }
            }
            if a[best * n + k].is_exact_zero() {
                return T::zero();
            }
            if best != k {
                for c in 0..n {
                    a.swap(k * n + c, best * n + c);
                }
                det = -det;
            }
            let pivot = a[k * n + k].clone();
            det = det * pivot.clone();
            for r in k + 1..n {
                let factor = a[r * n + k].clone() / pivot.clone();
                if factor.is_exact_zero() {
                    continue;
                }
                for c in k + 1..n {
                    let v = a[r * n + c].clone() - factor.clone() * a[k * n + c].clone();
                    a[r * n + c] = v;
                }
            }
        }
        det
    }

    /// Solves `self * X = rhs` for a square `self`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        if !self.is_square() || rhs.rows != self.rows {
            return Err(Error::InvalidInput("dimension mismatch in solve".into()));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for k in 0..n {
            let mut best = k;
            let mut best_w = a[k * n + k].pivot_weight();
            for r in k + 1..n {
                let w = a[r * n + k].pivot_weight();
                if w > best_w {
                    best = r;
                    best_w = w;
                }
            }
            if a[best * n + k].is_exact_zero() {
                return Err(Error::Singular);
            }
            if best != k {
                for c in 0..n {
                    a.swap(k * n + c, best * n + c);
                }
                for c in 0..m {
                    b.swap(k * m + c, best * m + c);
                }
            }
            let pivot = a[k * n + k].clone();
            for r in 0..n {
                if r == k {
                    continue;
                }
                let factor = a[r * n + k].clone() / pivot.clone();
                if factor.is_exact_zero() {
                    continue;
                }
                for c in k..n {
                    let v = a[r * n + c].clone() - factor.clone() * a[k * n + c].clone();
                    a[r * n + c] = v;
                }
                for c in 0..m {
                    let v = b[r * m + c].clone() - factor.clone() * b[k * m + c].clone();
                    b[r * m + c] = v;
                }
            }
        }
        for k in 0..n {
            let pivot = a[k * n + k].clone();
            for c in 0..m {
                let v = b[k * m + c].clone() / pivot.clone();
                b[k * m + c] = v;
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: b,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.rows))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Determinant of a small `f64` matrix given as a flat row-major slice.
pub fn det_f64(n: usize, entries: &[f64]) -> f64 {
    let mut a = entries.to_vec();
    let mut det = 1.0;
    for k in 0..n {
        let mut best = k;
        for r in k + 1..n {
            if a[r * n + k].abs() > a[best * n + k].abs() {
                best = r;
            }
        }
        let p = a[best * n + k];
        if p == 0.0 {
            return 0.0;
        }
        if best != k {
            for c in 0..n {
                a.swap(k * n + c, best * n + c);
            }
            det = -det;
        }
        det *= p;
        for r in k + 1..n {
            let f = a[r * n + k] / p;
            if f != 0.0 {
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64) -> Rational {
        Rational::from_i64(n)
    }

    #[test]
    fn det_and_inverse_exact() {
        let m = DenseMatrix::from_rows(vec![
            vec![q(2), q(1), q(0)],
            vec![q(1), q(3), q(1)],
            vec![q(0), q(1), q(4)],
        ])
        .unwrap();
        assert_eq!(m.determinant(), q(18));
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), DenseMatrix::identity(3));
    }

    #[test]
    fn singular_and_empty() {
        let m = DenseMatrix::from_rows(vec![vec![q(1), q(2)], vec![q(2), q(4)]]).unwrap();
        assert_eq!(m.determinant(), q(0));
        assert_eq!(m.inverse(), Err(Error::Singular));
        assert_eq!(DenseMatrix::<Rational>::zeros(0, 0).determinant(), q(1));
    }

    #[test]
    fn float_det_matches_flat() {
        let m = DenseMatrix::from_rows(vec![vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert!((m.determinant() + 6.0).abs() < 1e-15);
        assert!((det_f64(2, &[0.0, 2.0, 3.0, 1.0]) + 6.0).abs() < 1e-15);
    }
}
