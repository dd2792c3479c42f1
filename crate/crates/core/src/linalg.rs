//! Dense row-major matrices and a Householder least-squares solver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;
use crate::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row-major storage.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix storage length",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "row length",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
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
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Appends the columns of `other` to the right of `self`.
    pub fn hstack(&self, other: &Matrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                what: "row count",
                expected: self.rows,
                found: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative threshold on the diagonal of `R` below which a design is
/// considered rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Solves `min ‖A x − B‖₂` column by column with a Householder QR of `A`.
///
/// `A` is `m×k` with `m ≥ k`; the result is `k×r` for an `m×r` right-hand
/// side. Fails with [`Error::RankDeficient`] when some `|R_jj|` falls below
/// [`RANK_TOLERANCE`] times the largest column norm of `A`.
pub fn least_squares(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let (m, k) = (a.rows(), a.cols());
    if b.rows() != m {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: m,
            found: b.rows(),
        });
    }
    if m < k {
        return Err(Error::InsufficientRows {
            needed: k,
            found: m,
        });
    }
    let r_cols = b.cols();
    let mut qr = a.clone();
    let mut rhs = b.clone();

    let scale = (0..k)
        .map(|j| math::sqrt((0..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum::<f64>()))
        .fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(Error::RankDeficient);
    }

    let mut v = vec![0.0; m];
    for j in 0..k {
        let norm = math::sqrt((j..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum::<f64>());
        if norm <= RANK_TOLERANCE * scale {
            return Err(Error::RankDeficient);
        }
        let alpha = if qr[(j, j)] > 0.0 { -norm } else { norm };
        for i in j..m {
            v[i] = qr[(i, j)];
        }
        v[j] -= alpha;
        let vnorm2: f64 = (j..m).map(|i| v[i] * v[i]).sum();
        if vnorm2 > 0.0 {
            for c in j..k {
                let dot: f64 = (j..m).map(|i| v[i] * qr[(i, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..m {
                    qr[(i, c)] -= f * v[i];
                }
            }
            for c in 0..r_cols {
                let dot: f64 = (j..m).map(|i| v[i] * rhs[(i, c)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..m {
                    rhs[(i, c)] -= f * v[i];
                }
            }
        }
        qr[(j, j)] = alpha;
    }

    let mut x = Matrix::zeros(k, r_cols);
    for c in 0..r_cols {
        for j in (0..k).rev() {
            let mut s = rhs[(j, c)];
            for l in j + 1..k {
                s -= qr[(j, l)] * x[(l, c)];
            }
            x[(j, c)] = s / qr[(j, j)];
        }
    }
    Ok(x)
}
