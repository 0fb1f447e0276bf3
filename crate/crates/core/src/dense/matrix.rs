use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Borrowed row-major matrix whose row stride equals its column count.
///
/// A contiguous range of rows is again such a view, which is all the
/// hierarchical code ever needs.
#[derive(Clone, Copy)]
pub struct MatRef<'a, T> {
    rows: usize,
    cols: usize,
    data: &'a [T],
}

pub struct MatMut<'a, T> {
    rows: usize,
    cols: usize,
    data: &'a mut [T],
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols.max(1), col: pos % cols.max(1) });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
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

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn view(&self) -> MatRef<'_, T> {
        MatRef { rows: self.rows, cols: self.cols, data: &self.data }
    }

    pub fn view_mut(&mut self) -> MatMut<'_, T> {
        MatMut { rows: self.rows, cols: self.cols, data: &mut self.data }
    }

    pub fn rows_range(&self, lo: usize, hi: usize) -> MatRef<'_, T> {
        self.view().rows_range(lo, hi)
    }

    pub fn rows_range_mut(&mut self, lo: usize, hi: usize) -> MatMut<'_, T> {
        self.view_mut().into_rows_range(lo, hi)
    }

    pub fn transpose(&self) -> Self {
        self.view().transpose()
    }

    pub fn frobenius_norm(&self) -> T {
        self.view().frobenius_norm()
    }

    pub fn max_abs(&self) -> T {
        self.view().max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Entrywise difference, uncounted. Panics on shape mismatch.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let data = self.data.iter().map(|&a| alpha * a).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Plain product without flop accounting, meant for oracles and assembly.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for p in 0..self.cols {
                let a = self.data[i * self.cols + p];
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(other.row(p)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Copies the block `[r0, r0+rows) x [c0, c0+cols)`.
    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            out.row_mut(i).copy_from_slice(&self.row(r0 + i)[c0..c0 + cols]);
        }
        out
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: MatRef<'_, T>) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            let cols = self.cols;
            self.data[(r0 + i) * cols + c0..(r0 + i) * cols + c0 + block.cols]
                .copy_from_slice(block.row(i));
        }
    }

    /// Copies the first `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        self.submatrix(0, 0, self.rows, k)
    }

    /// `[self other]`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let cols = self.cols + other.cols;
        let mut out = Self::zeros(self.rows, cols);
        for i in 0..self.rows {
            out.row_mut(i)[..self.cols].copy_from_slice(self.row(i));
            out.row_mut(i)[self.cols..].copy_from_slice(other.row(i));
        }
        out
    }

    /// `[self; other]`.
    pub fn vcat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Self { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn neg_inplace(&mut self) {
        self.data.iter_mut().for_each(|x| *x = -*x);
    }

    pub fn cast<U: Scalar>(&self) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::from_f64_lossy(x.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<'a, T: Scalar> MatRef<'a, T> {
    pub fn new(rows: usize, cols: usize, data: &'a [T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &'a [T] {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_range(self, lo: usize, hi: usize) -> MatRef<'a, T> {
        assert!(lo <= hi && hi <= self.rows);
        MatRef { rows: hi - lo, cols: self.cols, data: &self.data[lo * self.cols..hi * self.cols] }
    }

    pub fn to_owned(&self) -> DenseMatrix<T> {
        DenseMatrix { rows: self.rows, cols: self.cols, data: self.data.to_vec() }
    }

    pub fn transpose(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        // Scaled accumulation avoids overflow for large entries.
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let sum = self.data.iter().fold(T::zero(), |acc, &x| {
            let y = x / scale;
            acc + y * y
        });
        scale * sum.sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

impl<'a, T: Scalar> MatMut<'a, T> {
    pub fn new(rows: usize, cols: usize, data: &'a mut [T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rb(&self) -> MatRef<'_, T> {
        MatRef { rows: self.rows, cols: self.cols, data: self.data }
    }

    pub fn rb_mut(&mut self) -> MatMut<'_, T> {
        MatMut { rows: self.rows, cols: self.cols, data: self.data }
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn into_rows_range(self, lo: usize, hi: usize) -> MatMut<'a, T> {
        assert!(lo <= hi && hi <= self.rows);
        MatMut { rows: hi - lo, cols: self.cols, data: &mut self.data[lo * self.cols..hi * self.cols] }
    }

    pub fn rows_range_mut(&mut self, lo: usize, hi: usize) -> MatMut<'_, T> {
        self.rb_mut().into_rows_range(lo, hi)
    }

    /// Splits into rows `[0, mid)` and `[mid, rows)`.
    pub fn split_rows_at(self, mid: usize) -> (MatMut<'a, T>, MatMut<'a, T>) {
        assert!(mid <= self.rows);
        let (a, b) = self.data.split_at_mut(mid * self.cols);
        (
            MatMut { rows: mid, cols: self.cols, data: a },
            MatMut { rows: self.rows - mid, cols: self.cols, data: b },
        )
    }

    pub fn copy_from(&mut self, src: MatRef<'_, T>) {
        assert_eq!((self.rows, self.cols), (src.rows, src.cols));
        self.data.copy_from_slice(src.data);
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            DenseMatrix::<f64>::from_vec(2, 2, vec![1.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert_eq!(
            DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { row: 1, col: 0 })
        );
    }

    #[test]
    fn views_and_blocks() {
        let m = DenseMatrix::<f64>::from_fn(4, 3, |i, j| (3 * i + j) as f64);
        let v = m.rows_range(1, 3);
        assert_eq!(v.rows(), 2);
        assert_eq!(v.get(1, 2), 8.0);
        assert_eq!(m.submatrix(1, 1, 2, 2), DenseMatrix::from_rows(&[[4.0, 5.0], [7.0, 8.0]]));
        assert_eq!(m.transpose().transpose(), m);
        let mut z = m.clone();
        let (top, mut bottom) = z.view_mut().split_rows_at(1);
        assert_eq!(top.rows(), 1);
        bottom.set(0, 0, -1.0);
        assert_eq!(z[(1, 0)], -1.0);
        assert_eq!(m.hcat(&m).cols(), 6);
        assert_eq!(m.vcat(&m).rows(), 8);
    }

    #[test]
    fn norms() {
        let m = DenseMatrix::from_rows(&[[3.0f64, 0.0], [0.0, 4.0]]);
        assert!((m.frobenius_norm() - 5.0).abs() < 1e-15);
        assert_eq!(m.max_abs(), 4.0);
        assert_eq!(DenseMatrix::<f32>::zeros(2, 0).frobenius_norm(), 0.0);
        let i2 = DenseMatrix::<f64>::identity(2);
        assert_eq!(i2.matmul(&m), m);
    }
}
