//! Unpivoted LR factorization and the triangular kernels used at leaves.
//!
//! Lower factors always carry an implicit unit diagonal: the kernels never
//! read the diagonal of a lower operand, so a packed matrix holding `L`
//! strictly below and `R` on and above the diagonal can be passed for either
//! side.

use serde::{Deserialize, Serialize};

use crate::dense::matrix::{DenseMatrix, MatMut, MatRef};
use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Unit lower triangular.
    Lower,
    Upper,
}

fn check_square<T: Scalar>(m: MatRef<'_, T>, what: &str) -> Result<usize> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.rows())
}

fn check_diagonal<T: Scalar>(t: MatRef<'_, T>, pivot_tol: f64) -> Result<()> {
    for i in 0..t.rows() {
        let d = t.get(i, i);
        if d == T::zero() || d.abs().to_f64_lossy() < pivot_tol || !d.is_finite() {
            return Err(Error::SingularDiagonal { index: i, value: d.abs().to_f64_lossy() });
        }
    }
    Ok(())
}

/// `y[dst] -= coef * y[src]` on rows of a row-major buffer.
#[inline]
fn row_axpy<T: Scalar>(y: &mut [T], cols: usize, dst: usize, src: usize, coef: T) {
    debug_assert_ne!(dst, src);
    let (d, s) = if dst < src {
        let (lo, hi) = y.split_at_mut(src * cols);
        (&mut lo[dst * cols..(dst + 1) * cols], &hi[..cols])
    } else {
        let (lo, hi) = y.split_at_mut(dst * cols);
        (&mut hi[..cols], &lo[src * cols..(src + 1) * cols])
    };
    for (dv, &sv) in d.iter_mut().zip(s) {
        *dv -= coef * sv;
    }
}

/// Factorizes `M = L R` in place: afterwards the strictly lower part holds
/// `L` (unit diagonal implied) and the upper part holds `R`.
///
/// Elimination step with `d` remaining rows costs `d` divisions and `d^2`
/// multiplications and additions each.
pub fn lr_inplace<T: Scalar>(mut m: MatMut<'_, T>, pivot_tol: f64, flops: &mut FlopCounter) -> Result<()> {
    let n = check_square(m.rb(), "LR operand")?;
    let threshold = pivot_tol * m.rb().max_abs().to_f64_lossy();
    let data = m.as_mut_slice();
    for l in 0..n {
        let pivot = data[l * n + l];
        let mag = pivot.abs().to_f64_lossy();
        if pivot == T::zero() || mag < threshold || !pivot.is_finite() {
            return Err(Error::PivotBreakdown { step: l, pivot: mag, threshold });
        }
        let d = n - 1 - l;
        for i in l + 1..n {
            let factor = data[i * n + l] / pivot;
            data[i * n + l] = factor;
            let (upper, lower) = data.split_at_mut(i * n);
            let prow = &upper[l * n + l + 1..l * n + n];
            for (x, &p) in lower[l + 1..n].iter_mut().zip(prow) {
                *x -= factor * p;
            }
        }
        flops.count_div(d);
        flops.count_fma(d * d);
    }
    Ok(())
}

/// Unpivoted LR factorization `M = L R` with unit lower `L`.
pub fn dense_lr<T: Scalar>(
    m: MatRef<'_, T>,
    pivot_tol: f64,
    flops: &mut FlopCounter,
) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let n = check_square(m, "LR operand")?;
    let mut packed = m.to_owned();
    lr_inplace(packed.view_mut(), pivot_tol, flops)?;
    Ok(unpack_lr(&packed, n))
}

/// Splits a packed factorization into explicit `L` and `R`.
pub fn unpack_lr<T: Scalar>(packed: &DenseMatrix<T>, n: usize) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => packed[(i, j)],
        std::cmp::Ordering::Equal => T::one(),
        std::cmp::Ordering::Less => T::zero(),
    });
    let r = DenseMatrix::from_fn(n, n, |i, j| if i <= j { packed[(i, j)] } else { T::zero() });
    (l, r)
}

/// Solves `op(T) X = Y` in place, overwriting `Y` with `X`.
///
/// Costs `l n (n-1)` operations for the unit lower side and exactly `l n^2`
/// for the upper side, `l` being the number of columns.
pub fn solve_triangular_inplace<T: Scalar>(
    side: Side,
    transposed: bool,
    t: MatRef<'_, T>,
    mut y: MatMut<'_, T>,
    pivot_tol: f64,
    flops: &mut FlopCounter,
) -> Result<()> {
    let n = check_square(t, "triangular factor")?;
    if y.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, factor is {n}x{n}",
            y.rows()
        )));
    }
    if side == Side::Upper {
        check_diagonal(t, pivot_tol)?;
    }
    let cols = y.cols();
    let data = y.as_mut_slice();
    match (side, transposed) {
        (Side::Lower, false) => {
            for i in 0..n {
                for m in 0..i {
                    row_axpy(data, cols, i, m, t.get(i, m));
                }
            }
        }
        (Side::Lower, true) => {
            for i in (0..n).rev() {
                for m in i + 1..n {
                    row_axpy(data, cols, i, m, t.get(m, i));
                }
            }
        }
        (Side::Upper, false) => {
            for i in (0..n).rev() {
                for m in i + 1..n {
                    row_axpy(data, cols, i, m, t.get(i, m));
                }
                let d = t.get(i, i);
                data[i * cols..(i + 1) * cols].iter_mut().for_each(|x| *x /= d);
            }
        }
        (Side::Upper, true) => {
            for i in 0..n {
                for m in 0..i {
                    row_axpy(data, cols, i, m, t.get(m, i));
                }
                let d = t.get(i, i);
                data[i * cols..(i + 1) * cols].iter_mut().for_each(|x| *x /= d);
            }
        }
    }
    flops.count_fma(cols * n * n.saturating_sub(1) / 2);
    if side == Side::Upper {
        flops.count_div(cols * n);
    }
    Ok(())
}

/// Solves `op(T) X = Y` and returns `X`.
pub fn dense_solve_triangular<T: Scalar>(
    side: Side,
    transposed: bool,
    t: MatRef<'_, T>,
    y: MatRef<'_, T>,
    pivot_tol: f64,
    flops: &mut FlopCounter,
) -> Result<DenseMatrix<T>> {
    let mut x = y.to_owned();
    solve_triangular_inplace(side, transposed, t, x.view_mut(), pivot_tol, flops)?;
    Ok(x)
}

/// Inverts a triangular matrix column by column.
///
/// Both sides run the same algorithm: the diagonal entry of a column is
/// inverted with one division (the implied unit diagonal of a lower factor
/// included), each off-diagonal entry with `q` terms costs `2q` operations.
/// A column with `d` entries below (lower) or above (upper) the diagonal
/// therefore costs `1 + d + d^2`.
pub fn dense_invert_triangular<T: Scalar>(
    side: Side,
    t: MatRef<'_, T>,
    pivot_tol: f64,
    flops: &mut FlopCounter,
) -> Result<DenseMatrix<T>> {
    let n = check_square(t, "triangular factor")?;
    if side == Side::Upper {
        check_diagonal(t, pivot_tol)?;
    }
    let mut x = DenseMatrix::zeros(n, n);
    let mut inv = vec![T::zero(); n];
    match side {
        Side::Lower => {
            for j in (0..n).rev() {
                inv[j] = T::one() / T::one();
                x[(j, j)] = inv[j];
                for i in j + 1..n {
                    let mut sum = t.get(i, j) * x[(j, j)];
                    for m in j + 1..i {
                        sum += t.get(i, m) * x[(m, j)];
                    }
                    x[(i, j)] = -(inv[i] * sum);
                }
                let d = n - 1 - j;
                flops.count_div(1);
                flops.count_mul(d * (d + 1) / 2 + d);
                flops.count_add(d * (d + 1) / 2 - d);
            }
        }
        Side::Upper => {
            for j in 0..n {
                inv[j] = T::one() / t.get(j, j);
                x[(j, j)] = inv[j];
                for i in (0..j).rev() {
                    let mut sum = t.get(i, j) * x[(j, j)];
                    for m in i + 1..j {
                        sum += t.get(i, m) * x[(m, j)];
                    }
                    x[(i, j)] = -(inv[i] * sum);
                }
                let d = j;
                flops.count_div(1);
                flops.count_mul(d * (d + 1) / 2 + d);
                flops.count_add(d * (d + 1) / 2 - d);
            }
        }
    }
    Ok(x)
}

/// `R L` for upper `R` and unit lower `L`.
///
/// Entry `(i, j)` sums over `m >= max(i, j)`; for `i <= j` the unit diagonal
/// of `L` saves the leading multiplication.
pub fn dense_rl_product<T: Scalar>(
    r: MatRef<'_, T>,
    l: MatRef<'_, T>,
    flops: &mut FlopCounter,
) -> Result<DenseMatrix<T>> {
    let n = check_square(r, "upper factor")?;
    if check_square(l, "lower factor")? != n {
        return Err(Error::DimensionMismatch(format!(
            "factors of sizes {n} and {} differ",
            l.rows()
        )));
    }
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = if i <= j {
                let mut sum = r.get(i, j);
                for m in j + 1..n {
                    sum += r.get(i, m) * l.get(m, j);
                }
                sum
            } else {
                let mut sum = r.get(i, i) * l.get(i, j);
                for m in i + 1..n {
                    sum += r.get(i, m) * l.get(m, j);
                }
                sum
            };
            g[(i, j)] = v;
        }
    }
    // Column j contributes (j+1) entries of 2(n-1-j) and (n-1-j) entries
    // with 2(n-i)-1 for i in j+1..n.
    for j in 0..n {
        let d = n - 1 - j;
        flops.count_fma((j + 1) * d);
        flops.count_mul(d * (d + 1) / 2);
        flops.count_add(d * (d + 1) / 2 - d);
    }
    Ok(g)
}

/// Closed-form operation counts of the three dense kernels.
pub mod counts {
    /// `n/6 (4n^2 - 3n - 1)`: LR factorization and RL product.
    pub fn lr(n: u64) -> u64 {
        n * (4 * n * n - 3 * n - 1) / 6
    }

    /// `n/6 (2n^2 + 4)`: triangular inversion, either side.
    pub fn invert(n: u64) -> u64 {
        n * (2 * n * n + 4) / 6
    }

    pub fn rl_product(n: u64) -> u64 {
        lr(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m2() -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]])
    }

    #[test]
    fn lr_hand_example() {
        let mut f = FlopCounter::new();
        let (l, r) = dense_lr(m2().view(), 1e-14, &mut f).unwrap();
        assert_eq!(l, DenseMatrix::from_rows(&[[1.0, 0.0], [0.5, 1.0]]));
        assert_eq!(r, DenseMatrix::from_rows(&[[4.0, 2.0], [0.0, 2.0]]));
        assert_eq!(f.total, 3);
    }

    #[test]
    fn lr_identity_and_breakdown() {
        let mut f = FlopCounter::new();
        let (l, r) = dense_lr(DenseMatrix::<f64>::identity(3).view(), 1e-14, &mut f).unwrap();
        assert_eq!(l, DenseMatrix::identity(3));
        assert_eq!(r, DenseMatrix::identity(3));
        let singular = DenseMatrix::from_rows(&[[0.0f64, 1.0], [1.0, 0.0]]);
        assert!(matches!(
            dense_lr(singular.view(), 1e-14, &mut f),
            Err(Error::PivotBreakdown { step: 0, .. })
        ));
        let rect = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(dense_lr(rect.view(), 1e-14, &mut f), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn lr_count_n4() {
        let m = DenseMatrix::<f64>::from_fn(4, 4, |i, j| if i == j { 10.0 } else { 1.0 / (1 + i + j) as f64 });
        let mut f = FlopCounter::new();
        dense_lr(m.view(), 1e-14, &mut f).unwrap();
        assert_eq!(f.total, 34);
        assert_eq!(counts::lr(4), 34);
    }

    #[test]
    fn solves() {
        let l = DenseMatrix::from_rows(&[[1.0, 0.0], [0.5, 1.0]]);
        let y = DenseMatrix::from_rows(&[[1.0], [1.0]]);
        let mut f = FlopCounter::new();
        let x = dense_solve_triangular(Side::Lower, false, l.view(), y.view(), 1e-14, &mut f).unwrap();
        assert_eq!(x, DenseMatrix::from_rows(&[[1.0], [0.5]]));

        let r = DenseMatrix::from_rows(&[[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [0.0, 0.0, 4.0]]);
        let y = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 + 1.0);
        let mut f = FlopCounter::new();
        let x = dense_solve_triangular(Side::Upper, false, r.view(), y.view(), 1e-14, &mut f).unwrap();
        assert_eq!(f.total, 18);
        assert!(r.matmul(&x).sub(&y).frobenius_norm() < 1e-14);
        let x = dense_solve_triangular(Side::Upper, true, r.view(), y.view(), 1e-14, &mut f).unwrap();
        assert!(r.transpose().matmul(&x).sub(&y).frobenius_norm() < 1e-14);

        let id = DenseMatrix::<f64>::identity(3);
        let x = dense_solve_triangular(Side::Upper, false, id.view(), y.view(), 1e-14, &mut f).unwrap();
        assert_eq!(x, y);

        let sing = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(
            dense_solve_triangular(Side::Upper, false, sing.view(), l.view(), 1e-14, &mut f),
            Err(Error::SingularDiagonal { index: 1, .. })
        ));
    }

    #[test]
    fn lower_kernels_ignore_diagonal() {
        let packed = DenseMatrix::from_rows(&[[4.0, 2.0], [0.5, 2.0]]);
        let y = DenseMatrix::from_rows(&[[1.0], [1.0]]);
        let mut f = FlopCounter::new();
        let x = dense_solve_triangular(Side::Lower, false, packed.view(), y.view(), 0.0, &mut f).unwrap();
        assert_eq!(x, DenseMatrix::from_rows(&[[1.0], [0.5]]));
        let inv = dense_invert_triangular(Side::Lower, packed.view(), 0.0, &mut f).unwrap();
        assert_eq!(inv, DenseMatrix::from_rows(&[[1.0, 0.0], [-0.5, 1.0]]));
    }

    #[test]
    fn inversion() {
        let mut f = FlopCounter::new();
        let id = DenseMatrix::<f64>::identity(2);
        assert_eq!(dense_invert_triangular(Side::Upper, id.view(), 1e-14, &mut f).unwrap(), id);
        let r = DenseMatrix::from_rows(&[[2.0, 1.0, 0.5], [0.0, 3.0, 1.0], [0.0, 0.0, 4.0]]);
        let mut f = FlopCounter::new();
        let ri = dense_invert_triangular(Side::Upper, r.view(), 1e-14, &mut f).unwrap();
        assert_eq!(f.total, 11);
        assert!(r.matmul(&ri).sub(&DenseMatrix::identity(3)).frobenius_norm() < 1e-15);
        let l = r.transpose();
        let mut f = FlopCounter::new();
        let li = dense_invert_triangular(Side::Lower, l.view(), 1e-14, &mut f).unwrap();
        assert_eq!(f.total, 11);
        let (lu, _) = unpack_lr(&l, 3);
        assert!(lu.matmul(&li).sub(&DenseMatrix::identity(3)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn rl_product_hand_example() {
        let r = DenseMatrix::from_rows(&[[4.0, 2.0], [0.0, 2.0]]);
        let l = DenseMatrix::from_rows(&[[1.0, 0.0], [0.5, 1.0]]);
        let mut f = FlopCounter::new();
        let g = dense_rl_product(r.view(), l.view(), &mut f).unwrap();
        assert_eq!(g, DenseMatrix::from_rows(&[[5.0, 2.0], [1.0, 2.0]]));
        assert_eq!(f.total, 3);
        let l3 = DenseMatrix::<f64>::identity(3);
        assert!(matches!(
            dense_rl_product(r.view(), l3.view(), &mut f),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn closed_forms_small() {
        assert_eq!(counts::invert(3), 11);
        assert_eq!(counts::rl_product(2), 3);
        assert_eq!(counts::lr(1), 0);
        assert_eq!(counts::invert(1), 1);
    }
}
