//! Counted matrix products.
//!
//! Counting rules, per entry of the result with inner dimension `p`:
//! overwrite costs `p` multiplications and `p - 1` additions, accumulate
//! costs `p` of each. A scaling factor other than `+-1` adds one
//! multiplication (overwrite) or one multiplication and one addition on top
//! of the overwrite cost (accumulate through a temporary).

use crate::dense::matrix::{DenseMatrix, MatMut, MatRef};
use crate::flops::FlopCounter;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    NoTrans,
    Trans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Overwrite,
    Accumulate,
}

fn is_unit<T: Scalar>(alpha: T) -> bool {
    alpha == T::one() || alpha == -T::one()
}

/// `C = alpha op(A) op(B)` or `C += alpha op(A) op(B)` depending on `mode`.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    alpha: T,
    a: MatRef<'_, T>,
    ta: Op,
    b: MatRef<'_, T>,
    tb: Op,
    mode: Mode,
    c: MatMut<'_, T>,
    flops: &mut FlopCounter,
) {
    let at;
    let a = match ta {
        Op::NoTrans => a,
        Op::Trans => {
            at = a.transpose();
            at.view()
        }
    };
    let bt;
    let b = match tb {
        Op::NoTrans => b,
        Op::Trans => {
            bt = b.transpose();
            bt.view()
        }
    };
    gemm_nn(alpha, a, b, mode, c, flops);
}

fn gemm_nn<T: Scalar>(
    alpha: T,
    a: MatRef<'_, T>,
    b: MatRef<'_, T>,
    mode: Mode,
    mut c: MatMut<'_, T>,
    flops: &mut FlopCounter,
) {
    let (m, p, n) = (a.rows(), a.cols(), b.cols());
    assert_eq!(b.rows(), p, "inner dimensions differ");
    assert_eq!((c.rows(), c.cols()), (m, n), "output shape differs");
    let entries = m * n;
    if p == 0 {
        if mode == Mode::Overwrite {
            c.fill(T::zero());
        }
        return;
    }
    let unit = is_unit(alpha);
    let negate = alpha == -T::one();
    match mode {
        Mode::Overwrite => {
            for i in 0..m {
                let arow = a.row(i);
                let crow = c.row_mut(i);
                let a0 = arow[0];
                for (cv, &bv) in crow.iter_mut().zip(b.row(0)) {
                    *cv = a0 * bv;
                }
                for (pp, &av) in arow.iter().enumerate().skip(1) {
                    for (cv, &bv) in crow.iter_mut().zip(b.row(pp)) {
                        *cv += av * bv;
                    }
                }
                if negate {
                    crow.iter_mut().for_each(|x| *x = -*x);
                } else if !unit {
                    crow.iter_mut().for_each(|x| *x *= alpha);
                }
            }
            flops.count_mul(entries * p + if unit { 0 } else { entries });
            flops.count_add(entries * (p - 1));
        }
        Mode::Accumulate if unit => {
            for i in 0..m {
                let arow = a.row(i);
                let crow = c.row_mut(i);
                for (pp, &av) in arow.iter().enumerate() {
                    let av = if negate { -av } else { av };
                    for (cv, &bv) in crow.iter_mut().zip(b.row(pp)) {
                        *cv += av * bv;
                    }
                }
            }
            flops.count_fma(entries * p);
        }
        Mode::Accumulate => {
            let mut tmp = vec![T::zero(); n];
            for i in 0..m {
                let arow = a.row(i);
                let a0 = arow[0];
                for (tv, &bv) in tmp.iter_mut().zip(b.row(0)) {
                    *tv = a0 * bv;
                }
                for (pp, &av) in arow.iter().enumerate().skip(1) {
                    for (tv, &bv) in tmp.iter_mut().zip(b.row(pp)) {
                        *tv += av * bv;
                    }
                }
                for (cv, &tv) in c.row_mut(i).iter_mut().zip(&tmp) {
                    *cv += alpha * tv;
                }
            }
            flops.count_mul(entries * (p + 1));
            flops.count_add(entries * p);
        }
    }
}

/// Allocating `op(A) op(B)`.
pub fn matmul<T: Scalar>(
    a: MatRef<'_, T>,
    ta: Op,
    b: MatRef<'_, T>,
    tb: Op,
    flops: &mut FlopCounter,
) -> DenseMatrix<T> {
    let m = if ta == Op::NoTrans { a.rows() } else { a.cols() };
    let n = if tb == Op::NoTrans { b.cols() } else { b.rows() };
    let mut c = DenseMatrix::zeros(m, n);
    gemm(T::one(), a, ta, b, tb, Mode::Overwrite, c.view_mut(), flops);
    c
}

/// `X *= alpha`; free for `alpha = +-1`.
pub fn scale<T: Scalar>(alpha: T, mut x: MatMut<'_, T>, flops: &mut FlopCounter) {
    if alpha == T::one() {
        return;
    }
    let negate = alpha == -T::one();
    for v in x.as_mut_slice() {
        *v = if negate { -*v } else { alpha * *v };
    }
    if !negate {
        flops.count_mul(x.rows() * x.cols());
    }
}

/// `C += A`.
pub fn add_assign<T: Scalar>(mut c: MatMut<'_, T>, a: MatRef<'_, T>, flops: &mut FlopCounter) {
    assert_eq!((c.rows(), c.cols()), (a.rows(), a.cols()));
    for (cv, &av) in c.as_mut_slice().iter_mut().zip(a.as_slice()) {
        *cv += av;
    }
    flops.count_add(a.rows() * a.cols());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize, seed: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(rows, cols, |i, j| ((i * 7 + j * 3 + seed) % 11) as f64 - 5.0)
    }

    #[test]
    fn products_match_uncounted_reference() {
        let a = sample(3, 4, 1);
        let b = sample(4, 2, 2);
        let reference = a.matmul(&b);
        let mut f = FlopCounter::new();
        let c = matmul(a.view(), Op::NoTrans, b.view(), Op::NoTrans, &mut f);
        assert_eq!(c, reference);
        assert_eq!(f.mults, 3 * 2 * 4);
        assert_eq!(f.adds, 3 * 2 * 3);

        let at = a.transpose();
        let bt = b.transpose();
        let mut f = FlopCounter::new();
        let c = matmul(at.view(), Op::Trans, bt.view(), Op::Trans, &mut f);
        assert_eq!(c, reference);
    }

    #[test]
    fn accumulate_counts() {
        let a = sample(2, 3, 0);
        let b = sample(3, 2, 4);
        let base = sample(2, 2, 9);

        let mut c = base.clone();
        let mut f = FlopCounter::new();
        gemm(-1.0, a.view(), Op::NoTrans, b.view(), Op::NoTrans, Mode::Accumulate, c.view_mut(), &mut f);
        assert_eq!(c, base.sub(&a.matmul(&b)));
        assert_eq!(f.total, 4 * 6);

        let mut c = base.clone();
        let mut f = FlopCounter::new();
        gemm(0.5, a.view(), Op::NoTrans, b.view(), Op::NoTrans, Mode::Accumulate, c.view_mut(), &mut f);
        let expect = base.add(&a.matmul(&b).scaled(0.5));
        assert!(c.sub(&expect).frobenius_norm() < 1e-14);
        assert_eq!(f.total, 4 * 7);

        let mut c = base.clone();
        let mut f = FlopCounter::new();
        gemm(2.0, a.view(), Op::NoTrans, b.view(), Op::NoTrans, Mode::Overwrite, c.view_mut(), &mut f);
        assert_eq!(c, a.matmul(&b).scaled(2.0));
        assert_eq!(f.total, 4 * 6);
    }

    #[test]
    fn empty_inner_dimension() {
        let a = DenseMatrix::<f64>::zeros(2, 0);
        let b = DenseMatrix::<f64>::zeros(0, 3);
        let mut c = DenseMatrix::from_fn(2, 3, |_, _| 1.0);
        let mut f = FlopCounter::new();
        gemm(1.0, a.view(), Op::NoTrans, b.view(), Op::NoTrans, Mode::Accumulate, c.view_mut(), &mut f);
        assert_eq!(c[(1, 2)], 1.0);
        gemm(1.0, a.view(), Op::NoTrans, b.view(), Op::NoTrans, Mode::Overwrite, c.view_mut(), &mut f);
        assert_eq!(c[(1, 2)], 0.0);
        assert_eq!(f.total, 0);
    }
}
