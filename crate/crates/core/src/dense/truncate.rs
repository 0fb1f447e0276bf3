//! Rank truncation through a thin QR of the long side and an SVD of the core.

use crate::dense::blas::{matmul, Op};
use crate::dense::matrix::{DenseMatrix, MatRef};
use crate::dense::qr::thin_qr;
use crate::dense::svd::jacobi_svd;
use crate::flops::FlopCounter;
use crate::scalar::Scalar;

/// Number of singular values kept: at most `max_rank`, only positive ones
/// and only those above `rel_tol` times the largest.
pub fn select_rank<T: Scalar>(sigma: &[T], max_rank: usize, rel_tol: f64) -> usize {
    let Some(&first) = sigma.first() else { return 0 };
    let cutoff = T::from_f64_lossy(rel_tol) * first;
    sigma
        .iter()
        .take(max_rank)
        .take_while(|&&s| s > T::zero() && s > cutoff)
        .count()
}

/// Approximates `M` by `C D^T` with `D` isometric.
pub fn truncate_lowrank<T: Scalar>(
    m: MatRef<'_, T>,
    max_rank: usize,
    rel_tol: f64,
    flops: &mut FlopCounter,
) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 || max_rank == 0 {
        return (DenseMatrix::zeros(rows, 0), DenseMatrix::zeros(cols, 0));
    }
    if rows >= cols {
        // M = Q R, R = U S V^T  =>  C = Q U S, D = V.
        let (q, r) = thin_qr(m, flops);
        let svd = jacobi_svd(r.view(), flops);
        let k = select_rank(&svd.s, max_rank, rel_tol);
        let us = DenseMatrix::from_fn(svd.u.rows(), k, |i, j| svd.u[(i, j)] * svd.s[j]);
        flops.count_mul(svd.u.rows() * k);
        let c = matmul(q.view(), Op::NoTrans, us.view(), Op::NoTrans, flops);
        (c, svd.v.leading_cols(k))
    } else {
        // M^T = Q R, R^T = U S V^T  =>  C = U S, D = Q V.
        let (q, r) = thin_qr(m.transpose().view(), flops);
        let svd = jacobi_svd(r.transpose().view(), flops);
        let k = select_rank(&svd.s, max_rank, rel_tol);
        let c = DenseMatrix::from_fn(rows, k, |i, j| svd.u[(i, j)] * svd.s[j]);
        flops.count_mul(rows * k);
        let vk = svd.v.leading_cols(k);
        let d = matmul(q.view(), Op::NoTrans, vk.view(), Op::NoTrans, flops);
        (c, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_rank_zero() {
        let mut f = FlopCounter::new();
        let (c, d) = truncate_lowrank(DenseMatrix::<f64>::zeros(3, 4).view(), 3, 0.0, &mut f);
        assert_eq!((c.shape(), d.shape()), ((3, 0), (4, 0)));
    }

    #[test]
    fn exact_rank_one() {
        let m = DenseMatrix::from_rows(&[[1.0f64, 2.0], [2.0, 4.0]]);
        let mut f = FlopCounter::new();
        let (c, d) = truncate_lowrank(m.view(), 1, 0.0, &mut f);
        assert_eq!(c.cols(), 1);
        assert!(c.matmul(&d.transpose()).sub(&m).frobenius_norm() <= 1e-12 * m.frobenius_norm());
    }

    #[test]
    fn rank_selection() {
        assert_eq!(select_rank(&[4.0f64, 2.0, 1e-3, 0.0], 10, 1e-2), 2);
        assert_eq!(select_rank(&[4.0f64, 2.0, 1e-3, 0.0], 10, 0.0), 3);
        assert_eq!(select_rank(&[4.0f64, 2.0, 1.0], 1, 0.0), 1);
        assert_eq!(select_rank::<f64>(&[], 3, 0.0), 0);
        assert_eq!(select_rank(&[0.0f64], 3, 0.0), 0);
    }

    #[test]
    fn wide_input() {
        let m = DenseMatrix::<f64>::from_fn(2, 5, |i, j| (i + 1) as f64 * (j as f64 - 1.5));
        let mut f = FlopCounter::new();
        let (c, d) = truncate_lowrank(m.view(), 2, 0.0, &mut f);
        assert!(c.matmul(&d.transpose()).sub(&m).frobenius_norm() <= 1e-13 * m.frobenius_norm());
        assert!(d.transpose().matmul(&d).sub(&DenseMatrix::identity(d.cols())).frobenius_norm() < 1e-13);
    }
}
