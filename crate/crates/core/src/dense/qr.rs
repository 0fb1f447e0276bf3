//! Householder QR.

use crate::dense::matrix::{DenseMatrix, MatRef};
use crate::flops::FlopCounter;
use crate::scalar::Scalar;

/// Thin Householder factorization `B = Q R` with `Q` of size `m x p`,
/// `R` of size `p x n` and `p = min(m, n)`.
///
/// Reflector signs follow the cancellation-free choice, so `Q` is only
/// determined up to column signs.
pub fn thin_qr<T: Scalar>(b: MatRef<'_, T>, flops: &mut FlopCounter) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let (m, n) = (b.rows(), b.cols());
    let p = m.min(n);
    // Column-major working copy.
    let mut a = vec![T::zero(); m * n];
    for i in 0..m {
        for j in 0..n {
            a[j * m + i] = b.get(i, j);
        }
    }
    let mut tau = vec![T::zero(); p];
    for j in 0..p {
        let len = m - j;
        let (head, tail) = a.split_at_mut((j + 1) * m);
        let col = &mut head[j * m + j..j * m + m];
        let alpha = col[0];
        let mut xnorm2 = T::zero();
        for &x in &col[1..] {
            xnorm2 += x * x;
        }
        flops.count_mul(len - 1);
        flops.count_add(len.saturating_sub(2));
        if xnorm2 == T::zero() {
            continue;
        }
        let norm = (alpha * alpha + xnorm2).sqrt();
        let beta = if alpha >= T::zero() { -norm } else { norm };
        tau[j] = (beta - alpha) / beta;
        let scal = T::one() / (alpha - beta);
        for x in &mut col[1..] {
            *x *= scal;
        }
        col[0] = beta;
        flops.count_mul(1 + (len - 1));
        flops.count_add(1 + 1 + 1);
        flops.count_div(1 + 1 + 1);

        let v = &col[1..];
        for c in 0..n - j - 1 {
            let target = &mut tail[c * m + j..c * m + m];
            let mut w = target[0];
            for (&vi, &ti) in v.iter().zip(&target[1..]) {
                w += vi * ti;
            }
            w *= tau[j];
            target[0] -= w;
            for (&vi, ti) in v.iter().zip(&mut target[1..]) {
                *ti -= vi * w;
            }
        }
        let cols = n - j - 1;
        flops.count_mul(cols * (2 * (len - 1) + 1));
        flops.count_add(cols * (2 * (len - 1) + 1));
    }

    let mut r = DenseMatrix::zeros(p, n);
    for i in 0..p {
        for j in i..n {
            r[(i, j)] = a[j * m + i];
        }
    }

    // Backward accumulation of the reflectors applied to the first p unit vectors.
    let mut q = vec![T::zero(); m * p];
    for j in 0..p {
        q[j * m + j] = T::one();
    }
    for j in (0..p).rev() {
        if tau[j] == T::zero() {
            continue;
        }
        let len = m - j;
        let v = &a[j * m + j + 1..j * m + m];
        for c in j..p {
            let target = &mut q[c * m + j..c * m + m];
            let mut w = target[0];
            for (&vi, &ti) in v.iter().zip(&target[1..]) {
                w += vi * ti;
            }
            w *= tau[j];
            target[0] -= w;
            for (&vi, ti) in v.iter().zip(&mut target[1..]) {
                *ti -= vi * w;
            }
        }
        let cols = p - j;
        flops.count_mul(cols * (2 * (len - 1) + 1));
        flops.count_add(cols * (2 * (len - 1) + 1));
    }
    let q = DenseMatrix::from_fn(m, p, |i, j| q[j * m + i]);
    (q, r)
}
