//! One-sided Jacobi singular value decomposition.

use crate::dense::matrix::{DenseMatrix, MatRef};
use crate::flops::FlopCounter;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

/// Thin SVD `M = U diag(s) V^T` with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: DenseMatrix<T>,
    pub s: Vec<T>,
    pub v: DenseMatrix<T>,
    pub sweeps: usize,
}

pub fn jacobi_svd<T: Scalar>(m: MatRef<'_, T>, flops: &mut FlopCounter) -> Svd<T> {
    if m.rows() < m.cols() {
        let t = m.transpose();
        let Svd { u, s, v, sweeps } = jacobi_svd(t.view(), flops);
        return Svd { u: v, s, v: u, sweeps };
    }
    let (rows, n) = (m.rows(), m.cols());
    let mut u: Vec<Vec<T>> = (0..n).map(|j| (0..rows).map(|i| m.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    let two = T::one() + T::one();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && n > 1 {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (left, right) = u.split_at_mut(q);
                let (up, uq) = (&mut left[p], &mut right[0]);
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for (&x, &y) in up.iter().zip(uq.iter()) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                flops.count_mul(3 * rows);
                flops.count_add(3 * rows.saturating_sub(1));
                flops.count_mul(2);
                flops.count_div(1);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                flops.count_add(1 + 2 + 1);
                flops.count_mul(1 + 1 + 1 + 1);
                flops.count_div(1 + 2 + 2);
                for (x, y) in up.iter_mut().zip(uq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                let (left, right) = v.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                flops.count_mul(4 * (rows + n));
                flops.count_add(2 * (rows + n));
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<T> = Vec::with_capacity(n);
    for col in &mut u {
        let norm = col.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        flops.count_mul(rows);
        flops.count_add(rows.saturating_sub(1));
        flops.count_div(1);
        if norm > T::zero() {
            let inv = T::one() / norm;
            col.iter_mut().for_each(|x| *x *= inv);
            flops.count_div(1);
            flops.count_mul(rows);
        } else {
            col.iter_mut().for_each(|x| *x = T::zero());
        }
        sigma.push(norm);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap_or(std::cmp::Ordering::Equal));
    let uu = DenseMatrix::from_fn(rows, n, |i, j| u[order[j]][i]);
    let vv = DenseMatrix::from_fn(n, n, |i, j| v[order[j]][i]);
    let s = order.iter().map(|&j| sigma[j]).collect();
    Svd { u: uu, s, v: vv, sweeps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd<f64>) -> DenseMatrix<f64> {
        let us = DenseMatrix::from_fn(svd.u.rows(), svd.s.len(), |i, j| svd.u[(i, j)] * svd.s[j]);
        us.matmul(&svd.v.transpose())
    }

    #[test]
    fn diagonal_input() {
        let m = DenseMatrix::from_rows(&[[1.0f64, 0.0], [0.0, 3.0]]);
        let mut f = FlopCounter::new();
        let svd = jacobi_svd(m.view(), &mut f);
        assert_eq!(svd.s, vec![3.0, 1.0]);
        assert!(reconstruct(&svd).sub(&m).frobenius_norm() < 1e-15);
    }

    #[test]
    fn rectangular_shapes() {
        let m = DenseMatrix::<f64>::from_fn(5, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        for input in [m.clone(), m.transpose()] {
            let mut f = FlopCounter::new();
            let svd = jacobi_svd(input.view(), &mut f);
            assert_eq!(svd.s.len(), 3);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(reconstruct(&svd).sub(&input).frobenius_norm() < 1e-13);
            let vtv = svd.v.transpose().matmul(&svd.v);
            assert!(vtv.sub(&DenseMatrix::identity(3)).frobenius_norm() < 1e-13);
            assert!(f.is_consistent());
        }
    }

    #[test]
    fn zero_matrix() {
        let m = DenseMatrix::<f64>::zeros(3, 2);
        let mut f = FlopCounter::new();
        let svd = jacobi_svd(m.view(), &mut f);
        assert_eq!(svd.s, vec![0.0, 0.0]);
    }
}
