//! Dense kernels and H-matrix algorithms checked against nalgebra.

use std::sync::Arc;

use hmatrix::dense::{
    counts, dense_invert_triangular, dense_lr, dense_rl_product, dense_solve_triangular, jacobi_svd, thin_qr,
    truncate_lowrank,
};
use hmatrix::hmatrix::addmul;
use hmatrix::triangular::{invert_inplace, linvert, lrdecomp, lrinvert, rinvert};
use hmatrix::{Admissibility, BlockTree, ClusterTree, Ctx, DenseMatrix, FlopCounter, HMatrix, Matrix, Side};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn dominant(n: usize, seed: u64) -> Matrix {
    let mut m = random(n, n, seed);
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        m[(i, i)] = s + 1.0;
    }
    m
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn from_na(m: &DMatrix<f64>) -> Matrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm()
}

fn sorted_singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = to_na(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

#[test]
fn jacobi_svd_agrees_with_nalgebra() {
    for (rows, cols, seed) in [(9, 5, 1), (5, 9, 2), (7, 7, 3), (1, 4, 4)] {
        let m = random(rows, cols, seed);
        let svd = jacobi_svd(m.view(), &mut FlopCounter::new());
        let expect = sorted_singular_values(&m);
        assert_eq!(svd.s.len(), expect.len());
        for (a, b) in svd.s.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-12 * expect[0], "{a} vs {b}");
        }
        let us = DenseMatrix::from_fn(svd.u.rows(), svd.s.len(), |i, j| svd.u[(i, j)] * svd.s[j]);
        assert!(rel(&us.matmul(&svd.v.transpose()), &m) < 1e-13);
    }
}

#[test]
fn thin_qr_reconstructs_and_is_orthonormal() {
    let b = random(8, 3, 5);
    let (q, r) = thin_qr(b.view(), &mut FlopCounter::new());
    assert_eq!((q.shape(), r.shape()), ((8, 3), (3, 3)));
    assert!(q.matmul(&r).sub(&b).frobenius_norm() <= 1e-12 * b.frobenius_norm());
    assert!(q.transpose().matmul(&q).sub(&Matrix::identity(3)).frobenius_norm() < 1e-13);
    for i in 1..3 {
        for j in 0..i {
            assert_eq!(r[(i, j)], 0.0);
        }
    }

    let v: Matrix = DenseMatrix::from_rows(&[[3.0], [4.0]]);
    let (q, r) = thin_qr(v.view(), &mut FlopCounter::new());
    assert!((r[(0, 0)].abs() - 5.0).abs() < 1e-14);
    assert!((q[(0, 0)].abs() - 0.6).abs() < 1e-14 && (q[(1, 0)].abs() - 0.8).abs() < 1e-14);
}

/// `U diag(sigma) V^T` with orthogonal factors taken from nalgebra QR.
fn with_spectrum(n: usize, sigma: &[f64], seed: u64) -> Matrix {
    let u = to_na(&random(n, n, seed)).qr().q();
    let v = to_na(&random(n, n, seed + 100)).qr().q();
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { sigma[i] } else { 0.0 });
    from_na(&(u * d * v.transpose()))
}

#[test]
fn truncation_error_matches_dropped_singular_values() {
    let sigma: Vec<f64> = (0..6).map(|i| 10f64.powi(-i)).collect();
    let m = with_spectrum(6, &sigma, 7);
    for k in 0..=6 {
        let (c, d) = truncate_lowrank(m.view(), k, 0.0, &mut FlopCounter::new());
        assert_eq!(c.cols(), k);
        let err = to_na(&m.sub(&c.matmul(&d.transpose()))).norm();
        let tail: f64 = sigma[k.min(6)..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((err - tail).abs() <= 1e-10 * sigma[0], "k={k}: {err} vs {tail}");
    }
    let (c, _) = truncate_lowrank(m.view(), 6, 0.5e-2, &mut FlopCounter::new());
    assert_eq!(c.cols(), 3);

    let wide = random(4, 9, 8);
    let (c, d) = truncate_lowrank(wide.view(), 4, 0.0, &mut FlopCounter::new());
    assert!(rel(&c.matmul(&d.transpose()), &wide) < 1e-12);
    assert!(d.transpose().matmul(&d).sub(&Matrix::identity(4)).frobenius_norm() < 1e-12);
}

#[test]
fn dense_lr_and_inverse_against_nalgebra() {
    for n in [1, 2, 5, 17, 40] {
        let m = dominant(n, n as u64);
        let mut f = FlopCounter::new();
        let (l, r) = dense_lr(m.view(), 1e-14, &mut f).unwrap();
        assert!(l.matmul(&r).sub(&m).frobenius_norm() <= 1e-12 * n as f64 * m.frobenius_norm());
        for i in 0..n {
            assert_eq!(l[(i, i)], 1.0);
        }
        let li = dense_invert_triangular(Side::Lower, l.view(), 1e-14, &mut f).unwrap();
        let ri = dense_invert_triangular(Side::Upper, r.view(), 1e-14, &mut f).unwrap();
        let inv = dense_rl_product(ri.view(), li.view(), &mut f).unwrap();
        let expect = from_na(&to_na(&m).try_inverse().unwrap());
        assert!(rel(&inv, &expect) < 1e-12, "n={n}");
        assert!(f.is_consistent());
    }
}

#[test]
fn triangular_solves_against_nalgebra() {
    let n = 12;
    let m = dominant(n, 21);
    let (l, r) = dense_lr(m.view(), 1e-14, &mut FlopCounter::new()).unwrap();
    let y = random(n, 3, 22);
    let cases = [(Side::Lower, false, &l), (Side::Lower, true, &l), (Side::Upper, false, &r), (Side::Upper, true, &r)];
    for (side, trans, t) in cases {
        let x = dense_solve_triangular(side, trans, t.view(), y.view(), 1e-14, &mut FlopCounter::new()).unwrap();
        let op = if trans { to_na(t).transpose() } else { to_na(t) };
        let expect = op.clone().lu().solve(&to_na(&y)).unwrap();
        assert!(rel(&x, &from_na(&expect)) < 1e-12, "{side:?} {trans}");
        assert!(from_na(&op).matmul(&x).sub(&y).frobenius_norm() <= 1e-12 * n as f64 * y.frobenius_norm());
    }
}

#[test]
fn dense_counts_are_exact() {
    for n in 1..=64usize {
        let m = dominant(n, 1000 + n as u64);
        let mut f = FlopCounter::new();
        let (l, r) = dense_lr(m.view(), 1e-14, &mut f).unwrap();
        assert_eq!(f.total, counts::lr(n as u64), "lr n={n}");
        for (side, t) in [(Side::Lower, &l), (Side::Upper, &r)] {
            let mut f = FlopCounter::new();
            dense_invert_triangular(side, t.view(), 1e-14, &mut f).unwrap();
            assert_eq!(f.total, counts::invert(n as u64), "invert {side:?} n={n}");
        }
        let mut f = FlopCounter::new();
        dense_rl_product(r.view(), l.view(), &mut f).unwrap();
        assert_eq!(f.total, counts::rl_product(n as u64), "rl n={n}");
    }
}

fn block_tree(n: usize, rho: usize, adm: Admissibility) -> Arc<BlockTree> {
    Arc::new(BlockTree::new(&ClusterTree::new(n, rho).unwrap(), adm).unwrap())
}

#[test]
fn addmul_without_truncation_is_exact() {
    // Largest admissible block of n=32, rho=4 has 16 rows, so k=16 never truncates.
    let bt = block_tree(32, 4, Admissibility::Weak);
    let (x, y, z) = (random(32, 32, 31), random(32, 32, 32), random(32, 32, 33));
    let hx = HMatrix::from_dense(&x, bt.clone(), 16, 0.0).unwrap();
    let hy = HMatrix::from_dense(&y, bt.clone(), 16, 0.0).unwrap();
    let mut hz = HMatrix::from_dense(&z, bt, 16, 0.0).unwrap();
    let mut ctx = Ctx::new(16, 0.0);
    addmul(-0.5, hx.root(), hy.root(), hz.root_mut(), &mut ctx).unwrap();
    let expect = z.add(&x.matmul(&y).scaled(-0.5));
    assert!(rel(&hz.to_dense(), &expect) < 1e-12);
    assert!(hz.max_rank() <= 16);
    hz.check_structure().unwrap();
}

#[test]
fn truncated_addmul_stays_close() {
    let bt = block_tree(32, 4, Admissibility::Weak);
    let (x, y) = (random(32, 32, 41), random(32, 32, 42));
    let hx = HMatrix::from_dense(&x, bt.clone(), 16, 0.0).unwrap();
    let hy = HMatrix::from_dense(&y, bt.clone(), 16, 0.0).unwrap();
    let mut hz = HMatrix::zeros(bt, 4, 0.0);
    let mut ctx = Ctx::new(4, 0.0);
    addmul(1.0, hx.root(), hy.root(), hz.root_mut(), &mut ctx).unwrap();
    assert!(hz.max_rank() <= 4);
    // Random factors have flat spectra, so only the relative error scale is bounded.
    let err = hz.to_dense().sub(&x.matmul(&y)).frobenius_norm();
    assert!(err <= x.frobenius_norm() * y.frobenius_norm());
}

#[test]
fn untruncated_pipeline_matches_nalgebra_inverse() {
    for adm in [Admissibility::Weak, Admissibility::Eta(1.0)] {
        let n = 64;
        let bt = block_tree(n, 4, adm);
        let g = dominant(n, 64);
        let expect = from_na(&to_na(&g).try_inverse().unwrap());
        let mut h = HMatrix::from_dense(&g, bt, n, 0.0).unwrap();
        let mut ctx = Ctx::new(n, 0.0);
        let (l, r) = lrdecomp(&mut h.clone(), &mut ctx).unwrap();
        assert!(rel(&l.to_dense().matmul(&r.to_dense()), &g) < 1e-12);
        let (lt, rt) = (linvert(&l, &mut ctx).unwrap(), rinvert(&r, &mut ctx).unwrap());
        let l_na = to_na(&l.to_dense());
        let lt_expect = from_na(&l_na.try_inverse().unwrap());
        assert!(rel(&lt.to_dense(), &lt_expect) < 1e-11);
        let gt = lrinvert(&l, &r, &lt, &rt, &mut ctx).unwrap();
        assert!(rel(&gt.to_dense(), &expect) < 1e-11, "{adm}");
        invert_inplace(&mut h, &mut ctx).unwrap();
        assert!(rel(&h.to_dense(), &expect) < 1e-11, "{adm}");
    }
}

#[test]
fn single_precision_pipeline() {
    let n = 32;
    let bt = block_tree(n, 4, Admissibility::Weak);
    let g = dominant(n, 5);
    let expect = from_na(&to_na(&g).try_inverse().unwrap());
    let mut h = HMatrix::<f32>::from_dense(&g.cast::<f32>(), bt, n, 0.0).unwrap();
    invert_inplace(&mut h, &mut Ctx::new(n, 0.0)).unwrap();
    assert!(rel(&h.to_dense().cast::<f64>(), &expect) < 1e-4);
}
