//! Dense kernels used at the leaves of the hierarchy.

pub mod blas;
pub mod matrix;
pub mod qr;
pub mod svd;
pub mod triangular;
pub mod truncate;

pub use blas::{gemm, matmul, Mode, Op};
pub use matrix::{DenseMatrix, MatMut, MatRef};
pub use qr::thin_qr;
pub use svd::{jacobi_svd, Svd};
pub use triangular::{
    counts, dense_invert_triangular, dense_lr, dense_rl_product, dense_solve_triangular, lr_inplace,
    solve_triangular_inplace, unpack_lr, Side,
};
pub use truncate::{select_rank, truncate_lowrank};
