//! Hierarchical matrix arithmetic with LR factorization and inversion, plus
//! an exact work model for the recursive algorithms.

pub mod block;
pub mod cluster;
pub mod dense;
pub mod error;
pub mod flops;
pub mod hmatrix;
pub mod scalar;
pub mod triangular;
pub mod work;

pub use dense::{DenseMatrix, Side};
pub use error::{Error, Result};
pub use flops::FlopCounter;
pub use scalar::Scalar;

pub type Matrix = DenseMatrix<f64>;
pub type MatrixF32 = DenseMatrix<f32>;
pub type HMatrixF64 = hmatrix::HMatrix<f64>;
pub type HMatrixF32 = hmatrix::HMatrix<f32>;

pub use block::{Admissibility, BlockTree};
pub use cluster::ClusterTree;
pub use hmatrix::{Ctx, HMatrix};
pub use triangular::TriangularHMatrix;
pub use work::{WorkConstants, WorkModel};
