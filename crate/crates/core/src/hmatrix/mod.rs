//! Hierarchical matrices and their basic arithmetic.

pub mod ctx;
pub mod dump;
pub mod node;
pub mod ops;

pub use ctx::{CallRecord, Ctx, OpKind, TruncParams, DEFAULT_PIVOT_TOL};
pub use node::{compress, HMatrix, HNode, LowRank, NodeData, Span};
pub use ops::{addeval, addevaltrans, addmul, addmul_blocks, merge, update};
