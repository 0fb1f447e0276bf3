//! Generators, dense-oracle verification and benchmarks for `hmatrix`.

pub mod bench;
pub mod generate;
pub mod spec;
pub mod verify;

pub use bench::{run_bench, write_csv, BenchRow};
pub use generate::generate;
pub use spec::{Generator, ProblemSpec};
pub use verify::{run_verify, RunReport, VerifyOptions};
