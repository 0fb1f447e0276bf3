use std::io::Write;

use serde::Serialize;

use crate::spec::ProblemSpec;
use crate::verify::{run_verify, RunReport, VerifyOptions};

/// One CSV line of a benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub rho: usize,
    pub admissibility: String,
    pub k: usize,
    pub eps: f64,
    pub generator: String,
    pub seed: u64,
    pub p: Option<usize>,
    pub c_sp: Option<usize>,
    pub flops_lrdecomp: Option<u64>,
    pub flops_linvert: Option<u64>,
    pub flops_rinvert: Option<u64>,
    pub flops_lrinvert: Option<u64>,
    pub flops_inplace: Option<u64>,
    /// Factorization flops over `n (p+1)^2`.
    pub flops_per_unit: Option<f64>,
    pub w_mm_root: Option<String>,
    pub bound_ratio: Option<f64>,
    pub res_factorization: Option<f64>,
    pub res_inverse: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

impl BenchRow {
    fn empty(spec: &ProblemSpec) -> Self {
        Self {
            n: spec.n,
            rho: spec.rho,
            admissibility: spec.admissibility.to_string(),
            k: spec.k,
            eps: spec.eps,
            generator: format!("{:?}", spec.generator).to_lowercase(),
            seed: spec.seed,
            p: None,
            c_sp: None,
            flops_lrdecomp: None,
            flops_linvert: None,
            flops_rinvert: None,
            flops_lrinvert: None,
            flops_inplace: None,
            flops_per_unit: None,
            w_mm_root: None,
            bound_ratio: None,
            res_factorization: None,
            res_inverse: None,
            passed: false,
            error: None,
        }
    }

    pub fn from_report(rep: &RunReport) -> Self {
        let spec = &rep.problem;
        let f = &rep.flops;
        let p = rep.tree.depth;
        Self {
            p: Some(p),
            c_sp: Some(rep.tree.c_sp),
            flops_lrdecomp: Some(f.lrdecomp),
            flops_linvert: Some(f.linvert),
            flops_rinvert: Some(f.rinvert),
            flops_lrinvert: Some(f.lrinvert),
            flops_inplace: Some(f.invert_inplace),
            flops_per_unit: Some(f.lrdecomp as f64 / (spec.n * (p + 1) * (p + 1)) as f64),
            w_mm_root: Some(rep.work.w_mm_root.to_string()),
            bound_ratio: Some(rep.work.bound_ratio),
            res_factorization: rep.residual("factorization"),
            res_inverse: rep.residual("inverse"),
            passed: rep.passed,
            error: rep.error.clone(),
            ..Self::empty(spec)
        }
    }
}

fn row(spec: &ProblemSpec, opts: &VerifyOptions) -> BenchRow {
    match run_verify(spec, opts) {
        Ok(rep) => BenchRow::from_report(&rep),
        Err(e) => BenchRow { error: Some(e.to_string()), ..BenchRow::empty(spec) },
    }
}

/// Runs every spec; a failing row records its error and the grid continues.
pub fn run_bench(specs: &[ProblemSpec], opts: &VerifyOptions) -> Vec<BenchRow> {
    specs.iter().map(|s| row(s, opts)).collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(HEADER)?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub const HEADER: [&str; 21] = [
    "n",
    "rho",
    "admissibility",
    "k",
    "eps",
    "generator",
    "seed",
    "p",
    "c_sp",
    "flops_lrdecomp",
    "flops_linvert",
    "flops_rinvert",
    "flops_lrinvert",
    "flops_inplace",
    "flops_per_unit",
    "w_mm_root",
    "bound_ratio",
    "res_factorization",
    "res_inverse",
    "passed",
    "error",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_has_header_only() {
        let mut buf = Vec::new();
        write_csv(&run_bench(&[], &VerifyOptions::default()), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", HEADER.join(",")));
    }
}
