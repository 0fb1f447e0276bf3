use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hmatrix::hmatrix::dump::write_dump;
use hmatrix::{Admissibility, BlockTree, ClusterTree, HMatrix, WorkConstants};
use hmatrix_harness::bench::{run_bench, write_csv, BenchRow};
use hmatrix_harness::verify::{run_verify, VerifyOptions};
use hmatrix_harness::{generate, Generator, ProblemSpec};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hmx", version, about = "Hierarchical-matrix factorization experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one problem and check it against dense oracles and the work model.
    Verify(RunArgs),
    /// Run a grid of problems and emit one row per problem.
    Bench(RunArgs),
    /// Write the compressed matrix, the cluster tree or the block tree.
    Dump(DumpArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AdmKind {
    Weak,
    Eta,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ProblemArgs {
    /// Matrix dimension; comma-separated lists form a grid for `bench`.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    n: Vec<usize>,
    /// Largest leaf cluster size.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    leaf_size: Vec<usize>,
    #[arg(long, value_enum, default_value = "eta")]
    adm: AdmKind,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Rank cap of admissible blocks.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    rank: Vec<usize>,
    /// Relative truncation threshold.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, value_enum, default_value = "logkernel")]
    generator: Generator,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, default_value_t = hmatrix::work::DEFAULT_C_AD as i64)]
    c_ad: i64,
    #[arg(long, default_value_t = hmatrix::work::DEFAULT_C_MG_PRIME as i64)]
    c_mg_prime: i64,
    /// Skip the dense-oracle residuals.
    #[arg(long)]
    no_residuals: bool,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Emit the cluster tree as JSON.
    #[arg(long)]
    dump_tree: bool,
    /// Emit the block tree leaves and inner blocks as JSON.
    #[arg(long)]
    dump_blocks: bool,
}

impl ProblemArgs {
    fn specs(&self) -> Vec<ProblemSpec> {
        let admissibility = match self.adm {
            AdmKind::Weak => Admissibility::Weak,
            AdmKind::Eta => Admissibility::Eta(self.eta),
        };
        let mut out = Vec::new();
        for &n in &self.n {
            for &rho in &self.leaf_size {
                for &k in &self.rank {
                    out.push(ProblemSpec {
                        n,
                        rho,
                        admissibility,
                        k,
                        eps: self.eps,
                        generator: self.generator,
                        seed: self.seed,
                        shift: self.shift,
                    });
                }
            }
        }
        out
    }

    fn single(&self) -> Result<ProblemSpec, String> {
        match self.specs().as_slice() {
            [one] => Ok(one.clone()),
            _ => Err("this command takes a single value for --n, --leaf-size and --rank".into()),
        }
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

impl RunArgs {
    fn options(&self) -> Result<VerifyOptions, String> {
        let constants =
            WorkConstants::new(self.c_ad as i128, self.c_mg_prime as i128).map_err(|e| e.to_string())?;
        Ok(VerifyOptions { constants, residuals: !self.no_residuals })
    }
}

enum Outcome {
    Pass,
    Violations,
}

fn verify(args: &RunArgs) -> Result<Outcome, String> {
    let spec = args.problem.single()?;
    let rep = run_verify(&spec, &args.options()?).map_err(|e| e.to_string())?;
    let mut w = args.problem.writer().map_err(|e| e.to_string())?;
    match args.format.unwrap_or(Format::Json) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rep).map_err(|e| e.to_string())?;
            writeln!(w).map_err(|e| e.to_string())?;
        }
        Format::Csv => write_csv(&[BenchRow::from_report(&rep)], &mut w).map_err(|e| e.to_string())?,
    }
    w.flush().map_err(|e| e.to_string())?;
    if let Some(err) = rep.error {
        return Err(err);
    }
    Ok(if rep.passed { Outcome::Pass } else { Outcome::Violations })
}

fn bench(args: &RunArgs) -> Result<Outcome, String> {
    let specs = args.problem.specs();
    for s in &specs {
        s.validate().map_err(|e| e.to_string())?;
    }
    let rows = run_bench(&specs, &args.options()?);
    let mut w = args.problem.writer().map_err(|e| e.to_string())?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&rows, &mut w).map_err(|e| e.to_string())?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rows).map_err(|e| e.to_string())?;
            writeln!(w).map_err(|e| e.to_string())?;
        }
    }
    w.flush().map_err(|e| e.to_string())?;
    Ok(if rows.iter().all(|r| r.passed) { Outcome::Pass } else { Outcome::Violations })
}

fn dump(args: &DumpArgs) -> Result<Outcome, String> {
    let spec = args.problem.single()?;
    let ct = ClusterTree::new(spec.n, spec.rho).map_err(|e| e.to_string())?;
    let bt = BlockTree::new(&ct, spec.admissibility).map_err(|e| e.to_string())?;
    let mut w = args.problem.writer().map_err(|e| e.to_string())?;
    if args.dump_tree || args.dump_blocks {
        let mut doc = serde_json::Map::new();
        doc.insert("schema_version".into(), json!(hmatrix_harness::verify::SCHEMA_VERSION));
        if args.dump_tree {
            doc.insert(
                "tree".into(),
                json!({ "n": ct.n(), "rho": ct.rho(), "depth": ct.depth(), "clusters": ct.clusters() }),
            );
        }
        if args.dump_blocks {
            doc.insert(
                "blocks".into(),
                json!({
                    "admissibility": bt.admissibility(),
                    "c_sp": bt.sparsity_constant(),
                    "blocks": bt.records(),
                }),
            );
        }
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| e.to_string())?;
        writeln!(w).map_err(|e| e.to_string())?;
    } else {
        if args.problem.out.is_none() {
            return Err("the binary matrix dump needs --out".into());
        }
        let g = generate(&spec).map_err(|e| e.to_string())?;
        let h = HMatrix::from_dense(&g, bt.into(), spec.k, spec.eps).map_err(|e| e.to_string())?;
        write_dump(&h, &mut w).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    Ok(Outcome::Pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Verify(a) => verify(a),
        Cmd::Bench(a) => bench(a),
        Cmd::Dump(a) => dump(a),
    };
    match res {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hmx: {e}");
            ExitCode::from(2)
        }
    }
}
