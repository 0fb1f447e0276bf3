use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use hmatrix::dense::{dense_invert_triangular, dense_lr, dense_rl_product};
use hmatrix::hmatrix::{CallRecord, OpKind};
use hmatrix::triangular::{invert_inplace, linvert, lrdecomp, lrinvert, rinvert, solve_matrix};
use hmatrix::work::{default_ells, verify_all, FactorWork, ProductTree, WorkReport};
use hmatrix::{
    BlockTree, ClusterTree, Ctx, DenseMatrix, FlopCounter, HMatrix, Matrix, Result, Side, WorkConstants,
    WorkModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::generate::generate;
use crate::spec::ProblemSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub constants: WorkConstants,
    /// Compute residuals against dense oracles; costs a few dense products.
    pub residuals: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { constants: WorkConstants::default(), residuals: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSummary {
    pub depth: usize,
    pub clusters: usize,
    pub blocks: usize,
    pub leaves: usize,
    pub c_sp: usize,
    pub k_hat: i128,
    pub product_nodes: usize,
    /// Largest low-rank block rank after compression.
    pub max_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub name: &'static str,
    pub value: f64,
    pub oracle: &'static str,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PhaseFlops {
    pub lrdecomp: u64,
    pub linvert: u64,
    pub rinvert: u64,
    pub lrinvert: u64,
    pub solve: u64,
    pub invert_inplace: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCheck {
    pub phase: &'static str,
    pub flops: u64,
    pub bound: i128,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpDomination {
    pub op: OpKind,
    pub calls: u64,
    pub violations: u64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CallViolation {
    pub call: CallRecord,
    pub bound: i128,
}

/// Measured flops against work-model values, per call and per phase.
#[derive(Debug, Clone, Serialize)]
pub struct Domination {
    pub checks: u64,
    pub violations: u64,
    pub max_ratio: f64,
    pub passed: bool,
    pub phases: Vec<PhaseCheck>,
    pub per_op: Vec<OpDomination>,
    pub examples: Vec<CallViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkSummary {
    pub root: FactorWork,
    pub w_mm_root: i128,
    pub mm_bound_root: i128,
    pub bound_ratio: f64,
    pub report: WorkReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub problem: ProblemSpec,
    pub tree: TreeSummary,
    pub residuals: Vec<Residual>,
    pub flops: PhaseFlops,
    pub work: WorkSummary,
    pub domination: Option<Domination>,
    pub timings_ms: BTreeMap<&'static str, f64>,
    pub passed: bool,
    pub error: Option<String>,
}

impl RunReport {
    pub fn residual(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name).map(|r| r.value)
    }
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    let nb = b.frobenius_norm();
    let d = a.sub(b).frobenius_norm();
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

/// Dense reference inverse through the same unpivoted elimination.
pub fn dense_inverse(g: &Matrix, pivot_tol: f64) -> Result<Matrix> {
    let mut f = FlopCounter::new();
    let (l, r) = dense_lr(g.view(), pivot_tol, &mut f)?;
    let lt = dense_invert_triangular(Side::Lower, l.view(), pivot_tol, &mut f)?;
    let rt = dense_invert_triangular(Side::Upper, r.view(), pivot_tol, &mut f)?;
    dense_rl_product(rt.view(), lt.view(), &mut f)
}

struct Timer {
    times: BTreeMap<&'static str, f64>,
    at: Instant,
}

impl Timer {
    fn new() -> Self {
        Self { times: BTreeMap::new(), at: Instant::now() }
    }

    fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        self.times.insert(name, (now - self.at).as_secs_f64() * 1e3);
        self.at = now;
    }
}

struct Pipeline {
    flops: PhaseFlops,
    audit: Vec<CallRecord>,
    factors: Option<(Matrix, Matrix)>,
    inverse: Matrix,
    inverse_inplace: Matrix,
    solve: Option<(Matrix, Matrix)>,
}

fn run_pipeline(gh: &HMatrix<f64>, rhs: Option<&Matrix>, want_dense: bool, t: &mut Timer) -> Result<Pipeline> {
    let mut flops = PhaseFlops::default();
    let mut ctx = gh.ctx().with_audit();
    let phase = |ctx: &Ctx, last: &mut u64| {
        let d = ctx.flops.total - *last;
        *last = ctx.flops.total;
        d
    };
    let mut last = 0;
    let mut g = gh.clone();
    let (l, r) = lrdecomp(&mut g, &mut ctx)?;
    flops.lrdecomp = phase(&ctx, &mut last);
    t.lap("lrdecomp");
    let lt = linvert(&l, &mut ctx)?;
    flops.linvert = phase(&ctx, &mut last);
    t.lap("linvert");
    let rt = rinvert(&r, &mut ctx)?;
    flops.rinvert = phase(&ctx, &mut last);
    t.lap("rinvert");
    let gt = lrinvert(&l, &r, &lt, &rt, &mut ctx)?;
    flops.lrinvert = phase(&ctx, &mut last);
    t.lap("lrinvert");
    let solve = match rhs {
        Some(b) => {
            let mut x = b.clone();
            solve_matrix(Side::Lower, false, l.root(), x.view_mut(), &mut ctx)?;
            solve_matrix(Side::Upper, false, r.root(), x.view_mut(), &mut ctx)?;
            flops.solve = phase(&ctx, &mut last);
            Some((x, b.clone()))
        }
        None => None,
    };
    t.lap("solve");
    let audit = ctx.take_audit();

    let mut h = gh.clone();
    let mut ictx = gh.ctx();
    invert_inplace(&mut h, &mut ictx)?;
    flops.invert_inplace = ictx.flops.total;
    t.lap("invert_inplace");

    Ok(Pipeline {
        flops,
        audit,
        factors: want_dense.then(|| (l.to_dense(), r.to_dense())),
        inverse: gt.to_dense(),
        inverse_inplace: h.to_dense(),
        solve,
    })
}

fn check_domination(wm: &mut WorkModel<'_>, p: &Pipeline, root: &FactorWork) -> Result<Domination> {
    let mut per_op: BTreeMap<String, OpDomination> = BTreeMap::new();
    let mut examples = Vec::new();
    let (mut checks, mut violations, mut max_ratio) = (0u64, 0u64, 0f64);
    for rec in &p.audit {
        let bound = wm.bound_for_call(rec)?;
        let ratio = if bound > 0 { rec.flops as f64 / bound as f64 } else { 0.0 };
        let bad = rec.flops as i128 > bound;
        let e = per_op.entry(format!("{:?}", rec.op)).or_insert(OpDomination {
            op: rec.op,
            calls: 0,
            violations: 0,
            max_ratio: 0.0,
        });
        e.calls += 1;
        e.max_ratio = e.max_ratio.max(ratio);
        checks += 1;
        max_ratio = max_ratio.max(ratio);
        if bad {
            e.violations += 1;
            violations += 1;
            if examples.len() < 10 {
                examples.push(CallViolation { call: rec.clone(), bound });
            }
        }
    }
    let root_id = wm.block_tree().clusters().root();
    let (ls, rs) = wm.w_solve_vectors(root_id, 1)?;
    let f = &p.flops;
    let mut phases = vec![
        ("lrdecomp", f.lrdecomp, root.dc),
        ("linvert", f.linvert, root.li),
        ("rinvert", f.rinvert, root.ri),
        ("lrinvert", f.lrinvert, root.inv),
        ("invert_inplace", f.invert_inplace, root.total()?),
    ];
    if p.solve.is_some() {
        phases.push(("solve", f.solve, ls + rs));
    }
    let phases: Vec<PhaseCheck> = phases
        .into_iter()
        .map(|(phase, flops, bound)| PhaseCheck { phase, flops, bound, passed: flops as i128 <= bound })
        .collect();
    for ph in &phases {
        checks += 1;
        if !ph.passed {
            violations += 1;
        }
        if ph.bound > 0 {
            max_ratio = max_ratio.max(ph.flops as f64 / ph.bound as f64);
        }
    }
    Ok(Domination {
        checks,
        violations,
        max_ratio,
        passed: violations == 0,
        phases,
        per_op: per_op.into_values().collect(),
        examples,
    })
}

/// Builds the trees, compresses the generated matrix, runs the factorization
/// and inversion algorithms and checks them against dense oracles and the
/// work model. Algorithm failures are recorded in the report.
pub fn run_verify(spec: &ProblemSpec, opts: &VerifyOptions) -> Result<RunReport> {
    let mut timer = Timer::new();
    let g = generate(spec)?;
    let ct = ClusterTree::new(spec.n, spec.rho)?;
    let bt = Arc::new(BlockTree::new(&ct, spec.admissibility)?);
    timer.lap("setup");
    let gh = HMatrix::from_dense(&g, bt.clone(), spec.k, spec.eps)?;
    timer.lap("compress");

    let report = verify_all(&bt, spec.k, opts.constants, &default_ells(&bt, spec.k))?;
    let mut wm = WorkModel::new(&bt, spec.k, opts.constants);
    let root = ct.root();
    let root_work = wm.w_factor_invert(root)?;
    let w_mm_root = wm.w_mm(root, root, root)?;
    let mm_bound_root = wm.mm_upper_bound(root, root, root)?;
    let work = WorkSummary {
        root: root_work,
        w_mm_root,
        mm_bound_root,
        bound_ratio: w_mm_root as f64 / mm_bound_root as f64,
        report,
    };
    timer.lap("work_model");

    let tree = TreeSummary {
        depth: ct.depth(),
        clusters: ct.len(),
        blocks: bt.len(),
        leaves: bt.leaves().count(),
        c_sp: bt.sparsity_constant(),
        k_hat: wm.k_hat(),
        product_nodes: ProductTree::new(&bt).len(),
        max_rank: gh.max_rank(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let x_true = DenseMatrix::from_fn(spec.n, 1, |_, _| rng.random_range(-1.0..=1.0));
    let rhs = opts.residuals.then(|| g.matmul(&x_true));

    let mut residuals = Vec::new();
    let mut flops = PhaseFlops::default();
    let mut domination = None;
    let mut error = None;
    match run_pipeline(&gh, rhs.as_ref(), opts.residuals, &mut timer) {
        Ok(p) => {
            domination = Some(check_domination(&mut wm, &p, &root_work)?);
            timer.lap("domination");
            if opts.residuals {
                let gd = gh.to_dense();
                let id = DenseMatrix::identity(spec.n);
                let (l, r) = p.factors.as_ref().expect("requested");
                let lr = l.matmul(r);
                residuals.push(Residual { name: "compression", value: rel(&gd, &g), oracle: "generated dense matrix" });
                residuals.push(Residual { name: "factorization", value: rel(&lr, &g), oracle: "generated dense matrix" });
                residuals.push(Residual {
                    name: "factorization_compressed",
                    value: rel(&lr, &gd),
                    oracle: "densified compressed matrix",
                });
                residuals.push(Residual {
                    name: "inverse",
                    value: g.matmul(&p.inverse).sub(&id).frobenius_norm(),
                    oracle: "identity, as ||G Ginv - I||_F",
                });
                residuals.push(Residual {
                    name: "inverse_inplace",
                    value: g.matmul(&p.inverse_inplace).sub(&id).frobenius_norm(),
                    oracle: "identity, as ||G Ginv - I||_F",
                });
                if let Ok(dinv) = dense_inverse(&g, hmatrix::hmatrix::DEFAULT_PIVOT_TOL) {
                    residuals.push(Residual {
                        name: "inverse_dense",
                        value: rel(&p.inverse, &dinv),
                        oracle: "dense unpivoted inverse of the generated matrix",
                    });
                }
                if let Some((x, _)) = &p.solve {
                    residuals.push(Residual { name: "solve", value: rel(x, &x_true), oracle: "manufactured solution" });
                }
                timer.lap("residuals");
            }
            residuals.push(Residual {
                name: "inplace_agreement",
                value: rel(&p.inverse_inplace, &p.inverse),
                oracle: "pipeline inverse",
            });
            flops = p.flops;
        }
        Err(e) => error = Some(e.to_string()),
    }

    let passed = error.is_none()
        && work.report.passed
        && domination.as_ref().is_some_and(|d| d.passed);
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        problem: spec.clone(),
        tree,
        residuals,
        flops,
        work,
        domination,
        timings_ms: timer.times,
        passed,
        error,
    })
}
