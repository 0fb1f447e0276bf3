//! Exact operation counts for the hierarchical algorithms, evaluated on a
//! concrete block tree, and the inequalities they are known to satisfy.
//!
//! All values are `i128`; any overflow is reported as [`Error::Overflow`].

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::block::{BlockKind, BlockTree};
use crate::cluster::ClusterId;
use crate::error::{Error, Result};
use crate::hmatrix::{CallRecord, OpKind};

pub const DEFAULT_C_AD: i128 = 160;
pub const DEFAULT_C_MG_PRIME: i128 = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkConstants {
    pub c_ad: i128,
    pub c_mg_prime: i128,
}

impl Default for WorkConstants {
    fn default() -> Self {
        Self { c_ad: DEFAULT_C_AD, c_mg_prime: DEFAULT_C_MG_PRIME }
    }
}

impl WorkConstants {
    pub fn new(c_ad: i128, c_mg_prime: i128) -> Result<Self> {
        if c_ad < 0 || c_mg_prime < 0 {
            return Err(Error::InvalidArgument("work constants must be non-negative".into()));
        }
        Ok(Self { c_ad, c_mg_prime })
    }

    pub fn c_up(&self) -> i128 {
        self.c_ad.max(1)
    }

    pub fn c_mg(&self) -> i128 {
        2 * self.c_mg_prime
    }

    pub fn c_mm(&self) -> i128 {
        4 + 2 * self.c_up() + self.c_mg()
    }

    pub fn summary(&self) -> ConstantsSummary {
        ConstantsSummary {
            c_ad: self.c_ad,
            c_up: self.c_up(),
            c_mg_prime: self.c_mg_prime,
            c_mg: self.c_mg(),
            c_mm: self.c_mm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstantsSummary {
    pub c_ad: i128,
    pub c_up: i128,
    pub c_mg_prime: i128,
    pub c_mg: i128,
    pub c_mm: i128,
}

fn add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(Error::Overflow)
}

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow)
}

fn prod<const N: usize>(xs: [i128; N]) -> Result<i128> {
    xs.into_iter().try_fold(1, mul)
}

fn sum<I: IntoIterator<Item = i128>>(xs: I) -> Result<i128> {
    xs.into_iter().try_fold(0, add)
}

/// `n/6 (4n^2 - 3n - 1)`: dense LR factorization and `R L` product.
pub fn dense_lr_work(n: i128) -> Result<i128> {
    Ok(prod([n, 4 * n + 1, (n - 1).max(0)])? / 6)
}

/// `n/6 (2n^2 + 4)`: dense triangular inversion.
pub fn dense_invert_work(n: i128) -> Result<i128> {
    Ok(mul(n, add(mul(n, n)?, 2)?)? / 3)
}

/// Work counts on a fixed block tree and truncation rank `k`, memoized.
pub struct WorkModel<'a> {
    bt: &'a BlockTree,
    k: i128,
    consts: WorkConstants,
    ev: HashMap<(ClusterId, ClusterId, i128), i128>,
    up: HashMap<(ClusterId, ClusterId, i128), i128>,
    mm: HashMap<(ClusterId, ClusterId, ClusterId), i128>,
    ls: HashMap<(ClusterId, i128), i128>,
    rs: HashMap<(ClusterId, i128), i128>,
    hs: HashMap<(ClusterId, ClusterId), SolveWork>,
    fi: HashMap<ClusterId, FactorWork>,
}

/// Work of the four block solves on a block `(t, s)`: `ll`/`rl` with the
/// factor on the rows `t`, `lr`/`rr` with the factor on the columns `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolveWork {
    pub ll: i128,
    pub rl: i128,
    pub lr: i128,
    pub rr: i128,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FactorWork {
    pub dc: i128,
    pub li: i128,
    pub ri: i128,
    pub inv: i128,
}

impl FactorWork {
    pub fn total(&self) -> Result<i128> {
        sum([self.dc, self.li, self.ri, self.inv])
    }
}

impl<'a> WorkModel<'a> {
    pub fn new(bt: &'a BlockTree, k: usize, consts: WorkConstants) -> Self {
        Self {
            bt,
            k: k as i128,
            consts,
            ev: HashMap::new(),
            up: HashMap::new(),
            mm: HashMap::new(),
            ls: HashMap::new(),
            rs: HashMap::new(),
            hs: HashMap::new(),
            fi: HashMap::new(),
        }
    }

    pub fn constants(&self) -> WorkConstants {
        self.consts
    }

    pub fn block_tree(&self) -> &'a BlockTree {
        self.bt
    }

    fn size(&self, t: ClusterId) -> i128 {
        self.bt.clusters().size(t) as i128
    }

    fn sons(&self, t: ClusterId) -> Result<[ClusterId; 2]> {
        self.bt
            .clusters()
            .sons(t)
            .ok_or_else(|| Error::StructureViolation(format!("cluster {t} has no sons")))
    }

    fn kind(&self, t: ClusterId, s: ClusterId) -> Result<BlockKind> {
        self.bt
            .kind(t, s)
            .ok_or_else(|| Error::StructureViolation(format!("({t}, {s}) is not in the block tree")))
    }

    fn local_rank(&self, t: ClusterId, s: ClusterId) -> Result<i128> {
        Ok(self.bt.local_rank(t, s, self.k as usize)? as i128)
    }

    fn check_cluster(&self, t: ClusterId) -> Result<()> {
        self.bt.clusters().get(t).map(|_| ())
    }

    /// `k_hat`: largest local rank over all leaves.
    pub fn k_hat(&self) -> i128 {
        self.bt.max_leaf_rank(self.k as usize) as i128
    }

    /// Matrix times `ell` vectors on block `(t, s)`.
    pub fn w_ev(&mut self, t: ClusterId, s: ClusterId, ell: usize) -> Result<i128> {
        let ell = ell as i128;
        if let Some(&w) = self.ev.get(&(t, s, ell)) {
            return Ok(w);
        }
        let (nt, ns) = (self.size(t), self.size(s));
        let w = match self.kind(t, s)? {
            BlockKind::Admissible => prod([2, ell, self.k, nt + ns])?,
            BlockKind::Inadmissible => mul(ell, add(prod([2, nt, ns])?, nt.min(ns))?)?,
            BlockKind::Subdivided => {
                let ([t1, t2], [s1, s2]) = (self.sons(t)?, self.sons(s)?);
                let mut acc = 0;
                for (a, b) in [(t1, s1), (t1, s2), (t2, s1), (t2, s2)] {
                    acc = add(acc, self.w_ev(a, b, ell as usize)?)?;
                }
                acc
            }
        };
        self.ev.insert((t, s, ell), w);
        Ok(w)
    }

    /// Rank-`ell` update of block `(t, s)`. Pairs below an admissible leaf
    /// are treated as admissible.
    pub fn w_up(&mut self, t: ClusterId, s: ClusterId, ell: usize) -> Result<i128> {
        self.check_cluster(t)?;
        self.check_cluster(s)?;
        let ell = ell as i128;
        if let Some(&w) = self.up.get(&(t, s, ell)) {
            return Ok(w);
        }
        let (nt, ns) = (self.size(t), self.size(s));
        let lowrank = || prod([self.consts.c_ad, (self.k + ell) * (self.k + ell), nt + ns]);
        let w = match self.bt.kind(t, s) {
            None | Some(BlockKind::Admissible) => lowrank()?,
            Some(BlockKind::Inadmissible) => prod([2, ell, nt, ns])?,
            Some(BlockKind::Subdivided) => {
                let ([t1, t2], [s1, s2]) = (self.sons(t)?, self.sons(s)?);
                let mut acc = 0;
                for (a, b) in [(t1, s1), (t1, s2), (t2, s1), (t2, s2)] {
                    acc = add(acc, self.w_up(a, b, ell as usize)?)?;
                }
                acc
            }
        };
        self.up.insert((t, s, ell), w);
        Ok(w)
    }

    /// Merge term of a subdivided product triple.
    pub fn w_merge(&self, t: ClusterId, r: ClusterId) -> Result<i128> {
        prod([self.consts.c_mg(), self.k, self.k, self.size(t) + self.size(r)])
    }

    /// `Z|_{t x r} += X|_{t x s} Y|_{s x r}`.
    pub fn w_mm(&mut self, t: ClusterId, s: ClusterId, r: ClusterId) -> Result<i128> {
        if let Some(&w) = self.mm.get(&(t, s, r)) {
            return Ok(w);
        }
        let (kts, ksr) = (self.kind(t, s)?, self.kind(s, r)?);
        let w = if kts != BlockKind::Subdivided {
            let k = self.local_rank(t, s)? as usize;
            add(self.w_ev(s, r, k)?, self.w_up(t, r, k)?)?
        } else if ksr != BlockKind::Subdivided {
            let k = self.local_rank(s, r)? as usize;
            add(self.w_ev(t, s, k)?, self.w_up(t, r, k)?)?
        } else {
            let (ts, ss, rs) = (self.sons(t)?, self.sons(s)?, self.sons(r)?);
            let mut acc = self.w_merge(t, r)?;
            for &a in &ts {
                for &b in &ss {
                    for &c in &rs {
                        acc = add(acc, self.w_mm(a, b, c)?)?;
                    }
                }
            }
            acc
        };
        self.mm.insert((t, s, r), w);
        Ok(w)
    }

    fn w_solve_vec(&mut self, side: usize, t: ClusterId, ell: i128) -> Result<i128> {
        let memo = if side == 0 { &self.ls } else { &self.rs };
        if let Some(&w) = memo.get(&(t, ell)) {
            return Ok(w);
        }
        let n = self.size(t);
        let w = match self.bt.clusters().sons(t) {
            None => prod([ell, n, n])?,
            Some([t1, t2]) => {
                let off = if side == 0 { (t2, t1) } else { (t1, t2) };
                sum([
                    self.w_solve_vec(side, t1, ell)?,
                    self.w_solve_vec(side, t2, ell)?,
                    self.w_ev(off.0, off.1, ell as usize)?,
                ])?
            }
        };
        let memo = if side == 0 { &mut self.ls } else { &mut self.rs };
        memo.insert((t, ell), w);
        Ok(w)
    }

    /// `(W_ls, W_rs)`: lower and upper solves with `ell` right-hand sides.
    pub fn w_solve_vectors(&mut self, t: ClusterId, ell: usize) -> Result<(i128, i128)> {
        self.check_cluster(t)?;
        let ell = ell as i128;
        Ok((self.w_solve_vec(0, t, ell)?, self.w_solve_vec(1, t, ell)?))
    }

    pub fn w_ls(&mut self, t: ClusterId, ell: usize) -> Result<i128> {
        Ok(self.w_solve_vectors(t, ell)?.0)
    }

    pub fn w_rs(&mut self, t: ClusterId, ell: usize) -> Result<i128> {
        Ok(self.w_solve_vectors(t, ell)?.1)
    }

    /// Block solves on `(t, s)`; see [`SolveWork`].
    pub fn w_solve_h(&mut self, t: ClusterId, s: ClusterId) -> Result<SolveWork> {
        if let Some(&w) = self.hs.get(&(t, s)) {
            return Ok(w);
        }
        let w = match self.kind(t, s)? {
            kind @ (BlockKind::Admissible | BlockKind::Inadmissible) => {
                let (lrows, lcols) = if kind == BlockKind::Admissible {
                    (self.k as usize, self.k as usize)
                } else {
                    (self.size(s) as usize, self.size(t) as usize)
                };
                let (ls_t, rs_t) = self.w_solve_vectors(t, lrows)?;
                let (ls_s, rs_s) = self.w_solve_vectors(s, lcols)?;
                SolveWork { ll: ls_t, rl: rs_t, lr: rs_s, rr: ls_s }
            }
            BlockKind::Subdivided => {
                let ([t1, t2], [s1, s2]) = (self.sons(t)?, self.sons(s)?);
                let (mut ll, mut rl, mut lr, mut rr) = (0, 0, 0, 0);
                for sj in [s1, s2] {
                    let (a, b) = (self.w_solve_h(t1, sj)?, self.w_solve_h(t2, sj)?);
                    ll = sum([ll, a.ll, b.ll, self.w_mm(t2, t1, sj)?])?;
                    rl = sum([rl, a.rl, b.rl, self.w_mm(t1, t2, sj)?])?;
                }
                for ti in [t1, t2] {
                    let (a, b) = (self.w_solve_h(ti, s1)?, self.w_solve_h(ti, s2)?);
                    lr = sum([lr, a.lr, b.lr, self.w_mm(ti, s2, s1)?])?;
                    rr = sum([rr, a.rr, b.rr, self.w_mm(ti, s1, s2)?])?;
                }
                SolveWork { ll, rl, lr, rr }
            }
        };
        self.hs.insert((t, s), w);
        Ok(w)
    }

    /// Factorization and the three inversion steps on the diagonal block of `t`.
    pub fn w_factor_invert(&mut self, t: ClusterId) -> Result<FactorWork> {
        self.check_cluster(t)?;
        if let Some(&w) = self.fi.get(&t) {
            return Ok(w);
        }
        let w = match self.bt.clusters().sons(t) {
            None => {
                let n = self.size(t);
                let (lr, inv) = (dense_lr_work(n)?, dense_invert_work(n)?);
                FactorWork { dc: lr, li: inv, ri: inv, inv: lr }
            }
            Some([t1, t2]) => {
                let (a, b) = (self.w_factor_invert(t1)?, self.w_factor_invert(t2)?);
                let (h12, h21) = (self.w_solve_h(t1, t2)?, self.w_solve_h(t2, t1)?);
                FactorWork {
                    dc: sum([a.dc, b.dc, h12.ll, h21.rr, self.w_mm(t2, t1, t2)?])?,
                    li: sum([a.li, b.li, h21.ll, h21.lr])?,
                    ri: sum([a.ri, b.ri, h12.rl, h12.rr])?,
                    inv: sum([a.inv, b.inv, self.w_mm(t1, t2, t1)?, h12.lr, h21.rl])?,
                }
            }
        };
        self.fi.insert(t, w);
        Ok(w)
    }

    /// `C_mm C_sp^2 (p+1)^2 k_hat^2 (|t| + |s| + |r|)`.
    pub fn mm_upper_bound(&self, t: ClusterId, s: ClusterId, r: ClusterId) -> Result<i128> {
        let csp = self.bt.sparsity_constant() as i128;
        let p1 = self.bt.clusters().depth() as i128 + 1;
        let kh = self.k_hat();
        prod([self.consts.c_mm(), csp * csp, p1 * p1, kh * kh, self.size(t) + self.size(s) + self.size(r)])
    }

    /// Work-model value bounding the flops of one recorded call, if the
    /// call kind has one.
    pub fn bound_for_call(&mut self, rec: &CallRecord) -> Result<i128> {
        let (t, s) = (rec.t, rec.s);
        match rec.op {
            OpKind::Addeval | OpKind::Addevaltrans => self.w_ev(t, s, rec.ell),
            OpKind::Update => self.w_up(t, s, rec.ell),
            OpKind::Merge => self.w_merge(t, s),
            OpKind::Addmul => {
                let r = rec
                    .r
                    .ok_or_else(|| Error::InvalidArgument("addmul record without third cluster".into()))?;
                self.w_mm(t, s, r)
            }
            OpKind::Lsolve | OpKind::Lsolvetrans => self.w_ls(t, rec.ell),
            OpKind::Rsolve | OpKind::Rsolvetrans => self.w_rs(t, rec.ell),
            OpKind::Llsolve => Ok(self.w_solve_h(t, s)?.ll),
            OpKind::Rlsolve => Ok(self.w_solve_h(t, s)?.rl),
            OpKind::Lrsolve => Ok(self.w_solve_h(t, s)?.lr),
            OpKind::Rrsolve => Ok(self.w_solve_h(t, s)?.rr),
            OpKind::Lrdecomp => Ok(self.w_factor_invert(t)?.dc),
            OpKind::Linvert => Ok(self.w_factor_invert(t)?.li),
            OpKind::Rinvert => Ok(self.w_factor_invert(t)?.ri),
            OpKind::Lrinvert => Ok(self.w_factor_invert(t)?.inv),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProductNode {
    pub t: ClusterId,
    pub s: ClusterId,
    pub r: ClusterId,
    /// Index of the first of eight consecutive sons.
    pub first_son: Option<usize>,
}

/// Triples visited by the recursive multiplication, rooted at the root triple.
#[derive(Debug, Clone)]
pub struct ProductTree {
    nodes: Vec<ProductNode>,
}

impl ProductTree {
    pub fn new(bt: &BlockTree) -> Self {
        let root = bt.clusters().root();
        let mut nodes = vec![ProductNode { t: root, s: root, r: root, first_son: None }];
        let mut i = 0;
        while i < nodes.len() {
            let ProductNode { t, s, r, .. } = nodes[i];
            if !bt.is_leaf(t, s) && !bt.is_leaf(s, r) {
                let ct = bt.clusters();
                let (ts, ss, rs) = (ct.sons(t).unwrap(), ct.sons(s).unwrap(), ct.sons(r).unwrap());
                nodes[i].first_son = Some(nodes.len());
                for &a in &ts {
                    for &b in &ss {
                        for &c in &rs {
                            nodes.push(ProductNode { t: a, s: b, r: c, first_son: None });
                        }
                    }
                }
            }
            i += 1;
        }
        Self { nodes }
    }

    pub fn nodes(&self) -> &[ProductNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &ProductNode {
        &self.nodes[0]
    }

    pub fn sons(&self, i: usize) -> Option<std::ops::Range<usize>> {
        self.nodes[i].first_son.map(|f| f..f + 8)
    }
}

pub fn build_product_tree(bt: &BlockTree) -> ProductTree {
    ProductTree::new(bt)
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub nodes: Vec<ClusterId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    pub lhs: i128,
    pub rhs: i128,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub checks: u64,
    pub violations: u64,
    /// Largest `lhs / rhs` seen.
    pub max_ratio: f64,
    pub passed: bool,
    pub examples: Vec<Violation>,
}

const MAX_EXAMPLES: usize = 10;

impl CheckSummary {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checks: 0, violations: 0, max_ratio: 0.0, passed: true, examples: Vec::new() }
    }

    fn check(&mut self, lhs: i128, rhs: i128, nodes: &[ClusterId], ell: Option<usize>) {
        self.checks += 1;
        if rhs > 0 {
            self.max_ratio = self.max_ratio.max(lhs as f64 / rhs as f64);
        }
        if lhs > rhs {
            self.violations += 1;
            self.passed = false;
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(Violation { nodes: nodes.to_vec(), ell, lhs, rhs });
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkReport {
    pub constants: ConstantsSummary,
    pub k: usize,
    pub depth: usize,
    pub c_sp: usize,
    pub k_hat: i128,
    pub clusters: usize,
    pub blocks: usize,
    pub product_nodes: usize,
    pub ells: Vec<usize>,
    pub checks: Vec<CheckSummary>,
    pub passed: bool,
}

impl WorkReport {
    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn total_violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

pub const CHECK_SOLVE_VECTORS: &str = "solve_vectors";
pub const CHECK_SOLVE_LEFT: &str = "solve_blocks_left";
pub const CHECK_SOLVE_RIGHT: &str = "solve_blocks_right";
pub const CHECK_COMBINED: &str = "combined";
pub const CHECK_MULTIPLICATION: &str = "multiplication";
pub const CHECK_CLUSTER_SUM: &str = "cluster_sum";
pub const CHECK_BLOCK_SUM: &str = "block_sum";
pub const CHECK_PRODUCT_SUM: &str = "product_sum";

/// `1..=2k` together with every cluster size occurring in an inadmissible leaf.
pub fn default_ells(bt: &BlockTree, k: usize) -> Vec<usize> {
    let mut set: BTreeSet<usize> = (1..=2 * k).collect();
    for b in bt.leaves().filter(|b| b.kind == BlockKind::Inadmissible) {
        set.insert(bt.clusters().size(b.row));
        set.insert(bt.clusters().size(b.col));
    }
    set.into_iter().collect()
}

/// Runs every inequality check exhaustively over the trees.
pub fn verify_all(bt: &BlockTree, k: usize, consts: WorkConstants, ells: &[usize]) -> Result<WorkReport> {
    let ct = bt.clusters();
    let mut wm = WorkModel::new(bt, k, consts);
    let pt = ProductTree::new(bt);
    let p1 = ct.depth() as i128 + 1;
    let csp = bt.sparsity_constant() as i128;

    let mut vec_check = CheckSummary::new(CHECK_SOLVE_VECTORS);
    for c in ct.clusters() {
        for &ell in ells {
            let (ls, rs) = wm.w_solve_vectors(c.id, ell)?;
            vec_check.check(add(ls, rs)?, wm.w_ev(c.id, c.id, ell)?, &[c.id], Some(ell));
        }
    }

    let mut left = CheckSummary::new(CHECK_SOLVE_LEFT);
    let mut right = CheckSummary::new(CHECK_SOLVE_RIGHT);
    for b in bt.blocks() {
        let (t, s) = (b.row, b.col);
        let h = wm.w_solve_h(t, s)?;
        left.check(add(h.ll, h.rl)?, wm.w_mm(t, t, s)?, &[t, s], None);
        right.check(add(h.lr, h.rr)?, wm.w_mm(t, s, s)?, &[t, s], None);
    }

    let mut combined = CheckSummary::new(CHECK_COMBINED);
    for c in ct.clusters() {
        let f = wm.w_factor_invert(c.id)?;
        combined.check(f.total()?, wm.w_mm(c.id, c.id, c.id)?, &[c.id], None);
    }

    let mut mult = CheckSummary::new(CHECK_MULTIPLICATION);
    for n in pt.nodes() {
        mult.check(wm.w_mm(n.t, n.s, n.r)?, wm.mm_upper_bound(n.t, n.s, n.r)?, &[n.t, n.s, n.r], None);
    }

    let size = |t: ClusterId| ct.size(t) as i128;

    // Pre-order ids: sons always follow their father.
    let mut csum = vec![0i128; ct.len()];
    let mut cluster_sum = CheckSummary::new(CHECK_CLUSTER_SUM);
    for c in ct.clusters().iter().rev() {
        csum[c.id] = add(size(c.id), c.sons.map_or(Ok(0), |[a, b]| add(csum[a], csum[b]))?)?;
        cluster_sum.check(csum[c.id], mul(p1, size(c.id))?, &[c.id], None);
    }

    let mut bsum = vec![(0i128, 0i128); bt.len()];
    let mut block_sum = CheckSummary::new(CHECK_BLOCK_SUM);
    for b in bt.blocks().iter().rev() {
        let (mut st, mut ss) = (size(b.row), size(b.col));
        for son in b.sons.iter().flatten() {
            st = add(st, bsum[*son].0)?;
            ss = add(ss, bsum[*son].1)?;
        }
        bsum[b.id] = (st, ss);
        block_sum.check(st, prod([csp, p1, size(b.row)])?, &[b.row, b.col], None);
        block_sum.check(ss, prod([csp, p1, size(b.col)])?, &[b.row, b.col], None);
    }

    let mut psum = vec![[0i128; 3]; pt.len()];
    let mut product_sum = CheckSummary::new(CHECK_PRODUCT_SUM);
    for i in (0..pt.len()).rev() {
        let n = pt.nodes()[i];
        let mut acc = [size(n.t), size(n.s), size(n.r)];
        if let Some(range) = pt.sons(i) {
            for j in range {
                for d in 0..3 {
                    acc[d] = add(acc[d], psum[j][d])?;
                }
            }
        }
        psum[i] = acc;
        for (d, c) in [n.t, n.s, n.r].into_iter().enumerate() {
            product_sum.check(acc[d], prod([csp * csp, p1, size(c)])?, &[n.t, n.s, n.r], None);
        }
    }

    let checks = vec![vec_check, left, right, combined, mult, cluster_sum, block_sum, product_sum];
    Ok(WorkReport {
        constants: consts.summary(),
        k,
        depth: ct.depth(),
        c_sp: bt.sparsity_constant(),
        k_hat: wm.k_hat(),
        clusters: ct.len(),
        blocks: bt.len(),
        product_nodes: pt.len(),
        ells: ells.to_vec(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Admissibility;
    use crate::cluster::ClusterTree;

    fn tree(n: usize, rho: usize, adm: Admissibility) -> BlockTree {
        BlockTree::new(&ClusterTree::new(n, rho).unwrap(), adm).unwrap()
    }

    #[test]
    fn dense_closed_forms() {
        assert_eq!(dense_lr_work(4).unwrap(), 34);
        assert_eq!(dense_invert_work(3).unwrap(), 11);
        assert_eq!(dense_lr_work(2).unwrap(), 3);
        assert_eq!(dense_lr_work(1).unwrap(), 0);
        assert_eq!(dense_invert_work(1).unwrap(), 1);
    }

    #[test]
    fn constants() {
        let c = WorkConstants::new(0, 3).unwrap();
        assert_eq!((c.c_up(), c.c_mg(), c.c_mm()), (1, 6, 12));
        assert!(WorkConstants::new(-1, 0).is_err());
    }

    #[test]
    fn small_tree_values() {
        let bt = tree(8, 2, Admissibility::Weak);
        let mut wm = WorkModel::new(&bt, 1, WorkConstants::new(1, 8).unwrap());
        assert_eq!(wm.w_ev(0, 0, 1).unwrap(), 104);
        // clusters: 0 = [0,8), 1 = [0,4), 2 = [0,2), 3 = [2,4), 4 = [4,8)
        assert_eq!(wm.w_ev(2, 2, 1).unwrap(), 10);
        assert_eq!(wm.w_ev(1, 4, 1).unwrap(), 16);
        assert_eq!(wm.w_up(2, 2, 2).unwrap(), 16);
        assert_eq!(wm.w_up(1, 4, 1).unwrap(), 32);
        assert_eq!(wm.w_mm(2, 2, 2).unwrap(), 36);
        let f = wm.w_factor_invert(2).unwrap();
        assert_eq!((f.dc, f.li, f.ri, f.inv), (3, 4, 4, 3));
        let (ls, rs) = wm.w_solve_vectors(0, 1).unwrap();
        assert!(ls + rs <= 104);
        assert_eq!(wm.k_hat(), 2);
        let c = wm.constants();
        assert_eq!(wm.mm_upper_bound(0, 0, 0).unwrap(), c.c_mm() * 4 * 9 * 4 * 24);
        assert!(matches!(wm.w_ev(2, 4, 1), Err(Error::StructureViolation(_))));
    }

    #[test]
    fn single_leaf_identities() {
        let bt = tree(5, 8, Admissibility::Weak);
        let mut wm = WorkModel::new(&bt, 3, WorkConstants::default());
        assert_eq!(wm.w_mm(0, 0, 0).unwrap(), 4 * 125 + 5 * 5);
        assert_eq!(wm.w_solve_vectors(0, 2).unwrap(), (50, 50));
        let f = wm.w_factor_invert(0).unwrap();
        assert_eq!(f.total().unwrap(), 5 * (12 * 25 - 30 + 6) / 6);
        assert_eq!(ProductTree::new(&bt).len(), 1);
    }

    #[test]
    fn product_tree_membership() {
        let bt = tree(64, 4, Admissibility::Eta(1.0));
        let pt = ProductTree::new(&bt);
        for (i, n) in pt.nodes().iter().enumerate() {
            assert!(bt.contains(n.t, n.s) && bt.contains(n.s, n.r));
            assert_eq!(pt.sons(i).is_none(), bt.is_leaf(n.t, n.s) || bt.is_leaf(n.s, n.r));
        }
    }

    #[test]
    fn verify_small_weak() {
        let bt = tree(8, 2, Admissibility::Weak);
        let rep = verify_all(&bt, 1, WorkConstants::default(), &default_ells(&bt, 1)).unwrap();
        assert!(rep.passed, "{rep:#?}");
        assert_eq!(rep.checks.len(), 8);
        let one = tree(1, 1, Admissibility::Weak);
        assert!(verify_all(&one, 1, WorkConstants::default(), &[1, 2]).unwrap().passed);
    }
}
