//! Storage of hierarchical matrices.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::block::{BlockId, BlockKind, BlockTree};
use crate::cluster::ClusterId;
use crate::dense::{matmul, thin_qr, truncate_lowrank, DenseMatrix, MatRef, Op, Side};
use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::hmatrix::ctx::Ctx;
use crate::scalar::Scalar;

/// Blocks whose smaller dimension exceeds this are compressed with a
/// randomized range finder instead of a full SVD.
pub const EXACT_COMPRESSION_LIMIT: usize = 128;
const OVERSAMPLING: usize = 10;
const POWER_ITERATIONS: usize = 2;

/// Cluster together with its index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub cluster: ClusterId,
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    #[inline]
    pub fn size(&self) -> usize {
        self.hi - self.lo
    }

    pub fn same_range(&self, other: &Span) -> bool {
        self.lo == other.lo && self.hi == other.hi
    }
}

/// Factorized block `A B^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRank<T> {
    pub a: DenseMatrix<T>,
    pub b: DenseMatrix<T>,
}

impl<T: Scalar> LowRank<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self { a: DenseMatrix::zeros(rows, 0), b: DenseMatrix::zeros(cols, 0) }
    }

    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.a.matmul(&self.b.transpose())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeData<T> {
    /// Inadmissible leaf.
    Dense(DenseMatrix<T>),
    /// Admissible leaf, or a scratch block inside a multiplication.
    LowRank(LowRank<T>),
    /// Sons ordered `[(t1,s1), (t1,s2), (t2,s1), (t2,s2)]`.
    Split(Box<[HNode<T>; 4]>),
    /// Opposite triangle of a separately stored triangular factor.
    Absent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HNode<T> {
    pub rows: Span,
    pub cols: Span,
    pub data: NodeData<T>,
}

impl<T: Scalar> HNode<T> {
    /// Builds the subtree of block `b`, asking `leaf` for the content of every leaf.
    pub fn build(
        bt: &BlockTree,
        b: BlockId,
        leaf: &mut impl FnMut(BlockKind, Span, Span) -> Result<NodeData<T>>,
    ) -> Result<Self> {
        let blk = bt.block(b);
        let ct = bt.clusters();
        let rows = Span { cluster: blk.row, lo: ct.cluster(blk.row).lo, hi: ct.cluster(blk.row).hi };
        let cols = Span { cluster: blk.col, lo: ct.cluster(blk.col).lo, hi: ct.cluster(blk.col).hi };
        let data = match blk.sons {
            Some([a, b2, c, d]) => NodeData::Split(Box::new([
                Self::build(bt, a, leaf)?,
                Self::build(bt, b2, leaf)?,
                Self::build(bt, c, leaf)?,
                Self::build(bt, d, leaf)?,
            ])),
            None => leaf(blk.kind, rows, cols)?,
        };
        Ok(Self { rows, cols, data })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.size(), self.cols.size())
    }

    pub fn is_diagonal(&self) -> bool {
        self.rows.cluster == self.cols.cluster
    }

    pub fn children(&self) -> Option<&[HNode<T>; 4]> {
        match &self.data {
            NodeData::Split(c) => Some(c),
            _ => None,
        }
    }

    pub fn children_mut(&mut self) -> Option<&mut [HNode<T>; 4]> {
        match &mut self.data {
            NodeData::Split(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self.data, NodeData::Split(_))
    }

    /// Writes the block into `out` at offset `(row0, col0)`; absent parts stay untouched.
    pub fn write_dense(&self, out: &mut DenseMatrix<T>, row0: usize, col0: usize) {
        match &self.data {
            NodeData::Dense(m) => out.set_submatrix(row0, col0, m.view()),
            NodeData::LowRank(lr) => out.set_submatrix(row0, col0, lr.to_dense().view()),
            NodeData::Split(ch) => {
                for c in ch.iter() {
                    c.write_dense(
                        out,
                        row0 + c.rows.lo - self.rows.lo,
                        col0 + c.cols.lo - self.cols.lo,
                    );
                }
            }
            NodeData::Absent => {}
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows.size(), self.cols.size());
        self.write_dense(&mut out, 0, 0);
        out
    }

    pub fn for_each_leaf<'a>(&'a self, f: &mut impl FnMut(&'a HNode<T>)) {
        match &self.data {
            NodeData::Split(ch) => ch.iter().for_each(|c| c.for_each_leaf(f)),
            _ => f(self),
        }
    }

    /// Largest rank among low-rank leaves.
    pub fn max_rank(&self) -> usize {
        let mut r = 0;
        self.for_each_leaf(&mut |n| {
            if let NodeData::LowRank(lr) = &n.data {
                r = r.max(lr.rank());
            }
        });
        r
    }

    /// Same block structure, ignoring leaf contents.
    pub fn same_structure(&self, other: &HNode<T>) -> bool {
        if self.rows != other.rows || self.cols != other.cols {
            return false;
        }
        match (&self.data, &other.data) {
            (NodeData::Split(a), NodeData::Split(b)) => {
                a.iter().zip(b.iter()).all(|(x, y)| x.same_structure(y))
            }
            (NodeData::Dense(_), NodeData::Dense(_))
            | (NodeData::LowRank(_), NodeData::LowRank(_))
            | (NodeData::Absent, NodeData::Absent) => true,
            _ => false,
        }
    }

    /// Zero block with the same structure; off-diagonal blocks on the
    /// opposite side of `side` become absent.
    pub fn triangular_shell(&self, side: Side) -> HNode<T> {
        let data = match &self.data {
            NodeData::Split(ch) if self.is_diagonal() => {
                let mut sons = ch.clone().map(|c| c.zeroed());
                for (idx, c) in ch.iter().enumerate() {
                    sons[idx] = match (idx, side) {
                        (0 | 3, _) => c.triangular_shell(side),
                        (1, Side::Lower) | (2, Side::Upper) => {
                            HNode { rows: c.rows, cols: c.cols, data: NodeData::Absent }
                        }
                        _ => c.zeroed(),
                    };
                }
                NodeData::Split(Box::new(sons))
            }
            _ => return self.zeroed(),
        };
        HNode { rows: self.rows, cols: self.cols, data }
    }

    /// Zero block with the same structure.
    pub fn zeroed(&self) -> HNode<T> {
        let (m, n) = self.shape();
        let data = match &self.data {
            NodeData::Dense(_) => NodeData::Dense(DenseMatrix::zeros(m, n)),
            NodeData::LowRank(_) => NodeData::LowRank(LowRank::zero(m, n)),
            NodeData::Split(ch) => NodeData::Split(Box::new(ch.clone().map(|c| c.zeroed()))),
            NodeData::Absent => NodeData::Absent,
        };
        HNode { rows: self.rows, cols: self.cols, data }
    }

    /// Descends to the node of cluster pair `(t, s)` given their ranges.
    pub fn find(&self, t: Span, s: Span) -> Option<&HNode<T>> {
        if self.rows.cluster == t.cluster && self.cols.cluster == s.cluster {
            return Some(self);
        }
        self.children()?
            .iter()
            .find(|c| c.rows.lo <= t.lo && t.hi <= c.rows.hi && c.cols.lo <= s.lo && s.hi <= c.cols.hi)?
            .find(t, s)
    }

    pub fn find_mut(&mut self, t: Span, s: Span) -> Option<&mut HNode<T>> {
        if self.rows.cluster == t.cluster && self.cols.cluster == s.cluster {
            return Some(self);
        }
        self.children_mut()?
            .iter_mut()
            .find(|c| c.rows.lo <= t.lo && t.hi <= c.rows.hi && c.cols.lo <= s.lo && s.hi <= c.cols.hi)?
            .find_mut(t, s)
    }
}

/// Compresses `m` to rank at most `k`, see [`EXACT_COMPRESSION_LIMIT`].
pub fn compress<T: Scalar>(m: MatRef<'_, T>, k: usize, eps: f64, seed: u64) -> LowRank<T> {
    let mut scratch = FlopCounter::new();
    let (rows, cols) = (m.rows(), m.cols());
    if rows.min(cols) <= EXACT_COMPRESSION_LIMIT {
        let (a, b) = truncate_lowrank(m, k, eps, &mut scratch);
        return LowRank { a, b };
    }
    let width = (k + OVERSAMPLING).min(rows.min(cols));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DenseMatrix::from_fn(cols, width, |_, _| {
        let x: f64 = StandardNormal.sample(&mut rng);
        T::from_f64_lossy(x)
    });
    let f = &mut scratch;
    let mut q = thin_qr(matmul(m, Op::NoTrans, omega.view(), Op::NoTrans, f).view(), f).0;
    for _ in 0..POWER_ITERATIONS {
        let z = thin_qr(matmul(m, Op::Trans, q.view(), Op::NoTrans, f).view(), f).0;
        q = thin_qr(matmul(m, Op::NoTrans, z.view(), Op::NoTrans, f).view(), f).0;
    }
    let small = matmul(q.view(), Op::Trans, m, Op::NoTrans, f);
    let (c, b) = truncate_lowrank(small.view(), k, eps, f);
    let a = matmul(q.view(), Op::NoTrans, c.view(), Op::NoTrans, f);
    LowRank { a, b }
}

/// Hierarchical matrix over a shared block tree.
#[derive(Debug, Clone)]
pub struct HMatrix<T> {
    blocks: Arc<BlockTree>,
    root: HNode<T>,
    k: usize,
    eps: f64,
}

impl<T: Scalar> HMatrix<T> {
    pub fn from_root(blocks: Arc<BlockTree>, root: HNode<T>, k: usize, eps: f64) -> Self {
        Self { blocks, root, k, eps }
    }

    pub fn zeros(blocks: Arc<BlockTree>, k: usize, eps: f64) -> Self {
        let root = HNode::build(&blocks, blocks.root(), &mut |kind, r, c| {
            Ok(match kind {
                BlockKind::Admissible => NodeData::LowRank(LowRank::zero(r.size(), c.size())),
                _ => NodeData::Dense(DenseMatrix::zeros(r.size(), c.size())),
            })
        })
        .expect("zero construction cannot fail");
        Self { blocks, root, k, eps }
    }

    pub fn identity(blocks: Arc<BlockTree>, k: usize, eps: f64) -> Self {
        let mut h = Self::zeros(blocks, k, eps);
        h.root.for_each_leaf_mut(&mut |n| {
            if n.is_diagonal() {
                n.data = NodeData::Dense(DenseMatrix::identity(n.rows.size()));
            }
        });
        h
    }

    /// Compresses a dense matrix: admissible leaves are truncated to rank
    /// `k` with relative tolerance `eps`, inadmissible leaves are copied.
    pub fn from_dense(m: &DenseMatrix<T>, blocks: Arc<BlockTree>, k: usize, eps: f64) -> Result<Self> {
        let n = blocks.clusters().n();
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, tree covers {n} indices",
                m.rows(),
                m.cols()
            )));
        }
        let root = HNode::build(&blocks, blocks.root(), &mut |kind, r, c| {
            let sub = m.submatrix(r.lo, c.lo, r.size(), c.size());
            Ok(match kind {
                BlockKind::Admissible => {
                    let seed = ((r.lo as u64) << 32) ^ (c.lo as u64) ^ 0x9e37_79b9;
                    NodeData::LowRank(compress(sub.view(), k, eps, seed))
                }
                _ => NodeData::Dense(sub),
            })
        })?;
        Ok(Self { blocks, root, k, eps })
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.root.to_dense()
    }

    pub fn root(&self) -> &HNode<T> {
        &self.root
    }

    pub fn root_mut(&mut self) -> &mut HNode<T> {
        &mut self.root
    }

    pub fn into_root(self) -> HNode<T> {
        self.root
    }

    pub fn blocks(&self) -> &Arc<BlockTree> {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn n(&self) -> usize {
        self.root.rows.size()
    }

    /// Fresh context carrying this matrix's truncation parameters.
    pub fn ctx(&self) -> Ctx {
        Ctx::new(self.k, self.eps)
    }

    pub fn span(&self, t: ClusterId) -> Result<Span> {
        let c = self.blocks.clusters().get(t)?;
        Ok(Span { cluster: t, lo: c.lo, hi: c.hi })
    }

    pub fn node(&self, t: ClusterId, s: ClusterId) -> Result<&HNode<T>> {
        let (ts, ss) = (self.span(t)?, self.span(s)?);
        self.root
            .find(ts, ss)
            .ok_or_else(|| Error::StructureViolation(format!("({t}, {s}) is not a block of this matrix")))
    }

    pub fn node_mut(&mut self, t: ClusterId, s: ClusterId) -> Result<&mut HNode<T>> {
        let (ts, ss) = (self.span(t)?, self.span(s)?);
        self.root
            .find_mut(ts, ss)
            .ok_or_else(|| Error::StructureViolation(format!("({t}, {s}) is not a block of this matrix")))
    }

    /// Zero matrix with the structure of one triangle.
    pub fn triangular_shell(&self, side: Side) -> Self {
        Self { blocks: self.blocks.clone(), root: self.root.triangular_shell(side), k: self.k, eps: self.eps }
    }

    pub fn max_rank(&self) -> usize {
        self.root.max_rank()
    }

    /// Checks that the node tree mirrors the block tree and that leaf kinds
    /// and shapes agree with it; absent blocks are accepted anywhere.
    pub fn check_structure(&self) -> Result<()> {
        check_node(&self.blocks, self.blocks.root(), &self.root, self.k)
    }
}

fn check_node<T: Scalar>(bt: &BlockTree, b: BlockId, node: &HNode<T>, k: usize) -> Result<()> {
    let blk = bt.block(b);
    let fail = |msg: &str| Err(Error::StructureViolation(format!("block ({}, {}): {msg}", blk.row, blk.col)));
    if node.rows.cluster != blk.row || node.cols.cluster != blk.col {
        return fail("cluster mismatch");
    }
    let (m, n) = node.shape();
    match (&node.data, blk.kind) {
        (NodeData::Absent, _) => Ok(()),
        (NodeData::Dense(d), BlockKind::Inadmissible) if d.shape() == (m, n) => Ok(()),
        (NodeData::LowRank(lr), BlockKind::Admissible) => {
            if lr.a.rows() != m || lr.b.rows() != n || lr.a.cols() != lr.b.cols() {
                fail("factor shapes")
            } else if lr.rank() > k {
                fail("rank above cap")
            } else {
                Ok(())
            }
        }
        (NodeData::Split(ch), BlockKind::Subdivided) => {
            let sons = blk.sons.expect("subdivided block has sons");
            sons.iter().zip(ch.iter()).try_for_each(|(&sb, c)| check_node(bt, sb, c, k))
        }
        _ => fail("leaf kind differs from block tree"),
    }
}

impl<T: Scalar> HNode<T> {
    pub fn for_each_leaf_mut(&mut self, f: &mut impl FnMut(&mut HNode<T>)) {
        match &mut self.data {
            NodeData::Split(ch) => ch.iter_mut().for_each(|c| c.for_each_leaf_mut(f)),
            _ => f(self),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::Admissibility;
    use crate::cluster::ClusterTree;

    fn tree(n: usize, rho: usize, adm: Admissibility) -> Arc<BlockTree> {
        Arc::new(BlockTree::new(&ClusterTree::new(n, rho).unwrap(), adm).unwrap())
    }

    #[test]
    fn zero_and_identity() {
        let bt = tree(16, 2, Admissibility::Weak);
        let z = HMatrix::<f64>::from_dense(&DenseMatrix::zeros(16, 16), bt.clone(), 4, 0.0).unwrap();
        assert_eq!(z.max_rank(), 0);
        z.check_structure().unwrap();
        let i = HMatrix::<f64>::from_dense(&DenseMatrix::identity(16), bt.clone(), 4, 0.0).unwrap();
        assert_eq!(i.max_rank(), 0);
        assert_eq!(i.to_dense(), DenseMatrix::identity(16));
        assert_eq!(HMatrix::<f64>::identity(bt, 4, 0.0).to_dense(), DenseMatrix::identity(16));
    }

    #[test]
    fn single_block_copy_is_exact() {
        let bt = tree(8, 8, Admissibility::Weak);
        let m = DenseMatrix::from_fn(8, 8, |i, j| (i * 8 + j) as f64 / 3.0);
        let h = HMatrix::from_dense(&m, bt, 2, 0.0).unwrap();
        assert_eq!(h.to_dense(), m);
    }

    #[test]
    fn node_lookup_and_shells() {
        let bt = tree(8, 2, Admissibility::Weak);
        let m = DenseMatrix::from_fn(8, 8, |i, j| 1.0 / (1.0 + i as f64 + 2.0 * j as f64));
        let h = HMatrix::from_dense(&m, bt.clone(), 8, 0.0).unwrap();
        let [t1, t2] = bt.clusters().sons(0).unwrap();
        let node = h.node(t2, t1).unwrap();
        assert_eq!((node.rows.lo, node.cols.lo), (4, 0));
        assert!(h.node(0, t1).is_err());
        let lower = h.triangular_shell(Side::Lower);
        assert!(matches!(lower.node(t1, t2).unwrap().data, NodeData::Absent));
        lower.check_structure().unwrap();
        assert!(lower.root().same_structure(lower.root()));
        assert!(!lower.root().same_structure(h.root()));
        assert!(h.to_dense().sub(&m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn randomized_compression_of_smooth_block() {
        let (rows, cols) = (200, 160);
        let m = DenseMatrix::<f64>::from_fn(rows, cols, |i, j| {
            let x = i as f64 / rows as f64;
            let y = 2.0 + j as f64 / cols as f64;
            (y - x).ln()
        });
        let lr = compress(m.view(), 8, 0.0, 7);
        assert!(lr.to_dense().sub(&m).frobenius_norm() < 1e-8 * m.frobenius_norm());
        let again = compress(m.view(), 8, 0.0, 7);
        assert_eq!(lr, again);
    }
}
