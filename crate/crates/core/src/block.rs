//! Block trees over pairs of clusters.

use std::fmt;

use serde::Serialize;

use crate::cluster::{ClusterId, ClusterTree};
use crate::error::{Error, Result};

pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "eta", rename_all = "lowercase")]
pub enum Admissibility {
    /// Every pair of disjoint clusters is admissible.
    Weak,
    /// `max(diam t, diam s) <= eta * dist(t, s)` on the unit interval.
    Eta(f64),
}

impl fmt::Display for Admissibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Admissibility::Weak => write!(f, "weak"),
            Admissibility::Eta(eta) => write!(f, "eta({eta})"),
        }
    }
}

impl Admissibility {
    fn admits(&self, tree: &ClusterTree, t: ClusterId, s: ClusterId) -> bool {
        if t == s {
            return false;
        }
        let (ct, cs) = (tree.cluster(t), tree.cluster(s));
        let gap = if ct.hi <= cs.lo {
            cs.lo - ct.hi
        } else if cs.hi <= ct.lo {
            ct.lo - cs.hi
        } else {
            return false;
        };
        match *self {
            Admissibility::Weak => true,
            Admissibility::Eta(eta) => {
                let n = tree.n() as f64;
                let diam = ct.size().max(cs.size()) as f64 / n;
                diam <= eta * (gap as f64 / n)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Admissible,
    Inadmissible,
    Subdivided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub id: BlockId,
    pub row: ClusterId,
    pub col: ClusterId,
    pub kind: BlockKind,
    /// Ordered `[(t1,s1), (t1,s2), (t2,s1), (t2,s2)]`.
    pub sons: Option<[BlockId; 4]>,
}

impl Block {
    pub fn is_leaf(&self) -> bool {
        self.kind != BlockKind::Subdivided
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord {
    pub rows: [usize; 2],
    pub cols: [usize; 2],
    pub kind: BlockKind,
}

#[derive(Debug, Clone)]
pub struct BlockTree {
    tree: ClusterTree,
    adm: Admissibility,
    blocks: Vec<Block>,
    /// Blocks per row cluster, as `(column cluster, block id)`.
    by_row: Vec<Vec<(ClusterId, BlockId)>>,
}

impl BlockTree {
    pub fn new(tree: &ClusterTree, adm: Admissibility) -> Result<Self> {
        if let Admissibility::Eta(eta) = adm {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
            }
        }
        let mut bt = Self {
            tree: tree.clone(),
            adm,
            blocks: Vec::new(),
            by_row: vec![Vec::new(); tree.len()],
        };
        bt.build(tree.root(), tree.root());
        Ok(bt)
    }

    fn build(&mut self, t: ClusterId, s: ClusterId) -> BlockId {
        let id = self.blocks.len();
        let kind = if self.adm.admits(&self.tree, t, s) {
            BlockKind::Admissible
        } else if self.tree.is_leaf(t) || self.tree.is_leaf(s) {
            BlockKind::Inadmissible
        } else {
            BlockKind::Subdivided
        };
        self.blocks.push(Block { id, row: t, col: s, kind, sons: None });
        self.by_row[t].push((s, id));
        if kind == BlockKind::Subdivided {
            let [t1, t2] = self.tree.sons(t).expect("subdivided row has sons");
            let [s1, s2] = self.tree.sons(s).expect("subdivided column has sons");
            let sons = [self.build(t1, s1), self.build(t1, s2), self.build(t2, s1), self.build(t2, s2)];
            self.blocks[id].sons = Some(sons);
        }
        id
    }

    pub fn clusters(&self) -> &ClusterTree {
        &self.tree
    }

    pub fn admissibility(&self) -> Admissibility {
        self.adm
    }

    pub fn root(&self) -> BlockId {
        0
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    #[inline]
    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block id of `(t, s)` if the pair belongs to the tree.
    #[inline]
    pub fn find(&self, t: ClusterId, s: ClusterId) -> Option<BlockId> {
        self.by_row.get(t)?.iter().find(|&&(c, _)| c == s).map(|&(_, b)| b)
    }

    pub fn contains(&self, t: ClusterId, s: ClusterId) -> bool {
        self.find(t, s).is_some()
    }

    pub fn kind(&self, t: ClusterId, s: ClusterId) -> Option<BlockKind> {
        self.find(t, s).map(|b| self.blocks[b].kind)
    }

    pub fn is_leaf(&self, t: ClusterId, s: ClusterId) -> bool {
        matches!(self.kind(t, s), Some(BlockKind::Admissible | BlockKind::Inadmissible))
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.is_leaf())
    }

    /// Largest number of blocks sharing a row or a column cluster.
    pub fn sparsity_constant(&self) -> usize {
        let mut cols = vec![0usize; self.tree.len()];
        for b in &self.blocks {
            cols[b.col] += 1;
        }
        let row_max = self.by_row.iter().map(Vec::len).max().unwrap_or(0);
        row_max.max(cols.into_iter().max().unwrap_or(0))
    }

    /// `(t, s)` and every pair below it; a pair outside the tree is its own
    /// only descendant.
    pub fn block_descendants(&self, t: ClusterId, s: ClusterId) -> Vec<(ClusterId, ClusterId)> {
        let Some(b) = self.find(t, s) else { return vec![(t, s)] };
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(id) = stack.pop() {
            let blk = &self.blocks[id];
            out.push((blk.row, blk.col));
            if let Some(sons) = blk.sons {
                stack.extend(sons.iter().rev());
            }
        }
        out
    }

    /// Level of the deepest block.
    pub fn depth(&self) -> usize {
        self.blocks.iter().map(|b| self.tree.cluster(b.row).level).max().unwrap_or(0)
    }

    /// Local rank `k_ts` of a leaf: `k` when admissible, `min(|t|, |s|)` otherwise.
    pub fn local_rank(&self, t: ClusterId, s: ClusterId, k: usize) -> Result<usize> {
        match self.kind(t, s) {
            Some(BlockKind::Admissible) => Ok(k),
            Some(BlockKind::Inadmissible) => Ok(self.tree.size(t).min(self.tree.size(s))),
            Some(BlockKind::Subdivided) => {
                Err(Error::StructureViolation(format!("({t}, {s}) is not a leaf")))
            }
            None => Err(Error::StructureViolation(format!("({t}, {s}) is not in the block tree"))),
        }
    }

    /// Maximal local rank over all leaves.
    pub fn max_leaf_rank(&self, k: usize) -> usize {
        self.leaves()
            .map(|b| match b.kind {
                BlockKind::Admissible => k,
                _ => self.tree.size(b.row).min(self.tree.size(b.col)),
            })
            .max()
            .unwrap_or(0)
    }

    pub fn records(&self) -> Vec<BlockRecord> {
        self.blocks
            .iter()
            .map(|b| {
                let (r, c) = (self.tree.cluster(b.row), self.tree.cluster(b.col));
                BlockRecord { rows: [r.lo, r.hi], cols: [c.lo, c.hi], kind: b.kind }
            })
            .collect()
    }
}

pub fn build_block_tree(tree: &ClusterTree, adm: Admissibility) -> Result<BlockTree> {
    BlockTree::new(tree, adm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(bt: &BlockTree, kind: BlockKind) -> usize {
        bt.blocks().iter().filter(|b| b.kind == kind).count()
    }

    #[test]
    fn single_leaf() {
        let t = ClusterTree::new(2, 2).unwrap();
        let bt = BlockTree::new(&t, Admissibility::Weak).unwrap();
        assert_eq!(bt.len(), 1);
        assert_eq!(bt.block(0).kind, BlockKind::Inadmissible);
        assert_eq!(bt.sparsity_constant(), 1);
    }

    #[test]
    fn eight_weak() {
        let t = ClusterTree::new(8, 2).unwrap();
        let bt = BlockTree::new(&t, Admissibility::Weak).unwrap();
        assert_eq!(bt.len(), 13);
        assert_eq!(count(&bt, BlockKind::Inadmissible), 4);
        assert_eq!(count(&bt, BlockKind::Admissible), 6);
        let [t1, t2] = t.sons(0).unwrap();
        assert_eq!(bt.kind(t1, t2), Some(BlockKind::Admissible));
        assert_eq!(bt.kind(t2, t1), Some(BlockKind::Admissible));
        assert_eq!(bt.sparsity_constant(), 2);
        let desc = bt.block_descendants(0, 0);
        assert_eq!(desc.len(), 13);
        let row_sum: usize = desc.iter().map(|&(a, _)| t.size(a)).sum();
        assert!(row_sum <= 2 * 3 * 8);
        assert_eq!(bt.max_leaf_rank(1), 2);
    }

    #[test]
    fn eta_is_denser_than_weak() {
        let t = ClusterTree::new(8, 2).unwrap();
        let weak = BlockTree::new(&t, Admissibility::Weak).unwrap();
        let eta = BlockTree::new(&t, Admissibility::Eta(1.0)).unwrap();
        assert!(count(&eta, BlockKind::Inadmissible) > count(&weak, BlockKind::Inadmissible));
    }

    #[test]
    fn outside_pairs_and_errors() {
        let t = ClusterTree::new(8, 2).unwrap();
        let bt = BlockTree::new(&t, Admissibility::Weak).unwrap();
        let [t1, _] = t.sons(0).unwrap();
        assert!(!bt.contains(0, t1));
        assert_eq!(bt.block_descendants(0, t1), vec![(0, t1)]);
        assert!(matches!(BlockTree::new(&t, Admissibility::Eta(0.0)), Err(Error::InvalidArgument(_))));
        assert!(bt.local_rank(0, 0, 3).is_err());
    }
}
