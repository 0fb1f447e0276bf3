//! Binary cluster trees over contiguous index ranges.

use serde::Serialize;

use crate::error::{Error, Result};

pub type ClusterId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub id: ClusterId,
    /// First index.
    pub lo: usize,
    /// One past the last index.
    pub hi: usize,
    pub level: usize,
    pub sons: Option<[ClusterId; 2]>,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_leaf(&self) -> bool {
        self.sons.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeStats {
    pub depth: usize,
    pub leaf_count: usize,
    pub max_leaf_size: usize,
}

/// Balanced bisection tree: a cluster with more than `rho` indices splits
/// after its first `ceil(size / 2)` indices.
///
/// Cluster ids are assigned in pre-order, so the root is `0` and the first
/// son of a cluster always has the smaller id.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterTree {
    n: usize,
    rho: usize,
    depth: usize,
    clusters: Vec<Cluster>,
}

impl ClusterTree {
    pub fn new(n: usize, rho: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("cluster tree needs n >= 1".into()));
        }
        if rho == 0 {
            return Err(Error::InvalidArgument("leaf size must be >= 1".into()));
        }
        let mut tree = Self { n, rho, depth: 0, clusters: Vec::new() };
        tree.split(0, n, 0);
        tree.depth = tree.clusters.iter().map(|c| c.level).max().unwrap_or(0);
        Ok(tree)
    }

    fn split(&mut self, lo: usize, hi: usize, level: usize) -> ClusterId {
        let id = self.clusters.len();
        self.clusters.push(Cluster { id, lo, hi, level, sons: None });
        let size = hi - lo;
        if size > self.rho {
            let mid = lo + size.div_ceil(2);
            let first = self.split(lo, mid, level + 1);
            let second = self.split(mid, hi, level + 1);
            self.clusters[id].sons = Some([first, second]);
        }
        id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    /// Maximal level `p`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> ClusterId {
        0
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn get(&self, id: ClusterId) -> Result<&Cluster> {
        self.clusters.get(id).ok_or(Error::UnknownCluster(id))
    }

    /// Panics on an unknown id.
    #[inline]
    pub fn cluster(&self, id: ClusterId) -> &Cluster {
        &self.clusters[id]
    }

    #[inline]
    pub fn size(&self, id: ClusterId) -> usize {
        self.clusters[id].size()
    }

    #[inline]
    pub fn sons(&self, id: ClusterId) -> Option<[ClusterId; 2]> {
        self.clusters[id].sons
    }

    #[inline]
    pub fn is_leaf(&self, id: ClusterId) -> bool {
        self.clusters[id].is_leaf()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.is_leaf())
    }

    /// `t` together with all clusters below it, in pre-order.
    pub fn descendants(&self, id: ClusterId) -> Result<Vec<ClusterId>> {
        self.get(id)?;
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            out.push(c);
            if let Some([a, b]) = self.sons(c) {
                stack.push(b);
                stack.push(a);
            }
        }
        Ok(out)
    }

    pub fn stats(&self) -> TreeStats {
        TreeStats {
            depth: self.depth,
            leaf_count: self.leaves().count(),
            max_leaf_size: self.leaves().map(Cluster::size).max().unwrap_or(0),
        }
    }

    /// Coordinate of index `i` on the unit interval.
    pub fn point(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n as f64
    }
}

pub fn build_cluster_tree(n: usize, rho: usize) -> Result<ClusterTree> {
    ClusterTree::new(n, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_tree() {
        let t = ClusterTree::new(1, 1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.stats(), TreeStats { depth: 0, leaf_count: 1, max_leaf_size: 1 });
        assert_eq!(t.descendants(0).unwrap(), vec![0]);
    }

    #[test]
    fn eight_by_two() {
        let t = ClusterTree::new(8, 2).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(t.stats(), TreeStats { depth: 2, leaf_count: 4, max_leaf_size: 2 });
        let desc = t.descendants(t.root()).unwrap();
        assert_eq!(desc.len(), 7);
        assert_eq!(desc.iter().map(|&c| t.size(c)).sum::<usize>(), 24);
        for leaf in t.leaves() {
            assert_eq!(leaf.level, 2);
            assert_eq!(t.descendants(leaf.id).unwrap(), vec![leaf.id]);
        }
    }

    #[test]
    fn odd_split() {
        let t = ClusterTree::new(5, 2).unwrap();
        let [a, b] = t.sons(0).unwrap();
        assert_eq!((t.cluster(a).lo, t.cluster(a).hi), (0, 3));
        assert_eq!((t.cluster(b).lo, t.cluster(b).hi), (3, 5));
        let [c, d] = t.sons(a).unwrap();
        assert_eq!((t.cluster(c).lo, t.cluster(c).hi), (0, 2));
        assert_eq!((t.cluster(d).lo, t.cluster(d).hi), (2, 3));
        assert_eq!(t.stats(), TreeStats { depth: 2, leaf_count: 3, max_leaf_size: 2 });
    }

    #[test]
    fn errors() {
        assert!(matches!(ClusterTree::new(0, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(ClusterTree::new(4, 0), Err(Error::InvalidArgument(_))));
        let t = ClusterTree::new(4, 1).unwrap();
        assert_eq!(t.descendants(99), Err(Error::UnknownCluster(99)));
        assert!((t.point(0) - 0.125).abs() < 1e-15);
    }
}
