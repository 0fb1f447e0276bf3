//! Leaf-wise binary dump.
//!
//! Layout, all integers `u64` and all reals `f64`, little endian:
//! magic `HMAT`, `u32` version, `n`, leaf count, then per leaf the row and
//! column ranges, one kind byte (`0` dense, `1` low rank, `2` absent), the
//! rank and the entries (dense row-major, or `A` then `B` row-major).

use std::io::{self, Read, Write};

use crate::dense::DenseMatrix;
use crate::hmatrix::node::{HMatrix, HNode, NodeData};
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"HMAT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Dense = 0,
    LowRank = 1,
    Absent = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafRecord {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub kind: LeafKind,
    pub rank: usize,
    pub entries: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub n: usize,
    pub leaves: Vec<LeafRecord>,
}

impl Dump {
    /// Reassembles the dense matrix; absent leaves read as zero.
    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let mut out = DenseMatrix::zeros(self.n, self.n);
        for leaf in &self.leaves {
            let (m, n) = (leaf.rows.1 - leaf.rows.0, leaf.cols.1 - leaf.cols.0);
            let block = match leaf.kind {
                LeafKind::Dense => DenseMatrix::from_vec(m, n, leaf.entries.clone()).expect("sizes checked on read"),
                LeafKind::LowRank => {
                    let k = leaf.rank;
                    let a = DenseMatrix::from_vec(m, k, leaf.entries[..m * k].to_vec()).expect("sizes checked on read");
                    let b = DenseMatrix::from_vec(n, k, leaf.entries[m * k..].to_vec()).expect("sizes checked on read");
                    a.matmul(&b.transpose())
                }
                LeafKind::Absent => continue,
            };
            out.set_submatrix(leaf.rows.0, leaf.cols.0, block.view());
        }
        out
    }
}

fn put_u64(w: &mut impl Write, v: usize) -> io::Result<()> {
    w.write_all(&(v as u64).to_le_bytes())
}

fn put_matrix<T: Scalar>(w: &mut impl Write, m: &DenseMatrix<T>) -> io::Result<()> {
    for &x in m.as_slice() {
        w.write_all(&x.to_f64_lossy().to_le_bytes())?;
    }
    Ok(())
}

pub fn write_dump<T: Scalar>(h: &HMatrix<T>, w: &mut impl Write) -> io::Result<()> {
    let mut leaves: Vec<&HNode<T>> = Vec::new();
    h.root().for_each_leaf(&mut |n| leaves.push(n));
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    put_u64(w, h.n())?;
    put_u64(w, leaves.len())?;
    for leaf in leaves {
        for v in [leaf.rows.lo, leaf.rows.hi, leaf.cols.lo, leaf.cols.hi] {
            put_u64(w, v)?;
        }
        match &leaf.data {
            NodeData::Dense(m) => {
                w.write_all(&[LeafKind::Dense as u8])?;
                put_u64(w, leaf.rows.size().min(leaf.cols.size()))?;
                put_matrix(w, m)?;
            }
            NodeData::LowRank(lr) => {
                w.write_all(&[LeafKind::LowRank as u8])?;
                put_u64(w, lr.rank())?;
                put_matrix(w, &lr.a)?;
                put_matrix(w, &lr.b)?;
            }
            NodeData::Absent => {
                w.write_all(&[LeafKind::Absent as u8])?;
                put_u64(w, 0)?;
            }
            NodeData::Split(_) => unreachable!("leaf iteration never yields split nodes"),
        }
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> io::Result<usize> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    usize::try_from(u64::from_le_bytes(buf)).map_err(|_| bad("value exceeds address space"))
}

fn bad(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

pub fn read_dump(r: &mut impl Read) -> io::Result<Dump> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not an HMAT dump"));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    if u32::from_le_bytes(ver) != VERSION {
        return Err(bad("unsupported dump version"));
    }
    let n = get_u64(r)?;
    let count = get_u64(r)?;
    let mut leaves = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let (rlo, rhi, clo, chi) = (get_u64(r)?, get_u64(r)?, get_u64(r)?, get_u64(r)?);
        if rlo > rhi || clo > chi || rhi > n || chi > n {
            return Err(bad("leaf range outside the matrix"));
        }
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let rank = get_u64(r)?;
        let (m, c) = (rhi - rlo, chi - clo);
        let (kind, len) = match kind[0] {
            0 => (LeafKind::Dense, m * c),
            1 => (LeafKind::LowRank, (m + c) * rank),
            2 => (LeafKind::Absent, 0),
            _ => return Err(bad("unknown leaf kind")),
        };
        let mut entries = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            entries.push(f64::from_le_bytes(buf));
        }
        leaves.push(LeafRecord { rows: (rlo, rhi), cols: (clo, chi), kind, rank, entries });
    }
    Ok(Dump { n, leaves })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::block::{Admissibility, BlockTree};
    use crate::cluster::ClusterTree;

    #[test]
    fn round_trip() {
        let bt = Arc::new(BlockTree::new(&ClusterTree::new(16, 4).unwrap(), Admissibility::Weak).unwrap());
        let m = DenseMatrix::from_fn(16, 16, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let h = HMatrix::from_dense(&m, bt, 3, 0.0).unwrap();
        let mut bytes = Vec::new();
        write_dump(&h, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        let dump = read_dump(&mut bytes.as_slice()).unwrap();
        assert_eq!(dump.n, 16);
        assert!(dump.leaves.iter().any(|l| l.kind == LeafKind::LowRank));
        assert!(dump.to_dense().sub(&h.to_dense()).max_abs() == 0.0);
        assert!(read_dump(&mut &bytes[..10]).is_err());
        assert!(read_dump(&mut &b"XXXX\x01\0\0\0"[..]).is_err());
    }
}
