//! Matrix-times-dense products, low-rank updates, merging and multiplication.

use crate::dense::{gemm, matmul, thin_qr, truncate_lowrank, DenseMatrix, MatMut, MatRef, Mode, Op};
use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::hmatrix::ctx::{Ctx, OpKind, TruncParams};
use crate::hmatrix::node::{HMatrix, HNode, LowRank, NodeData};
use crate::scalar::Scalar;

fn absent<T: Scalar>(node: &HNode<T>, what: &str) -> Error {
    Error::StructureViolation(format!(
        "{what} reached absent block ({}, {})",
        node.rows.cluster, node.cols.cluster
    ))
}

fn check_rows(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what}: {got} rows, expected {want}")));
    }
    Ok(())
}

fn is_unit<T: Scalar>(alpha: T) -> bool {
    alpha == T::one() || alpha == -T::one()
}

/// `X += alpha op(N) Y` for a dense block, scaling whichever of `Y` and the
/// product is smaller.
fn dense_addeval<T: Scalar>(
    alpha: T,
    n: &DenseMatrix<T>,
    op: Op,
    y: MatRef<'_, T>,
    x: MatMut<'_, T>,
    flops: &mut FlopCounter,
) {
    let inner = y.rows();
    let outer = x.rows();
    if is_unit(alpha) || inner > outer {
        gemm(alpha, n.view(), op, y, Op::NoTrans, Mode::Accumulate, x, flops);
    } else {
        let ys = y.to_owned().scaled(alpha);
        flops.count_mul(inner * y.cols());
        gemm(T::one(), n.view(), op, ys.view(), Op::NoTrans, Mode::Accumulate, x, flops);
    }
}

/// `X += alpha G Y` with `Y` indexed by the columns and `X` by the rows of `g`.
pub fn addeval<T: Scalar>(
    alpha: T,
    g: &HNode<T>,
    y: MatRef<'_, T>,
    mut x: MatMut<'_, T>,
    ctx: &mut Ctx,
) -> Result<()> {
    check_rows("addeval input", y.rows(), g.cols.size())?;
    check_rows("addeval output", x.rows(), g.rows.size())?;
    if x.cols() != y.cols() {
        return Err(Error::DimensionMismatch("addeval: column counts differ".into()));
    }
    let start = ctx.mark();
    let ell = y.cols();
    match &g.data {
        NodeData::Dense(n) => dense_addeval(alpha, n, Op::NoTrans, y, x, &mut ctx.flops),
        NodeData::LowRank(lr) => {
            if lr.rank() > 0 && ell > 0 {
                let mut z = DenseMatrix::zeros(lr.rank(), ell);
                gemm(alpha, lr.b.view(), Op::Trans, y, Op::NoTrans, Mode::Overwrite, z.view_mut(), &mut ctx.flops);
                gemm(T::one(), lr.a.view(), Op::NoTrans, z.view(), Op::NoTrans, Mode::Accumulate, x, &mut ctx.flops);
            }
        }
        NodeData::Split(ch) => {
            let (x1, x2) = x.rb_mut().split_rows_at(ch[0].rows.size());
            for (i, mut xi) in [x1, x2].into_iter().enumerate() {
                for c in &ch[2 * i..2 * i + 2] {
                    let yj = y.rows_range(c.cols.lo - g.cols.lo, c.cols.hi - g.cols.lo);
                    addeval(alpha, c, yj, xi.rb_mut(), ctx)?;
                }
            }
        }
        NodeData::Absent => return Err(absent(g, "addeval")),
    }
    ctx.record(OpKind::Addeval, (g.rows.cluster, g.cols.cluster, None), ell, start);
    Ok(())
}

/// `X += alpha G^T Y` with `Y` indexed by the rows and `X` by the columns of `g`.
pub fn addevaltrans<T: Scalar>(
    alpha: T,
    g: &HNode<T>,
    y: MatRef<'_, T>,
    mut x: MatMut<'_, T>,
    ctx: &mut Ctx,
) -> Result<()> {
    check_rows("addevaltrans input", y.rows(), g.rows.size())?;
    check_rows("addevaltrans output", x.rows(), g.cols.size())?;
    if x.cols() != y.cols() {
        return Err(Error::DimensionMismatch("addevaltrans: column counts differ".into()));
    }
    let start = ctx.mark();
    let ell = y.cols();
    match &g.data {
        NodeData::Dense(n) => dense_addeval(alpha, n, Op::Trans, y, x, &mut ctx.flops),
        NodeData::LowRank(lr) => {
            if lr.rank() > 0 && ell > 0 {
                let mut z = DenseMatrix::zeros(lr.rank(), ell);
                gemm(alpha, lr.a.view(), Op::Trans, y, Op::NoTrans, Mode::Overwrite, z.view_mut(), &mut ctx.flops);
                gemm(T::one(), lr.b.view(), Op::NoTrans, z.view(), Op::NoTrans, Mode::Accumulate, x, &mut ctx.flops);
            }
        }
        NodeData::Split(ch) => {
            let (x1, x2) = x.rb_mut().split_rows_at(ch[0].cols.size());
            for (j, mut xj) in [x1, x2].into_iter().enumerate() {
                for c in [&ch[j], &ch[2 + j]] {
                    let yi = y.rows_range(c.rows.lo - g.rows.lo, c.rows.hi - g.rows.lo);
                    addevaltrans(alpha, c, yi, xj.rb_mut(), ctx)?;
                }
            }
        }
        NodeData::Absent => return Err(absent(g, "addevaltrans")),
    }
    ctx.record(OpKind::Addevaltrans, (g.rows.cluster, g.cols.cluster, None), ell, start);
    Ok(())
}

/// Truncated `A_z B_z^T + A B^T`: thin QR of `[B_z B]`, truncation of the
/// small product, reflectors applied to the new right factor.
pub(crate) fn lowrank_add<T: Scalar>(
    lr: &mut LowRank<T>,
    a: MatRef<'_, T>,
    b: MatRef<'_, T>,
    trunc: TruncParams,
    flops: &mut FlopCounter,
) {
    let ahat = lr.a.hcat(&a.to_owned());
    let bhat = lr.b.hcat(&b.to_owned());
    let (q, r) = thin_qr(bhat.view(), flops);
    let m = matmul(ahat.view(), Op::NoTrans, r.view(), Op::Trans, flops);
    let (c, dhat) = truncate_lowrank(m.view(), trunc.k, trunc.eps, flops);
    lr.b = matmul(q.view(), Op::NoTrans, dhat.view(), Op::NoTrans, flops);
    lr.a = c;
}

/// `G += A B^T`, exact on dense leaves and truncated on low-rank ones.
pub fn update<T: Scalar>(
    g: &mut HNode<T>,
    a: MatRef<'_, T>,
    b: MatRef<'_, T>,
    ctx: &mut Ctx,
) -> Result<()> {
    check_rows("update left factor", a.rows(), g.rows.size())?;
    check_rows("update right factor", b.rows(), g.cols.size())?;
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch("update: factor ranks differ".into()));
    }
    let start = ctx.mark();
    let ell = a.cols();
    let (rlo, clo) = (g.rows.lo, g.cols.lo);
    let key = (g.rows.cluster, g.cols.cluster, None);
    match &mut g.data {
        NodeData::Dense(n) => {
            gemm(T::one(), a, Op::NoTrans, b, Op::Trans, Mode::Accumulate, n.view_mut(), &mut ctx.flops);
        }
        NodeData::LowRank(lr) => {
            if ell > 0 {
                lowrank_add(lr, a, b, ctx.trunc, &mut ctx.flops);
            }
        }
        NodeData::Split(ch) => {
            for c in ch.iter_mut() {
                let ac = a.rows_range(c.rows.lo - rlo, c.rows.hi - rlo);
                let bc = b.rows_range(c.cols.lo - clo, c.cols.hi - clo);
                update(c, ac, bc, ctx)?;
            }
        }
        NodeData::Absent => {
            return Err(Error::StructureViolation(format!(
                "update reached absent block ({}, {})",
                key.0, key.1
            )))
        }
    }
    ctx.record(OpKind::Update, key, ell, start);
    Ok(())
}

/// Merges `[A_1 B_1^T ... A_m B_m^T]` into one rank-`k` block `A B^T`, where
/// the `B_j` stack to `B`.
fn merge_row<T: Scalar>(
    parts: &[(&DenseMatrix<T>, &DenseMatrix<T>)],
    trunc: TruncParams,
    flops: &mut FlopCounter,
) -> (DenseMatrix<T>, DenseMatrix<T>) {
    assert!(parts.len() >= 2, "merging needs at least two parts");
    let mut qs = Vec::with_capacity(parts.len());
    let mut ghat = Vec::with_capacity(parts.len());
    for (a, b) in parts {
        let (q, r) = thin_qr(b.view(), flops);
        ghat.push(matmul(a.view(), Op::NoTrans, r.view(), Op::Trans, flops));
        qs.push(q);
    }
    let last = parts.len() - 1;
    let mut cur_a = ghat[last].clone();
    // None stands for the identity.
    let mut cur_w: Option<DenseMatrix<T>> = None;
    for j in (0..last).rev() {
        let pj = ghat[j].cols();
        let rcur = cur_a.cols();
        let (c, d) = truncate_lowrank(ghat[j].hcat(&cur_a).view(), trunc.k, trunc.eps, flops);
        let rnew = c.cols();
        let top = d.submatrix(0, 0, pj, rnew);
        let bottom = d.submatrix(pj, 0, rcur, rnew);
        let bottom = match cur_w {
            None => bottom,
            Some(w) => matmul(w.view(), Op::NoTrans, bottom.view(), Op::NoTrans, flops),
        };
        cur_w = Some(top.vcat(&bottom));
        cur_a = c;
    }
    let w = cur_w.expect("at least one reduction step");
    let rank = cur_a.cols();
    let mut b = DenseMatrix::zeros(0, rank);
    let mut offset = 0;
    for q in &qs {
        let wj = w.submatrix(offset, 0, q.cols(), rank);
        offset += q.cols();
        b = b.vcat(&matmul(q.view(), Op::NoTrans, wj.view(), Op::NoTrans, flops));
    }
    (cur_a, b)
}

/// Replaces a 2x2 grid of low-rank sons by a single low-rank block: rows
/// are merged first, then the two resulting block rows.
pub fn merge<T: Scalar>(z: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    let start = ctx.mark();
    let NodeData::Split(ch) = &z.data else {
        return Err(Error::StructureViolation("merge needs a subdivided block".into()));
    };
    let mut factors = Vec::with_capacity(4);
    for c in ch.iter() {
        match &c.data {
            NodeData::LowRank(lr) => factors.push(lr),
            _ => return Err(Error::StructureViolation("merge needs low-rank sons".into())),
        }
    }
    let mut rows = Vec::with_capacity(2);
    for i in 0..2 {
        let (l, r) = (factors[2 * i], factors[2 * i + 1]);
        rows.push(merge_row(&[(&l.a, &l.b), (&r.a, &r.b)], ctx.trunc, &mut ctx.flops));
    }
    let (b, a) = merge_row(&[(&rows[0].1, &rows[0].0), (&rows[1].1, &rows[1].0)], ctx.trunc, &mut ctx.flops);
    z.data = NodeData::LowRank(LowRank { a, b });
    ctx.record(OpKind::Merge, (z.rows.cluster, z.cols.cluster, None), 0, start);
    Ok(())
}

/// Splits a low-rank block into a scratch grid of restricted low-rank sons.
fn split_lowrank<T: Scalar>(z: &mut HNode<T>, xc: &[HNode<T>; 4], yc: &[HNode<T>; 4]) {
    let NodeData::LowRank(lr) = &z.data else { unreachable!("caller checked the variant") };
    let (rlo, clo) = (z.rows.lo, z.cols.lo);
    let sons = [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(i, j)| {
        let rows = xc[2 * i].rows;
        let cols = yc[j].cols;
        HNode {
            rows,
            cols,
            data: NodeData::LowRank(LowRank {
                a: lr.a.submatrix(rows.lo - rlo, 0, rows.size(), lr.rank()),
                b: lr.b.submatrix(cols.lo - clo, 0, cols.size(), lr.rank()),
            }),
        }
    });
    z.data = NodeData::Split(Box::new(sons));
}

/// `Z += alpha X Y` with truncation, following the block structure of `X` and `Y`.
pub fn addmul<T: Scalar>(
    alpha: T,
    x: &HNode<T>,
    y: &HNode<T>,
    z: &mut HNode<T>,
    ctx: &mut Ctx,
) -> Result<()> {
    if !x.rows.same_range(&z.rows) || !x.cols.same_range(&y.rows) || !y.cols.same_range(&z.cols) {
        return Err(Error::DimensionMismatch(format!(
            "addmul: X is ({}, {}), Y is ({}, {}), Z is ({}, {})",
            x.rows.cluster, x.cols.cluster, y.rows.cluster, y.cols.cluster, z.rows.cluster, z.cols.cluster
        )));
    }
    let start = ctx.mark();
    let key = (x.rows.cluster, x.cols.cluster, Some(y.cols.cluster));
    let (nt, ns, nr) = (x.rows.size(), x.cols.size(), y.cols.size());
    match (&x.data, &y.data) {
        (NodeData::Absent, _) => return Err(absent(x, "addmul")),
        (_, NodeData::Absent) => return Err(absent(y, "addmul")),
        (NodeData::LowRank(lx), _) => {
            if lx.rank() > 0 {
                let mut bhat = DenseMatrix::zeros(nr, lx.rank());
                addevaltrans(alpha, y, lx.b.view(), bhat.view_mut(), ctx)?;
                update(z, lx.a.view(), bhat.view(), ctx)?;
            }
        }
        (NodeData::Dense(n), _) => {
            if nt <= ns {
                let ahat = DenseMatrix::identity(nt);
                let nt_mat = n.transpose();
                let mut bhat = DenseMatrix::zeros(nr, nt);
                addevaltrans(alpha, y, nt_mat.view(), bhat.view_mut(), ctx)?;
                update(z, ahat.view(), bhat.view(), ctx)?;
            } else {
                let ident = DenseMatrix::identity(ns);
                let mut bhat = DenseMatrix::zeros(nr, ns);
                addevaltrans(alpha, y, ident.view(), bhat.view_mut(), ctx)?;
                update(z, n.view(), bhat.view(), ctx)?;
            }
        }
        (NodeData::Split(_), NodeData::LowRank(ly)) => {
            if ly.rank() > 0 {
                let mut ahat = DenseMatrix::zeros(nt, ly.rank());
                addeval(alpha, x, ly.a.view(), ahat.view_mut(), ctx)?;
                update(z, ahat.view(), ly.b.view(), ctx)?;
            }
        }
        (NodeData::Split(_), NodeData::Dense(n)) => {
            if nr <= ns {
                let bhat = DenseMatrix::identity(nr);
                let mut ahat = DenseMatrix::zeros(nt, nr);
                addeval(alpha, x, n.view(), ahat.view_mut(), ctx)?;
                update(z, ahat.view(), bhat.view(), ctx)?;
            } else {
                let ident = DenseMatrix::identity(ns);
                let mut ahat = DenseMatrix::zeros(nt, ns);
                addeval(alpha, x, ident.view(), ahat.view_mut(), ctx)?;
                update(z, ahat.view(), n.transpose().view(), ctx)?;
            }
        }
        (NodeData::Split(xc), NodeData::Split(yc)) => {
            let scratch = match &z.data {
                NodeData::Split(_) => false,
                NodeData::LowRank(_) => {
                    split_lowrank(z, xc, yc);
                    true
                }
                _ => {
                    return Err(Error::StructureViolation(format!(
                        "addmul: block ({}, {}) cannot receive a subdivided product",
                        z.rows.cluster, z.cols.cluster
                    )))
                }
            };
            let zc = z.children_mut().expect("split above");
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        addmul(alpha, &xc[2 * i + l], &yc[2 * l + j], &mut zc[2 * i + j], ctx)?;
                    }
                }
            }
            if scratch {
                merge(z, ctx)?;
            }
        }
    }
    ctx.record(OpKind::Addmul, key, 0, start);
    Ok(())
}

impl<T: Scalar> HMatrix<T> {
    /// `X += alpha G|_{t x s} Y`.
    pub fn addeval(
        &self,
        alpha: T,
        t: usize,
        s: usize,
        y: MatRef<'_, T>,
        x: MatMut<'_, T>,
        ctx: &mut Ctx,
    ) -> Result<()> {
        addeval(alpha, self.node(t, s)?, y, x, ctx)
    }

    /// `X += alpha G|_{t x s}^T Y`.
    pub fn addevaltrans(
        &self,
        alpha: T,
        t: usize,
        s: usize,
        y: MatRef<'_, T>,
        x: MatMut<'_, T>,
        ctx: &mut Ctx,
    ) -> Result<()> {
        addevaltrans(alpha, self.node(t, s)?, y, x, ctx)
    }

    /// `G|_{t x s} += A B^T`.
    pub fn update(&mut self, t: usize, s: usize, a: MatRef<'_, T>, b: MatRef<'_, T>, ctx: &mut Ctx) -> Result<()> {
        update(self.node_mut(t, s)?, a, b, ctx)
    }

    pub fn merge(&mut self, t: usize, r: usize, ctx: &mut Ctx) -> Result<()> {
        merge(self.node_mut(t, r)?, ctx)
    }
}

/// `Z|_{t x r} += alpha X|_{t x s} Y|_{s x r}`.
#[allow(clippy::too_many_arguments)]
pub fn addmul_blocks<T: Scalar>(
    alpha: T,
    t: usize,
    s: usize,
    r: usize,
    x: &HMatrix<T>,
    y: &HMatrix<T>,
    z: &mut HMatrix<T>,
    ctx: &mut Ctx,
) -> Result<()> {
    addmul(alpha, x.node(t, s)?, y.node(s, r)?, z.node_mut(t, r)?, ctx)
}
