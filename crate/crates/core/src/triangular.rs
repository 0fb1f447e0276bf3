//! Triangular solves, LR factorization and inversion of hierarchical matrices.
//!
//! Node-level functions work in place: the right-hand side is overwritten
//! by the solution. Diagonal blocks of a factor are always either dense
//! leaves or subdivided, and dense leaves of a lower factor have an implied
//! unit diagonal, so a packed matrix holding `L` below and `R` on and above
//! the diagonal serves as either factor.

use crate::dense::{
    dense_invert_triangular, dense_lr, dense_rl_product, lr_inplace, solve_triangular_inplace, DenseMatrix,
    MatMut, Side,
};
use crate::error::{Error, Result};
use crate::hmatrix::{addeval, addevaltrans, addmul, Ctx, HMatrix, HNode, NodeData, OpKind};
use crate::scalar::Scalar;

/// Hierarchical matrix holding one triangle; the other one is absent.
#[derive(Debug, Clone)]
pub struct TriangularHMatrix<T> {
    pub side: Side,
    pub matrix: HMatrix<T>,
}

impl<T: Scalar> TriangularHMatrix<T> {
    pub fn to_dense(&self) -> DenseMatrix<T> {
        self.matrix.to_dense()
    }

    pub fn root(&self) -> &HNode<T> {
        self.matrix.root()
    }
}

fn not_diagonal<T: Scalar>(node: &HNode<T>) -> Error {
    not_diagonal_at(node.rows.cluster, node.cols.cluster)
}

fn not_diagonal_at(t: usize, s: usize) -> Error {
    Error::StructureViolation(format!("block ({t}, {s}) is not a dense or subdivided diagonal block"))
}

fn split4<T: Scalar>(node: &mut HNode<T>) -> Result<[&mut HNode<T>; 4]> {
    let (t, s) = (node.rows.cluster, node.cols.cluster);
    match &mut node.data {
        NodeData::Split(ch) => {
            let [a, b, c, d] = &mut **ch;
            Ok([a, b, c, d])
        }
        _ => Err(not_diagonal_at(t, s)),
    }
}

fn split4_ref<T>(node: &HNode<T>) -> Option<[&HNode<T>; 4]> {
    match &node.data {
        NodeData::Split(ch) => {
            let [a, b, c, d] = &**ch;
            Some([a, b, c, d])
        }
        _ => None,
    }
}

fn negate<T: Scalar>(node: &mut HNode<T>) {
    node.for_each_leaf_mut(&mut |n| match &mut n.data {
        NodeData::Dense(m) => m.neg_inplace(),
        NodeData::LowRank(lr) => lr.a.neg_inplace(),
        _ => {}
    });
}

/// Solves `op(T) X = Y` for a dense `Y` with rows indexed by the diagonal
/// block `tt`; `Y` is overwritten by `X`.
pub fn solve_matrix<T: Scalar>(
    side: Side,
    transposed: bool,
    tt: &HNode<T>,
    mut y: MatMut<'_, T>,
    ctx: &mut Ctx,
) -> Result<()> {
    if y.rows() != tt.rows.size() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, block has {}",
            y.rows(),
            tt.rows.size()
        )));
    }
    let start = ctx.mark();
    let ell = y.cols();
    match &tt.data {
        NodeData::Dense(m) => {
            solve_triangular_inplace(side, transposed, m.view(), y, ctx.pivot_tol, &mut ctx.flops)?;
        }
        NodeData::Split(_) => {
            let [c11, c12, c21, c22] = split4_ref(tt).expect("split");
            let (mut y1, mut y2) = y.rb_mut().split_rows_at(c11.rows.size());
            let minus = -T::one();
            match (side, transposed) {
                (Side::Lower, false) => {
                    solve_matrix(side, transposed, c11, y1.rb_mut(), ctx)?;
                    addeval(minus, c21, y1.rb(), y2.rb_mut(), ctx)?;
                    solve_matrix(side, transposed, c22, y2, ctx)?;
                }
                (Side::Upper, false) => {
                    solve_matrix(side, transposed, c22, y2.rb_mut(), ctx)?;
                    addeval(minus, c12, y2.rb(), y1.rb_mut(), ctx)?;
                    solve_matrix(side, transposed, c11, y1, ctx)?;
                }
                (Side::Lower, true) => {
                    solve_matrix(side, transposed, c22, y2.rb_mut(), ctx)?;
                    addevaltrans(minus, c21, y2.rb(), y1.rb_mut(), ctx)?;
                    solve_matrix(side, transposed, c11, y1, ctx)?;
                }
                (Side::Upper, true) => {
                    solve_matrix(side, transposed, c11, y1.rb_mut(), ctx)?;
                    addevaltrans(minus, c12, y1.rb(), y2.rb_mut(), ctx)?;
                    solve_matrix(side, transposed, c22, y2, ctx)?;
                }
            }
        }
        _ => return Err(not_diagonal(tt)),
    }
    let op = match (side, transposed) {
        (Side::Lower, false) => OpKind::Lsolve,
        (Side::Upper, false) => OpKind::Rsolve,
        (Side::Lower, true) => OpKind::Lsolvetrans,
        (Side::Upper, true) => OpKind::Rsolvetrans,
    };
    ctx.record(op, (tt.rows.cluster, tt.cols.cluster, None), ell, start);
    Ok(())
}

/// Solves `T X = Y` on the block `x`, whose rows match the diagonal block `tt`.
pub fn hsolve_left<T: Scalar>(side: Side, tt: &HNode<T>, x: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    if !tt.rows.same_range(&x.rows) {
        return Err(Error::DimensionMismatch("hsolve_left: factor and block rows differ".into()));
    }
    let start = ctx.mark();
    let key = (x.rows.cluster, x.cols.cluster, None);
    let ell = x.cols.size();
    match &mut x.data {
        NodeData::LowRank(lr) => solve_matrix(side, false, tt, lr.a.view_mut(), ctx)?,
        NodeData::Dense(m) => solve_matrix(side, false, tt, m.view_mut(), ctx)?,
        NodeData::Split(_) => {
            let [c11, c12, c21, c22] = split4_ref(tt).ok_or_else(|| not_diagonal(tt))?;
            let [x00, x01, x10, x11] = split4(x)?;
            for (top, bottom) in [(x00, x10), (x01, x11)] {
                match side {
                    Side::Lower => {
                        hsolve_left(side, c11, top, ctx)?;
                        addmul(-T::one(), c21, top, bottom, ctx)?;
                        hsolve_left(side, c22, bottom, ctx)?;
                    }
                    Side::Upper => {
                        hsolve_left(side, c22, bottom, ctx)?;
                        addmul(-T::one(), c12, bottom, top, ctx)?;
                        hsolve_left(side, c11, top, ctx)?;
                    }
                }
            }
        }
        NodeData::Absent => return Err(Error::StructureViolation("hsolve_left on an absent block".into())),
    }
    let op = if side == Side::Lower { OpKind::Llsolve } else { OpKind::Rlsolve };
    ctx.record(op, key, ell, start);
    Ok(())
}

/// Solves `X T = Y` on the block `x`, whose columns match the diagonal block `tt`.
pub fn hsolve_right<T: Scalar>(side: Side, tt: &HNode<T>, x: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    if !tt.cols.same_range(&x.cols) {
        return Err(Error::DimensionMismatch("hsolve_right: factor and block columns differ".into()));
    }
    let start = ctx.mark();
    let key = (x.rows.cluster, x.cols.cluster, None);
    let ell = x.rows.size();
    match &mut x.data {
        NodeData::LowRank(lr) => solve_matrix(side, true, tt, lr.b.view_mut(), ctx)?,
        NodeData::Dense(m) => {
            let mut mt = m.transpose();
            solve_matrix(side, true, tt, mt.view_mut(), ctx)?;
            *m = mt.transpose();
        }
        NodeData::Split(_) => {
            let [c11, c12, c21, c22] = split4_ref(tt).ok_or_else(|| not_diagonal(tt))?;
            let [x00, x01, x10, x11] = split4(x)?;
            for (left, right) in [(x00, x01), (x10, x11)] {
                match side {
                    Side::Lower => {
                        hsolve_right(side, c22, right, ctx)?;
                        addmul(-T::one(), right, c21, left, ctx)?;
                        hsolve_right(side, c11, left, ctx)?;
                    }
                    Side::Upper => {
                        hsolve_right(side, c11, left, ctx)?;
                        addmul(-T::one(), left, c12, right, ctx)?;
                        hsolve_right(side, c22, right, ctx)?;
                    }
                }
            }
        }
        NodeData::Absent => return Err(Error::StructureViolation("hsolve_right on an absent block".into())),
    }
    let op = if side == Side::Lower { OpKind::Lrsolve } else { OpKind::Rrsolve };
    ctx.record(op, key, ell, start);
    Ok(())
}

/// Factorizes the diagonal block `g` into `l` and `r`; the trailing
/// diagonal part of `g` is overwritten by Schur complements.
pub fn lrdecomp_node<T: Scalar>(g: &mut HNode<T>, l: &mut HNode<T>, r: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    let start = ctx.mark();
    let key = (g.rows.cluster, g.cols.cluster, None);
    match &g.data {
        NodeData::Dense(m) => {
            let (lf, rf) = dense_lr(m.view(), ctx.pivot_tol, &mut ctx.flops)?;
            l.data = NodeData::Dense(lf);
            r.data = NodeData::Dense(rf);
        }
        NodeData::Split(_) => {
            let [g11, g12, g21, g22] = split4(g)?;
            let [l11, _, l21, l22] = split4(l)?;
            let [r11, r12, _, r22] = split4(r)?;
            lrdecomp_node(g11, l11, r11, ctx)?;
            r12.data = g12.data.clone();
            hsolve_left(Side::Lower, l11, r12, ctx)?;
            l21.data = g21.data.clone();
            hsolve_right(Side::Upper, r11, l21, ctx)?;
            addmul(-T::one(), l21, r12, g22, ctx)?;
            lrdecomp_node(g22, l22, r22, ctx)?;
        }
        _ => return Err(not_diagonal(g)),
    }
    ctx.record(OpKind::Lrdecomp, key, 0, start);
    Ok(())
}

/// Inverts the diagonal block `l` of a triangular factor into `lt`.
pub fn invert_node<T: Scalar>(side: Side, l: &HNode<T>, lt: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    let start = ctx.mark();
    let key = (l.rows.cluster, l.cols.cluster, None);
    match &l.data {
        NodeData::Dense(m) => {
            lt.data = NodeData::Dense(dense_invert_triangular(side, m.view(), ctx.pivot_tol, &mut ctx.flops)?);
        }
        NodeData::Split(_) => {
            let [c11, c12, c21, c22] = split4_ref(l).expect("split");
            let [t11, t12, t21, t22] = split4(lt)?;
            match side {
                Side::Lower => {
                    t21.data = c21.data.clone();
                    negate(t21);
                    hsolve_left(side, c22, t21, ctx)?;
                    hsolve_right(side, c11, t21, ctx)?;
                }
                Side::Upper => {
                    t12.data = c12.data.clone();
                    negate(t12);
                    hsolve_left(side, c11, t12, ctx)?;
                    hsolve_right(side, c22, t12, ctx)?;
                }
            }
            invert_node(side, c11, t11, ctx)?;
            invert_node(side, c22, t22, ctx)?;
        }
        _ => return Err(not_diagonal(l)),
    }
    let op = if side == Side::Lower { OpKind::Linvert } else { OpKind::Rinvert };
    ctx.record(op, key, 0, start);
    Ok(())
}

/// `gt = R^-1 L^-1` on a diagonal block, given the factors and their inverses.
pub fn lrinvert_node<T: Scalar>(
    l: &HNode<T>,
    r: &HNode<T>,
    lt: &HNode<T>,
    rt: &HNode<T>,
    gt: &mut HNode<T>,
    ctx: &mut Ctx,
) -> Result<()> {
    let start = ctx.mark();
    let key = (gt.rows.cluster, gt.cols.cluster, None);
    match (&lt.data, &rt.data) {
        (NodeData::Dense(lm), NodeData::Dense(rm)) => {
            gt.data = NodeData::Dense(dense_rl_product(rm.view(), lm.view(), &mut ctx.flops)?);
        }
        (NodeData::Split(_), NodeData::Split(_)) => {
            let [l11, _, _, l22] = split4_ref(l).ok_or_else(|| not_diagonal(l))?;
            let [r11, _, _, r22] = split4_ref(r).ok_or_else(|| not_diagonal(r))?;
            let [lt11, _, lt21, lt22] = split4_ref(lt).expect("split");
            let [rt11, rt12, _, rt22] = split4_ref(rt).expect("split");
            let [g11, g12, g21, g22] = split4(gt)?;
            lrinvert_node(l11, r11, lt11, rt11, g11, ctx)?;
            addmul(T::one(), rt12, lt21, g11, ctx)?;
            g12.data = rt12.data.clone();
            hsolve_right(Side::Lower, l22, g12, ctx)?;
            g21.data = lt21.data.clone();
            hsolve_left(Side::Upper, r22, g21, ctx)?;
            lrinvert_node(l22, r22, lt22, rt22, g22, ctx)?;
        }
        _ => return Err(not_diagonal(gt)),
    }
    ctx.record(OpKind::Lrinvert, key, 0, start);
    Ok(())
}

/// Packed LR factorization: `L` strictly below, `R` on and above the diagonal.
fn lrdecomp_packed<T: Scalar>(g: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    match &mut g.data {
        NodeData::Dense(m) => lr_inplace(m.view_mut(), ctx.pivot_tol, &mut ctx.flops),
        NodeData::Split(_) => {
            let [g11, g12, g21, g22] = split4(g)?;
            lrdecomp_packed(g11, ctx)?;
            hsolve_left(Side::Lower, g11, g12, ctx)?;
            hsolve_right(Side::Upper, g11, g21, ctx)?;
            addmul(-T::one(), g21, g12, g22, ctx)?;
            lrdecomp_packed(g22, ctx)
        }
        _ => Err(not_diagonal(g)),
    }
}

/// Turns a packed factorization of the diagonal block `g` into its inverse.
fn invert_packed<T: Scalar>(g: &mut HNode<T>, ctx: &mut Ctx) -> Result<()> {
    match &mut g.data {
        NodeData::Dense(m) => {
            let lt = dense_invert_triangular(Side::Lower, m.view(), ctx.pivot_tol, &mut ctx.flops)?;
            let rt = dense_invert_triangular(Side::Upper, m.view(), ctx.pivot_tol, &mut ctx.flops)?;
            *m = dense_rl_product(rt.view(), lt.view(), &mut ctx.flops)?;
            Ok(())
        }
        NodeData::Split(_) => {
            let [g11, g12, g21, g22] = split4(g)?;
            negate(g21);
            hsolve_left(Side::Lower, g22, g21, ctx)?;
            hsolve_right(Side::Lower, g11, g21, ctx)?;
            negate(g12);
            hsolve_left(Side::Upper, g11, g12, ctx)?;
            hsolve_right(Side::Upper, g22, g12, ctx)?;
            invert_packed(g11, ctx)?;
            addmul(T::one(), g12, g21, g11, ctx)?;
            hsolve_left(Side::Upper, g22, g21, ctx)?;
            hsolve_right(Side::Lower, g22, g12, ctx)?;
            invert_packed(g22, ctx)
        }
        _ => Err(not_diagonal(g)),
    }
}

/// Solves `op(T) X = Y` on the rows of cluster `t`, overwriting `y`.
pub fn solve_matrix_on<T: Scalar>(
    transposed: bool,
    t: usize,
    tri: &TriangularHMatrix<T>,
    y: MatMut<'_, T>,
    ctx: &mut Ctx,
) -> Result<()> {
    solve_matrix(tri.side, transposed, tri.matrix.node(t, t)?, y, ctx)
}

/// Solves `T|_{t x t} X = Y|_{t x s}` in place on block `(t, s)` of `x`.
pub fn hsolve_left_on<T: Scalar>(
    t: usize,
    s: usize,
    tri: &TriangularHMatrix<T>,
    x: &mut HMatrix<T>,
    ctx: &mut Ctx,
) -> Result<()> {
    hsolve_left(tri.side, tri.matrix.node(t, t)?, x.node_mut(t, s)?, ctx)
}

/// Solves `X T|_{t x t} = Y|_{s x t}` in place on block `(s, t)` of `x`.
pub fn hsolve_right_on<T: Scalar>(
    s: usize,
    t: usize,
    tri: &TriangularHMatrix<T>,
    x: &mut HMatrix<T>,
    ctx: &mut Ctx,
) -> Result<()> {
    hsolve_right(tri.side, tri.matrix.node(t, t)?, x.node_mut(s, t)?, ctx)
}

/// Factorizes `g = L R`; on return `g` holds Schur complements in its trailing blocks.
pub fn lrdecomp<T: Scalar>(
    g: &mut HMatrix<T>,
    ctx: &mut Ctx,
) -> Result<(TriangularHMatrix<T>, TriangularHMatrix<T>)> {
    let mut l = g.triangular_shell(Side::Lower);
    let mut r = g.triangular_shell(Side::Upper);
    lrdecomp_node(g.root_mut(), l.root_mut(), r.root_mut(), ctx)?;
    Ok((TriangularHMatrix { side: Side::Lower, matrix: l }, TriangularHMatrix { side: Side::Upper, matrix: r }))
}

/// Inverse of a triangular factor, same side and structure.
pub fn invert_triangular<T: Scalar>(tri: &TriangularHMatrix<T>, ctx: &mut Ctx) -> Result<TriangularHMatrix<T>> {
    let mut out = tri.matrix.triangular_shell(tri.side);
    invert_node(tri.side, tri.matrix.root(), out.root_mut(), ctx)?;
    Ok(TriangularHMatrix { side: tri.side, matrix: out })
}

pub fn linvert<T: Scalar>(l: &TriangularHMatrix<T>, ctx: &mut Ctx) -> Result<TriangularHMatrix<T>> {
    if l.side != Side::Lower {
        return Err(Error::InvalidArgument("linvert needs a lower factor".into()));
    }
    invert_triangular(l, ctx)
}

pub fn rinvert<T: Scalar>(r: &TriangularHMatrix<T>, ctx: &mut Ctx) -> Result<TriangularHMatrix<T>> {
    if r.side != Side::Upper {
        return Err(Error::InvalidArgument("rinvert needs an upper factor".into()));
    }
    invert_triangular(r, ctx)
}

/// `R^-1 L^-1` from the factors and their inverses.
pub fn lrinvert<T: Scalar>(
    l: &TriangularHMatrix<T>,
    r: &TriangularHMatrix<T>,
    lt: &TriangularHMatrix<T>,
    rt: &TriangularHMatrix<T>,
    ctx: &mut Ctx,
) -> Result<HMatrix<T>> {
    let mut gt = HMatrix::zeros(l.matrix.blocks().clone(), l.matrix.k(), l.matrix.eps());
    lrinvert_node(l.root(), r.root(), lt.root(), rt.root(), gt.root_mut(), ctx)?;
    Ok(gt)
}

/// Overwrites `g` with an approximation of its inverse without allocating
/// a second full-size matrix.
pub fn invert_inplace<T: Scalar>(g: &mut HMatrix<T>, ctx: &mut Ctx) -> Result<()> {
    lrdecomp_packed(g.root_mut(), ctx)?;
    invert_packed(g.root_mut(), ctx)
}
