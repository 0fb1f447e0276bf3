use serde::Serialize;

use crate::cluster::ClusterId;
use crate::flops::FlopCounter;

/// Rank cap and relative truncation threshold applied by every truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncParams {
    pub k: usize,
    /// Singular values at or below `eps * sigma_1` are dropped; `0` keeps
    /// every nonzero one up to the cap.
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Addeval,
    Addevaltrans,
    Update,
    Merge,
    Addmul,
    Lsolve,
    Rsolve,
    Lsolvetrans,
    Rsolvetrans,
    Llsolve,
    Rlsolve,
    Lrsolve,
    Rrsolve,
    Lrdecomp,
    Linvert,
    Rinvert,
    Lrinvert,
}

/// One audited call: the clusters it was invoked on and the operations it
/// performed, callees included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallRecord {
    pub op: OpKind,
    pub t: ClusterId,
    pub s: ClusterId,
    pub r: Option<ClusterId>,
    pub ell: usize,
    pub flops: u64,
}

/// Mutable state threaded through the recursive algorithms.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub trunc: TruncParams,
    pub pivot_tol: f64,
    pub flops: FlopCounter,
    /// When set, every recursive call appends a record.
    pub audit: Option<Vec<CallRecord>>,
}

pub const DEFAULT_PIVOT_TOL: f64 = 1e-14;

impl Ctx {
    pub fn new(k: usize, eps: f64) -> Self {
        Self {
            trunc: TruncParams { k, eps },
            pivot_tol: DEFAULT_PIVOT_TOL,
            flops: FlopCounter::new(),
            audit: None,
        }
    }

    pub fn with_audit(mut self) -> Self {
        self.audit = Some(Vec::new());
        self
    }

    pub fn with_pivot_tol(mut self, tol: f64) -> Self {
        self.pivot_tol = tol;
        self
    }

    #[inline]
    pub(crate) fn mark(&self) -> u64 {
        self.flops.total
    }

    #[inline]
    pub(crate) fn record(
        &mut self,
        op: OpKind,
        (t, s, r): (ClusterId, ClusterId, Option<ClusterId>),
        ell: usize,
        start: u64,
    ) {
        if let Some(log) = self.audit.as_mut() {
            log.push(CallRecord { op, t, s, r, ell, flops: self.flops.total - start });
        }
    }

    pub fn take_audit(&mut self) -> Vec<CallRecord> {
        self.audit.as_mut().map(std::mem::take).unwrap_or_default()
    }
}
