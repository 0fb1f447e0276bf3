use clap::ValueEnum;
use hmatrix::{Admissibility, Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// `log|x_i - x_j|` on a uniform grid, made diagonally dominant.
    Logkernel,
    /// Uniform off-diagonal entries in `[-1, 1]`, made diagonally dominant.
    Diagdom,
    Identity,
    /// Random rank-`k` matrix, made diagonally dominant.
    Randlowrank,
}

/// Everything needed to regenerate one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub rho: usize,
    pub admissibility: Admissibility,
    pub k: usize,
    pub eps: f64,
    pub generator: Generator,
    pub seed: u64,
    /// Added to every diagonal entry on top of the row sum.
    pub shift: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            n: 256,
            rho: 8,
            admissibility: Admissibility::Eta(1.0),
            k: 8,
            eps: 1e-8,
            generator: Generator::Logkernel,
            seed: 0,
            shift: 1.0,
        }
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.rho == 0 {
            return bad("leaf size must be at least 1");
        }
        if let Admissibility::Eta(eta) = self.admissibility {
            if !(eta.is_finite() && eta > 0.0) {
                return bad("eta must be positive");
            }
        }
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return bad("eps must be finite and non-negative");
        }
        if !self.shift.is_finite() {
            return bad("shift must be finite");
        }
        Ok(())
    }
}
