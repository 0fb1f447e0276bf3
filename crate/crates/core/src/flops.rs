//! Floating point operation counting.
//!
//! Every kernel in [`crate::dense`] reports the additions, multiplications and
//! divisions it actually executes. Square roots are booked as divisions.
//! Sign flips, copies and comparisons are free.

use std::ops::{Add, AddAssign, Sub};

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlopCounter {
    pub adds: u64,
    pub mults: u64,
    pub divs: u64,
    pub total: u64,
}

impl FlopCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn count_add(&mut self, n: usize) {
        self.adds += n as u64;
        self.total += n as u64;
    }

    #[inline]
    pub fn count_mul(&mut self, n: usize) {
        self.mults += n as u64;
        self.total += n as u64;
    }

    #[inline]
    pub fn count_div(&mut self, n: usize) {
        self.divs += n as u64;
        self.total += n as u64;
    }

    /// Books `n` fused multiply-add steps as one multiplication plus one addition each.
    #[inline]
    pub fn count_fma(&mut self, n: usize) {
        self.count_mul(n);
        self.count_add(n);
    }

    pub fn is_consistent(&self) -> bool {
        self.adds + self.mults + self.divs == self.total
    }
}

impl Add for FlopCounter {
    type Output = FlopCounter;

    fn add(self, rhs: FlopCounter) -> FlopCounter {
        FlopCounter {
            adds: self.adds + rhs.adds,
            mults: self.mults + rhs.mults,
            divs: self.divs + rhs.divs,
            total: self.total + rhs.total,
        }
    }
}

impl AddAssign for FlopCounter {
    fn add_assign(&mut self, rhs: FlopCounter) {
        *self = *self + rhs;
    }
}

impl Sub for FlopCounter {
    type Output = FlopCounter;

    /// Difference between a later and an earlier snapshot of the same counter.
    fn sub(self, rhs: FlopCounter) -> FlopCounter {
        FlopCounter {
            adds: self.adds - rhs.adds,
            mults: self.mults - rhs.mults,
            divs: self.divs - rhs.divs,
            total: self.total - rhs.total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_tracks_components() {
        let mut c = FlopCounter::new();
        c.count_add(3);
        c.count_mul(4);
        c.count_div(1);
        c.count_fma(2);
        assert_eq!(c.total, 12);
        assert!(c.is_consistent());
        let d = c - FlopCounter { adds: 1, mults: 1, divs: 0, total: 2 };
        assert_eq!(d.total, 10);
        assert!(d.is_consistent());
    }
}
