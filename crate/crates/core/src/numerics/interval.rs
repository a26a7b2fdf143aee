use alloc::format;
use alloc::vec::Vec;

use super::BigReal;
use crate::error::{Error, Result};

/// Closed, bounded interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    lo: BigReal,
    hi: BigReal,
}

impl Interval {
    pub fn new(lo: BigReal, hi: BigReal) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "interval endpoints must be finite: [{lo}, {hi}]"
            )));
        }
        if lo >= hi {
            return Err(Error::Domain(format!("interval requires lo < hi: [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Convenience constructor from decimal literals.
    pub fn parse(lo: &str, hi: &str, precision: usize) -> Result<Self> {
        Self::new(
            BigReal::parse_decimal(lo, precision)?,
            BigReal::parse_decimal(hi, precision)?,
        )
    }

    pub fn lo(&self) -> &BigReal {
        &self.lo
    }

    pub fn hi(&self) -> &BigReal {
        &self.hi
    }

    pub fn width(&self) -> BigReal {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigReal {
        (&self.lo + &self.hi).mul_pow2(-1)
    }

    pub fn precision(&self) -> usize {
        self.lo.precision().max(self.hi.precision())
    }

    pub fn contains(&self, x: &BigReal) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(&other.lo);
        let hi = self.hi.min(&other.hi);
        Interval::new(lo, hi).ok()
    }

    /// `K * I` for `K > 0`.
    pub fn scale(&self, factor: &BigReal) -> Result<Interval> {
        if !factor.is_positive() {
            return Err(Error::Domain(format!(
                "interval scale factor must be positive, got {factor}"
            )));
        }
        Interval::new(&self.lo * factor, &self.hi * factor)
    }

    /// `points` equally spaced nodes including both endpoints (`points >= 2`).
    pub fn grid(&self, points: usize) -> Vec<BigReal> {
        let points = points.max(2);
        let steps = BigReal::from_i64((points - 1) as i64, self.precision());
        let width = self.width();
        (0..points)
            .map(|i| {
                if i == points - 1 {
                    self.hi.clone()
                } else {
                    let t = BigReal::from_i64(i as i64, self.precision()) / &steps;
                    &self.lo + &(&width * &t)
                }
            })
            .collect()
    }
}
