//! Closed real intervals `[lo, hi]`.
//!
//! Only the operations the certifiers need: sums, scaling by a point value and
//! the subset test. Point scaling splits on the sign of the scalar, so the
//! result is exact whenever the underlying products are.

use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !lo.is_finite_value() || !hi.is_finite_value() || lo > hi {
            return Err(Error::InvalidInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate interval `[v, v]`.
    pub fn point(v: T) -> Self {
        Self { lo: v, hi: v }
    }

    /// `[-r, r]` for `r >= 0`.
    pub fn symmetric(r: T) -> Result<Self> {
        Self::new(-r, r)
    }

    pub fn zero() -> Self {
        Self::point(T::zero())
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, v: T) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(T::zero())
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// `[l, u] * c`, choosing endpoints by the sign of `c`.
    pub fn scale(&self, c: T) -> Self {
        if c >= T::zero() {
            Self {
                lo: self.lo * c,
                hi: self.hi * c,
            }
        } else {
            Self {
                lo: self.hi * c,
                hi: self.lo * c,
            }
        }
    }

    pub fn shift(&self, c: T) -> Self {
        Self {
            lo: self.lo + c,
            hi: self.hi + c,
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.min_of(other.lo),
            hi: self.hi.max_of(other.hi),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Interval<U> {
        Interval::new(f(self.lo), f(self.hi)).expect("monotone map preserves order")
    }
}

impl<T: Scalar> Add for Interval<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            lo: self.lo + rhs.lo,
            hi: self.hi + rhs.hi,
        }
    }
}

impl<T: Scalar> Neg for Interval<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl<T: Scalar> std::iter::Sum for Interval<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |acc, v| acc + v)
    }
}

impl<T: Scalar> std::fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
