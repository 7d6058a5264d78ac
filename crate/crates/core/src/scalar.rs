//! Scalar abstraction shared by every certifier.
//!
//! All of the certification math is ordered-field arithmetic (sums, products,
//! comparisons and one division per pivot), so it runs unchanged over `f32`,
//! `f64` and exact rationals. Floats get a relative pivot threshold for
//! singularity detection; rationals only reject an exactly zero pivot.

use std::fmt::{Debug, Display};

use ndarray::LinalgScalar;
use num_rational::Rational64;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

pub trait Scalar:
    LinalgScalar
    + Signed
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
{
    /// `false` for NaN and infinities. Always `true` for exact types.
    fn is_finite_value(self) -> bool;

    /// A pivot `d` of `A = L D Lᵀ` is rejected when `d <= pivot_ratio() * max(diag(A))`.
    fn pivot_ratio() -> Self;

    /// Stable byte encoding, used for spec fingerprints.
    fn canonical_bytes(self) -> Vec<u8>;

    /// Finite-or-panic conversion used for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn pivot_ratio() -> Self {
        1e-12
    }

    fn canonical_bytes(self) -> Vec<u8> {
        // -0.0 and 0.0 must fingerprint identically
        let v = if self == 0.0 { 0.0 } else { self };
        v.to_le_bytes().to_vec()
    }
}

impl Scalar for f32 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn pivot_ratio() -> Self {
        1e-6
    }

    fn canonical_bytes(self) -> Vec<u8> {
        let v = if self == 0.0 { 0.0 } else { self };
        v.to_le_bytes().to_vec()
    }
}

impl Scalar for Rational64 {
    fn is_finite_value(self) -> bool {
        true
    }

    fn pivot_ratio() -> Self {
        Rational64::from_integer(0)
    }

    fn canonical_bytes(self) -> Vec<u8> {
        let mut out = self.numer().to_le_bytes().to_vec();
        out.extend_from_slice(&self.denom().to_le_bytes());
        out
    }
}

/// Lossless-enough conversion for small integer literals in generic code.
pub(crate) fn lit<T: Scalar>(v: i64) -> T {
    T::from_i64(v).expect("integer literal representable in scalar type")
}
