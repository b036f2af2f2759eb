//! Scalar field abstraction shared by the float and exact-rational code paths.

use std::fmt::Display;
use std::hash::Hasher;
use std::ops::Neg;

use nalgebra::{ClosedAddAssign, ClosedDivAssign, ClosedMulAssign, ClosedSubAssign, Scalar};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub type C64 = Complex64;
pub type Rational = BigRational;

/// A field usable as matrix entries: complex floats, or exact rationals for tracial setups.
pub trait Field:
    Scalar
    + Display
    + Zero
    + One
    + ClosedAddAssign
    + ClosedSubAssign
    + ClosedMulAssign
    + ClosedDivAssign
    + Neg<Output = Self>
    + Send
    + Sync
{
    /// True when arithmetic is exact (equality checks are meaningful).
    const EXACT: bool;

    fn conj(&self) -> Self;
    fn to_c64(&self) -> C64;
    fn from_f64(x: f64) -> Self;
    fn from_i64(n: i64) -> Self;
    fn hash_into<H: Hasher>(&self, state: &mut H);

    fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }

    fn re_f64(&self) -> f64 {
        self.to_c64().re
    }

    fn is_real(&self) -> bool {
        self.conj() == *self
    }

    fn powi(&self, n: usize) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc *= self.clone();
        }
        acc
    }
}

impl Field for C64 {
    const EXACT: bool = false;

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn to_c64(&self) -> C64 {
        *self
    }

    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }

    fn from_i64(n: i64) -> Self {
        C64::new(n as f64, 0.0)
    }

    fn hash_into<H: Hasher>(&self, state: &mut H) {
        // Normalise -0.0 so equal values hash equally.
        state.write_u64((self.re + 0.0).to_bits());
        state.write_u64((self.im + 0.0).to_bits());
    }
}

impl Field for Rational {
    const EXACT: bool = true;

    fn conj(&self) -> Self {
        self.clone()
    }

    fn to_c64(&self) -> C64 {
        C64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn hash_into<H: Hasher>(&self, state: &mut H) {
        std::hash::Hash::hash(self, state);
    }

    fn is_real(&self) -> bool {
        true
    }
}

/// `num/den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The rational with the shortest decimal expansion that rounds to `x`, so `0.3` maps
/// to `3/10` rather than to its binary value.
pub fn decimal(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x:e}");
    let (mantissa, exp) = text.split_once('e')?;
    let exp: i64 = exp.parse().ok()?;
    let (int_part, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int_part}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Some(if shift >= 0 {
        BigRational::from_integer(digits * scale)
    } else {
        BigRational::new(digits, scale)
    })
}
