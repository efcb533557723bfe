//! Numeric scalars shared by exact and floating-point code paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

/// Field elements usable as Grassmann coefficients, matrix entries and
/// moment values.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn as_f64(&self) -> f64;

    /// Magnitude used for pivot selection.
    fn pivot_weight(&self) -> f64 {
        self.as_f64().abs()
    }

    /// Exact zero test for rationals, `== 0.0` for floats.
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn pivot_weight(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            // any nonzero pivot is exact; prefer small denominators
            1.0 + 1.0 / (1.0 + self.denom().bits() as f64)
        }
    }
}

/// Converts a rational to the nearest-ish `f64` without overflowing on
/// large numerators and denominators.
pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb.max(db) - 60;
    let scale = BigInt::one() << (shift.max(0) as usize);
    let n = (r.numer() / &scale).to_f64().unwrap_or(0.0);
    let d = (r.denom() / &scale).to_f64().unwrap_or(1.0);
    if d == 0.0 {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

/// Rational approximation of `1/pi` with `digits` correct decimal digits,
/// from Machin's formula in integer arithmetic.
pub fn inv_pi_rational_digits(digits: u32) -> Rational {
    let guard = 10;
    let scale = BigInt::from(10u32).pow(digits + guard);
    let atan_inv = |x: u32| -> BigInt {
        let x2 = BigInt::from(x * x);
        let mut term = &scale / BigInt::from(x);
        let mut sum = BigInt::zero();
        let mut k = 0u32;
        while !term.is_zero() {
            let t = &term / BigInt::from(2 * k + 1);
            if k.is_multiple_of(2) {
                sum += t;
            } else {
                sum -= t;
            }
            term /= &x2;
            k += 1;
        }
        sum
    };
    let pi_scaled = BigInt::from(16) * atan_inv(5) - BigInt::from(4) * atan_inv(239);
    Rational::new(scale, pi_scaled)
}

/// `1/pi` to 60 digits.
pub fn inv_pi_rational() -> Rational {
    inv_pi_rational_digits(60)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let r = Rational::from_ratio(-7, 3);
        assert!((r.as_f64() + 7.0 / 3.0).abs() < 1e-15);
        const { assert!(Rational::EXACT) };
        const { assert!(!f64::EXACT) };
    }

    #[test]
    fn huge_rational_to_f64() {
        let big = BigInt::from(3) * (BigInt::one() << 2000usize);
        let r = Rational::new(big.clone(), big * BigInt::from(2));
        assert!((r.as_f64() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inv_pi_long() {
        let a = inv_pi_rational_digits(200);
        let b = inv_pi_rational_digits(220);
        let diff = (a - b).abs();
        assert!(diff < Rational::new(BigInt::one(), BigInt::from(10u32).pow(195)));
    }

    #[test]
    fn inv_pi_digits() {
        let v = inv_pi_rational().as_f64();
        assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-17);
    }

    #[test]
    fn powi_matches() {
        assert_eq!(Rational::from_i64(-2).powi(3), Rational::from_i64(-8));
        assert_eq!(Scalar::powi(&3.0f64, 2), 9.0);
    }
}
