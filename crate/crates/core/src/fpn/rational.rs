use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::FpnError;

/// Arbitrary-precision rational in lowest terms with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, FpnError> {
        let d = denom.into();
        if d.is_zero() {
            return Err(FpnError::DivisionByZero);
        }
        Ok(Self(BigRational::new(numer.into(), d)))
    }

    pub fn from_integer(x: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(x.into()))
    }

    /// `mant · 2^exp`.
    pub fn from_dyadic(mant: BigInt, exp: i64) -> Self {
        let shift = exp.unsigned_abs() as usize;
        if exp >= 0 {
            Self(BigRational::from_integer(mant << shift))
        } else {
            Self(BigRational::new(mant, BigInt::one() << shift))
        }
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64(x: f64) -> Result<Self, FpnError> {
        BigRational::from_float(x).map(Self).ok_or(FpnError::NonFiniteInput(x))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_big_rational(self) -> BigRational {
        self.0
    }
}

impl From<BigRational> for ExactRational {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational($trait::$method(self.0, rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational($trait::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

/// The `⫽` operator: `x / y` when that quotient is an integer multiple of
/// 1/4, and `x / y + 1/8` otherwise. The perturbation does not depend on the
/// sign of the quotient.
pub fn slash_div(x: impl Into<BigInt>, y: impl Into<BigInt>) -> Result<ExactRational, FpnError> {
    let x = x.into();
    let y = y.into();
    if y.is_zero() {
        return Err(FpnError::DivisionByZero);
    }
    // x/y is a multiple of 1/4 iff y divides 4x.
    if (&x << 2usize).is_multiple_of(&y) {
        ExactRational::new(x, y)
    } else {
        ExactRational::new((x << 3usize) + &y, y << 3usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactRational {
        ExactRational::new(n, d).unwrap()
    }

    #[test]
    fn slash_div_table() {
        assert_eq!(slash_div(7, 2).unwrap(), q(7, 2));
        assert_eq!(slash_div(1, 3).unwrap(), q(11, 24));
        assert_eq!(slash_div(4, 2).unwrap(), q(2, 1));
        assert_eq!(slash_div(3, 4).unwrap(), q(3, 4));
        assert_eq!(slash_div(3, 8).unwrap(), q(1, 2));
        // Sign-independent perturbation.
        assert_eq!(slash_div(-1, 3).unwrap(), q(-1, 3) + q(1, 8));
        assert_eq!(slash_div(1, -3).unwrap(), q(-1, 3) + q(1, 8));
        assert_eq!(slash_div(1, 0), Err(FpnError::DivisionByZero));
    }

    #[test]
    fn dyadic_construction() {
        assert_eq!(ExactRational::from_dyadic(3.into(), -2), q(3, 4));
        assert_eq!(ExactRational::from_dyadic((-3).into(), 3), q(-24, 1));
        assert_eq!(ExactRational::from_f64(0.375).unwrap(), q(3, 8));
        assert_eq!(ExactRational::new(6, -4).unwrap(), q(-3, 2));
    }
}
