//! Exact `p`-bit floating-point numbers.
//!
//! A value is a pair `(s, e)` of integers denoting `s · 2^e`, where the
//! significand is either zero or satisfies `2^(p-1) <= |s| < 2^p` and the
//! exponent lies in `[-2^p, 2^p - 1]`. The exponent `2^p` is reserved for
//! `±∞`, with the sign carried by `s`.
//!
//! Every operation here is a pure function of its operands and the
//! [`Precision`]: intermediate results are kept as exact rationals and
//! rounded exactly once, to the nearest representable value with ties going
//! to the even significand.
//!
//! ```
//! use crystal_tc0::fpn::{fp_add, Fpn, Precision};
//!
//! let p2 = Precision::new(2).unwrap();
//! let two = Fpn::new(2, 0, p2).unwrap();
//! let three = Fpn::new(3, 0, p2).unwrap();
//! // 2 + 3 = 5 is a tie between 4 and 6; the even significand wins.
//! assert_eq!(fp_add(two, three, p2).unwrap(), Fpn::new(2, 1, p2).unwrap());
//! ```

mod arith;
mod bits;
mod elementary;
mod rational;
mod round;

pub use arith::{fp_add, fp_arith, fp_div, fp_dot, fp_leq, fp_mul, fp_prod, fp_sub, fp_sum, ArithOp, ArithResult};
pub use bits::{decode_bits, encode_bits, RawBits};
pub use elementary::{fp_cos, fp_elementary, fp_exp, fp_pi, fp_sin, fp_sqrt, Elementary, MAX_TRIG_MAGNITUDE_BITS};
pub use rational::{slash_div, ExactRational};
pub use round::round_p;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported significand width; significands are stored in `i64`.
pub const MAX_PRECISION: u32 = 62;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FpnError {
    #[error("precision must satisfy 2 <= p <= {MAX_PRECISION}, got {0}")]
    InvalidPrecision(u32),
    #[error("guard bits {guard} must be at least p + 2 = {min}")]
    InvalidGuard { guard: u32, min: u32 },
    #[error("significand {sig} is neither zero nor normalized for p = {p}")]
    Unnormalized { sig: i64, p: u32 },
    #[error("exponent {exp} outside [-2^p, 2^p] for p = {p}")]
    ExponentOutOfRange { exp: i64, p: u32 },
    #[error("zero must be stored with exponent 0, got {0}")]
    NonCanonicalZero(i64),
    #[error("infinity must be stored with significand ±2^(p-1)")]
    NonCanonicalInfinity,
    #[error("division by zero")]
    DivisionByZero,
    #[error("infinite operand")]
    InfiniteOperand,
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },
    #[error("bit-string has length {found}, expected {expected}")]
    BitLength { expected: usize, found: usize },
    #[error("cannot represent non-finite f64 {0}")]
    NonFiniteInput(f64),
}

/// Significand width `p` plus the working precision used by the elementary
/// functions before their final rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    bits: u32,
    guard_bits: u32,
}

impl Precision {
    /// `p`-bit precision with `max(2p, p + 32)` guard bits.
    pub fn new(bits: u32) -> Result<Self, FpnError> {
        Self::with_guard(bits, (2 * bits).max(bits + 32))
    }

    pub fn with_guard(bits: u32, guard_bits: u32) -> Result<Self, FpnError> {
        if !(2..=MAX_PRECISION).contains(&bits) {
            return Err(FpnError::InvalidPrecision(bits));
        }
        if guard_bits < bits + 2 {
            return Err(FpnError::InvalidGuard { guard: guard_bits, min: bits + 2 });
        }
        Ok(Self { bits, guard_bits })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn guard_bits(self) -> u32 {
        self.guard_bits
    }

    /// `2^p`: the infinity exponent, and the magnitude of the smallest exponent.
    pub fn exp_limit(self) -> i64 {
        1i64 << self.bits
    }

    pub fn max_exp(self) -> i64 {
        self.exp_limit() - 1
    }

    pub fn min_exp(self) -> i64 {
        -self.exp_limit()
    }

    /// Smallest nonzero significand magnitude, `2^(p-1)`.
    pub fn sig_min(self) -> i64 {
        1i64 << (self.bits - 1)
    }

    /// Exclusive upper bound on significand magnitudes, `2^p`.
    pub fn sig_limit(self) -> i64 {
        1i64 << self.bits
    }

    /// Width of one encoded value: sign, `p` magnitude bits, `p + 2` exponent bits.
    pub fn encoded_width(self) -> usize {
        2 * self.bits as usize + 3
    }
}

/// A `p`-bit floating-point value `sig · 2^exp`.
///
/// The precision is not stored; constructors check the invariants against
/// the [`Precision`] they are given and arithmetic assumes operands were
/// built for the same precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fpn {
    sig: i64,
    exp: i64,
}

impl Fpn {
    pub const ZERO: Fpn = Fpn { sig: 0, exp: 0 };

    pub fn new(sig: i64, exp: i64, prec: Precision) -> Result<Self, FpnError> {
        let x = Fpn { sig, exp };
        x.check(prec)?;
        Ok(x)
    }

    pub(crate) const fn from_parts_unchecked(sig: i64, exp: i64) -> Self {
        Fpn { sig, exp }
    }

    pub fn infinity(negative: bool, prec: Precision) -> Self {
        let s = prec.sig_min();
        Fpn { sig: if negative { -s } else { s }, exp: prec.exp_limit() }
    }

    /// Checks the representation invariants for `prec`.
    pub fn check(self, prec: Precision) -> Result<(), FpnError> {
        let p = prec.bits();
        if self.sig == 0 {
            return if self.exp == 0 { Ok(()) } else { Err(FpnError::NonCanonicalZero(self.exp)) };
        }
        let mag = self.sig.unsigned_abs() as i64;
        if mag < prec.sig_min() || mag >= prec.sig_limit() {
            return Err(FpnError::Unnormalized { sig: self.sig, p });
        }
        if self.exp < prec.min_exp() || self.exp > prec.exp_limit() {
            return Err(FpnError::ExponentOutOfRange { exp: self.exp, p });
        }
        if self.exp == prec.exp_limit() && mag != prec.sig_min() {
            return Err(FpnError::NonCanonicalInfinity);
        }
        Ok(())
    }

    pub fn sig(self) -> i64 {
        self.sig
    }

    pub fn exp(self) -> i64 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.sig == 0
    }

    pub fn is_negative(self) -> bool {
        self.sig < 0
    }

    pub fn is_infinite(self, prec: Precision) -> bool {
        self.sig != 0 && self.exp == prec.exp_limit()
    }

    pub fn neg(self) -> Self {
        Fpn { sig: -self.sig, exp: self.exp }
    }

    pub fn abs(self) -> Self {
        Fpn { sig: self.sig.abs(), exp: self.exp }
    }

    /// Exact value of a finite number.
    pub fn to_rational(self, prec: Precision) -> Result<ExactRational, FpnError> {
        if self.is_infinite(prec) {
            return Err(FpnError::InfiniteOperand);
        }
        Ok(ExactRational::from_dyadic(self.sig.into(), self.exp))
    }

    /// Nearest `f64`; infinities map to `f64` infinities.
    pub fn to_f64(self, prec: Precision) -> f64 {
        if self.is_infinite(prec) {
            return if self.sig < 0 { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        if self.sig == 0 {
            return 0.0;
        }
        // Split the scaling so that intermediate powers stay finite.
        let mut v = self.sig as f64;
        let mut e = self.exp;
        while e > 0 {
            let step = e.min(1000);
            v *= 2f64.powi(step as i32);
            e -= step;
            if v.is_infinite() {
                return v;
            }
        }
        while e < 0 {
            let step = (-e).min(1000);
            v /= 2f64.powi(step as i32);
            e += step;
            if v == 0.0 {
                return v;
            }
        }
        v
    }

    /// `round_p` of the exact value of `x`.
    pub fn from_f64(x: f64, prec: Precision) -> Result<Self, FpnError> {
        if !x.is_finite() {
            return Err(FpnError::NonFiniteInput(x));
        }
        Ok(round::round_f64(x, prec))
    }

    pub fn from_i64(x: i64, prec: Precision) -> Self {
        round::round_dyadic(&x.into(), 0, prec)
    }
}

/// Every finite value at `prec` in increasing order, zero included.
///
/// There are `2^(2p+1) + 1` of them, so this is meant for small `p` only.
pub fn finite_values(prec: Precision) -> Vec<Fpn> {
    assert!(prec.bits() <= 12, "enumerating p = {} would not fit in memory", prec.bits());
    let positive: Vec<Fpn> = (prec.min_exp()..=prec.max_exp())
        .flat_map(|e| (prec.sig_min()..prec.sig_limit()).map(move |s| Fpn { sig: s, exp: e }))
        .collect();
    let mut out: Vec<Fpn> = positive.iter().rev().map(|x| x.neg()).collect();
    out.push(Fpn::ZERO);
    out.extend(positive);
    out
}

impl fmt::Display for Fpn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨{}, {}⟩", self.sig, self.exp)
    }
}
