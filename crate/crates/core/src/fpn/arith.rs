use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::rational::slash_div;
use super::round::{round_dyadic, round_scaled};
use super::{Fpn, FpnError, Precision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithOp {
    Add,
    Mul,
    Div,
    Leq,
}

impl ArithOp {
    pub const ALL: [ArithOp; 4] = [ArithOp::Add, ArithOp::Mul, ArithOp::Div, ArithOp::Leq];

    pub fn name(self) -> &'static str {
        match self {
            ArithOp::Add => "add",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
            ArithOp::Leq => "leq",
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArithOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" => Ok(ArithOp::Add),
            "mul" => Ok(ArithOp::Mul),
            "div" => Ok(ArithOp::Div),
            "leq" => Ok(ArithOp::Leq),
            other => Err(format!("unknown operation {other:?} (expected add, mul, div or leq)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithResult {
    Value(Fpn),
    Bool(bool),
}

impl ArithResult {
    pub fn value(self) -> Option<Fpn> {
        match self {
            ArithResult::Value(x) => Some(x),
            ArithResult::Bool(_) => None,
        }
    }
}

pub fn fp_arith(op: ArithOp, a: Fpn, b: Fpn, prec: Precision) -> Result<ArithResult, FpnError> {
    match op {
        ArithOp::Add => fp_add(a, b, prec).map(ArithResult::Value),
        ArithOp::Mul => fp_mul(a, b, prec).map(ArithResult::Value),
        ArithOp::Div => fp_div(a, b, prec).map(ArithResult::Value),
        ArithOp::Leq => fp_leq(a, b, prec).map(ArithResult::Bool),
    }
}

fn finite(x: Fpn, prec: Precision) -> Result<(), FpnError> {
    x.check(prec)?;
    if x.is_infinite(prec) {
        return Err(FpnError::InfiniteOperand);
    }
    Ok(())
}

/// Exponent used when aligning operands: zero sits at the bottom of the
/// exponent range so that shifting it is exact.
fn align_exp(x: Fpn, prec: Precision) -> i64 {
    if x.is_zero() {
        prec.min_exp()
    } else {
        x.exp()
    }
}

/// `x ⫽ 2^delta` as `mant / 2^frac_bits`.
///
/// For `delta > p + 4` the quotient is nonzero and below 1/16 in magnitude,
/// so the result is `1/8 + ε` with `|ε| < 1/16`. Adding it to, or comparing
/// it with, a `p`-bit integer significand gives the same rounding and the
/// same ordering for every such `ε`, so `ε` is dropped.
fn slash_pow2(x: i64, delta: i64, prec: Precision) -> (BigInt, u32) {
    debug_assert!(delta >= 0);
    if x == 0 {
        return (BigInt::zero(), 0);
    }
    if delta <= 2 {
        return (BigInt::from(x), delta as u32);
    }
    if delta > prec.bits() as i64 + 4 {
        return (BigInt::one(), 3);
    }
    let delta = delta as u32;
    if x.trailing_zeros() >= delta - 2 {
        (BigInt::from(x), delta)
    } else {
        (BigInt::from(x) + (BigInt::one() << (delta - 3)), delta)
    }
}

/// Operands ordered by alignment exponent: `(hi_sig, lo_sig, hi_exp, delta, swapped)`.
fn order_for_alignment(a: Fpn, b: Fpn, prec: Precision) -> (i64, i64, i64, i64, bool) {
    let (ea, eb) = (align_exp(a, prec), align_exp(b, prec));
    if ea >= eb {
        (a.sig(), b.sig(), ea, ea - eb, false)
    } else {
        (b.sig(), a.sig(), eb, eb - ea, true)
    }
}

pub fn fp_add(a: Fpn, b: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    finite(a, prec)?;
    finite(b, prec)?;
    let (hi, lo, e, delta, _) = order_for_alignment(a, b, prec);
    let (m, frac) = slash_pow2(lo, delta, prec);
    let mant = (BigInt::from(hi) << frac) + m;
    Ok(round_dyadic(&mant, e - frac as i64, prec))
}

pub fn fp_sub(a: Fpn, b: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    fp_add(a, b.neg(), prec)
}

pub fn fp_mul(a: Fpn, b: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    finite(a, prec)?;
    finite(b, prec)?;
    let mant = BigInt::from(a.sig() as i128 * b.sig() as i128);
    Ok(round_dyadic(&mant, a.exp() + b.exp(), prec))
}

pub fn fp_div(a: Fpn, b: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    finite(a, prec)?;
    finite(b, prec)?;
    if b.is_zero() {
        return Err(FpnError::DivisionByZero);
    }
    let p = prec.bits() as i64;
    let q = slash_div(BigInt::from(a.sig()) << (p - 1) as usize, b.sig())?;
    let negative = q.numer().sign() == Sign::Minus;
    let exp = a.exp() - b.exp() - p + 1;
    Ok(round_scaled(negative, q.numer().magnitude(), q.denom().magnitude(), exp, prec))
}

/// Comparison by the aligned-significand rule; with the `⫽` perturbation it
/// can differ from the order of the exact values.
pub fn fp_leq(a: Fpn, b: Fpn, prec: Precision) -> Result<bool, FpnError> {
    finite(a, prec)?;
    finite(b, prec)?;
    let (hi, lo, _, delta, swapped) = order_for_alignment(a, b, prec);
    let (m, frac) = slash_pow2(lo, delta, prec);
    let hi_scaled = BigInt::from(hi) << frac;
    Ok(if swapped { m <= hi_scaled } else { hi_scaled <= m })
}

/// Exact sum of `(mant, exp)` terms as a single `(mant, exp)` pair.
fn exact_sum(terms: &[(BigInt, i64)]) -> (BigInt, i64) {
    let Some(min_exp) = terms.iter().filter(|(m, _)| !m.is_zero()).map(|(_, e)| *e).min() else {
        return (BigInt::zero(), 0);
    };
    let mant = terms
        .iter()
        .filter(|(m, _)| !m.is_zero())
        .fold(BigInt::zero(), |acc, (m, e)| acc + (m << (e - min_exp) as usize));
    (mant, min_exp)
}

/// Iterated sum: exact over all operands, then one rounding.
pub fn fp_sum(xs: &[Fpn], prec: Precision) -> Result<Fpn, FpnError> {
    let mut terms = Vec::with_capacity(xs.len());
    for &x in xs {
        finite(x, prec)?;
        terms.push((BigInt::from(x.sig()), x.exp()));
    }
    let (mant, exp) = exact_sum(&terms);
    Ok(round_dyadic(&mant, exp, prec))
}

/// Iterated product: exact over all operands, then one rounding.
pub fn fp_prod(xs: &[Fpn], prec: Precision) -> Result<Fpn, FpnError> {
    let mut mant = BigInt::one();
    let mut exp = 0i64;
    for &x in xs {
        finite(x, prec)?;
        mant *= x.sig();
        exp += x.exp();
    }
    if mant.is_zero() {
        return Ok(Fpn::ZERO);
    }
    Ok(round_dyadic(&mant, exp, prec))
}

/// `Σ ws[i]·xs[i] + bias` with exact products and a single rounding.
pub fn fp_dot(ws: &[Fpn], xs: &[Fpn], bias: Option<Fpn>, prec: Precision) -> Result<Fpn, FpnError> {
    if ws.len() != xs.len() {
        return Err(FpnError::Domain {
            op: "fp_dot",
            reason: format!("length mismatch: {} weights, {} inputs", ws.len(), xs.len()),
        });
    }
    let mut terms = Vec::with_capacity(ws.len() + 1);
    for (&w, &x) in ws.iter().zip(xs) {
        finite(w, prec)?;
        finite(x, prec)?;
        terms.push((BigInt::from(w.sig() as i128 * x.sig() as i128), w.exp() + x.exp()));
    }
    if let Some(b) = bias {
        finite(b, prec)?;
        terms.push((BigInt::from(b.sig()), b.exp()));
    }
    let (mant, exp) = exact_sum(&terms);
    Ok(round_dyadic(&mant, exp, prec))
}
