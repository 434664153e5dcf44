//! `exp`, `sqrt`, `sin` and `cos` at `p` bits.
//!
//! Each function is evaluated in big-integer fixed point carrying the
//! precision's guard bits (plus a few bits to absorb truncation in the
//! series), then rounded once with [`round_p`](super::round_p). The result is
//! within relative error `2^-p` of the true value; `sqrt` is correctly rounded.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::round::{round_dyadic, round_p, round_scaled};
use super::{ExactRational, Fpn, FpnError, Precision};

/// Extra working bits on top of the guard bits for series truncation.
const SLACK_BITS: u32 = 16;

/// Arguments of `sin`/`cos` must satisfy `|x| < 2^this`.
pub const MAX_TRIG_MAGNITUDE_BITS: i64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Elementary {
    Exp,
    Sqrt,
    Sin,
    Cos,
}

impl Elementary {
    pub const ALL: [Elementary; 4] = [Elementary::Exp, Elementary::Sqrt, Elementary::Sin, Elementary::Cos];

    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Sqrt => "sqrt",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
        }
    }
}

impl fmt::Display for Elementary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Elementary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Elementary::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown elementary function {s:?}"))
    }
}

pub fn fp_elementary(kind: Elementary, x: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    match kind {
        Elementary::Exp => fp_exp(x, prec),
        Elementary::Sqrt => fp_sqrt(x, prec),
        Elementary::Sin => fp_sin(x, prec),
        Elementary::Cos => fp_cos(x, prec),
    }
}

fn finite(x: Fpn, prec: Precision) -> Result<(), FpnError> {
    x.check(prec)?;
    if x.is_infinite(prec) {
        return Err(FpnError::InfiniteOperand);
    }
    Ok(())
}

fn working_bits(prec: Precision) -> u32 {
    prec.guard_bits() + SLACK_BITS
}

/// `x · 2^scale` truncated toward negative infinity.
fn to_fixed(x: Fpn, scale: i64) -> BigInt {
    let shift = x.exp() + scale;
    let s = BigInt::from(x.sig());
    if shift >= 0 {
        s << shift as usize
    } else {
        s >> (-shift) as usize
    }
}

/// `sum_{m >= 0} (-1)^m / ((2m+1) q^(2m+1))` at scale `2^bits`, i.e. `atan(1/q)`
/// when `alternating`, `atanh(1/q)` otherwise.
fn arc_series(q: u32, bits: u32, alternating: bool) -> BigInt {
    let q = BigInt::from(q);
    let q2 = &q * &q;
    let mut power = (BigInt::one() << bits as usize) / &q;
    let mut sum = BigInt::zero();
    let mut m = 0u32;
    while !power.is_zero() {
        let term = &power / (2 * m + 1);
        if alternating && m % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        power /= &q2;
        m += 1;
    }
    sum
}

/// `π · 2^bits`, within a few units in the last place.
fn pi_fixed(bits: u32) -> BigInt {
    let b = bits + 8;
    let pi = arc_series(5, b, true) * 16 - arc_series(239, b, true) * 4;
    pi >> 8usize
}

/// `ln 2 · 2^bits`, within a few units in the last place.
fn ln2_fixed(bits: u32) -> BigInt {
    let b = bits + 8;
    (arc_series(3, b, false) * 2) >> 8usize
}

/// `exp(r)` for a fixed-point `r` at scale `2^bits` with `|r| <= 1`.
fn exp_series(r: &BigInt, bits: u32) -> BigInt {
    let one = BigInt::one() << bits as usize;
    let mut term = one.clone();
    let mut sum = one;
    let mut n = 1u32;
    loop {
        term = (&term * r) >> bits as usize;
        term /= n;
        if term.is_zero() {
            break;
        }
        sum += &term;
        n += 1;
    }
    sum
}

/// `(sin r, cos r)` for a fixed-point `r` at scale `2^bits` with `|r| <= 1`.
fn sin_cos_series(r: &BigInt, bits: u32) -> (BigInt, BigInt) {
    let one = BigInt::one() << bits as usize;
    let r2 = (r * r) >> bits as usize;
    let mut sin = r.clone();
    let mut term = r.clone();
    let mut n = 1u32;
    while !term.is_zero() {
        term = -((&term * &r2) >> bits as usize) / ((n + 1) * (n + 2));
        sin += &term;
        n += 2;
    }
    let mut cos = one.clone();
    let mut term = one;
    let mut n = 0u32;
    while !term.is_zero() {
        term = -((&term * &r2) >> bits as usize) / ((n + 1) * (n + 2));
        cos += &term;
        n += 2;
    }
    (sin, cos)
}

fn round_fixed(v: &BigInt, scale: i64, prec: Precision) -> Fpn {
    round_dyadic(v, -scale, prec)
}

/// `π` rounded to `p` bits.
pub fn fp_pi(prec: Precision) -> Fpn {
    let w = working_bits(prec);
    round_fixed(&pi_fixed(w), w as i64, prec)
}

pub fn fp_exp(x: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    finite(x, prec)?;
    if x.is_zero() {
        return Ok(Fpn::from_i64(1, prec));
    }
    // exp(x) > 2^(2^p + 1) saturates; exp(x) < 2^(-2^p - p - 2) flushes to zero.
    let approx = x.to_f64(prec);
    let limit = prec.exp_limit() as f64;
    if approx > (limit + 4.0) * std::f64::consts::LN_2 {
        return Ok(Fpn::infinity(false, prec));
    }
    if approx < -(limit + prec.bits() as f64 + 4.0) * std::f64::consts::LN_2 {
        return Ok(Fpn::ZERO);
    }

    // x = k ln2 + r with |r| <= ln2 / 2 (up to rounding of k).
    let k = (approx / std::f64::consts::LN_2).round() as i64;
    let w = working_bits(prec) + 64 - k.unsigned_abs().leading_zeros();
    let ln2 = ln2_fixed(w);
    let r = to_fixed(x, w as i64) - &ln2 * k;
    let e = exp_series(&r, w);
    Ok(round_fixed(&e, w as i64 - k, prec))
}

pub fn fp_sqrt(x: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    finite(x, prec)?;
    if x.is_negative() {
        return Err(FpnError::Domain { op: "sqrt", reason: format!("negative operand {x}") });
    }
    if x.is_zero() {
        return Ok(Fpn::ZERO);
    }
    // Scale the significand by an even power so it has >= 2(p + 4) bits and
    // the remaining exponent is even.
    let p = prec.bits() as i64;
    let mut shift = 2 * (p + 4);
    if (x.exp() - shift).rem_euclid(2) != 0 {
        shift += 1;
    }
    let n = BigUint::from(x.sig() as u64) << shift as usize;
    let root = n.sqrt();
    let half_exp = (x.exp() - shift) / 2;
    if &root * &root == n {
        return Ok(round_scaled(false, &root, &BigUint::one(), half_exp, prec));
    }
    // The true root lies strictly inside (root, root + 1), which contains no
    // rounding boundary at p bits; round its midpoint instead.
    let mid = (root << 1usize) + 1u32;
    Ok(round_scaled(false, &mid, &BigUint::one(), half_exp - 1, prec))
}

#[derive(Clone, Copy)]
enum Trig {
    Sin,
    Cos,
}

pub fn fp_sin(x: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    trig(Trig::Sin, x, prec)
}

pub fn fp_cos(x: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    trig(Trig::Cos, x, prec)
}

fn trig(which: Trig, x: Fpn, prec: Precision) -> Result<Fpn, FpnError> {
    finite(x, prec)?;
    if x.is_zero() {
        return Ok(match which {
            Trig::Sin => Fpn::ZERO,
            Trig::Cos => Fpn::from_i64(1, prec),
        });
    }
    let p = prec.bits() as i64;
    if matches!(which, Trig::Sin) && x.exp() + p < -8 {
        return Ok(small_sin(x, prec));
    }

    let guard = working_bits(prec) as i64;
    let magnitude_bits = (x.exp() + p).max(0);
    if magnitude_bits > MAX_TRIG_MAGNITUDE_BITS {
        return Err(FpnError::Domain {
            op: "trig",
            reason: format!("|x| >= 2^{MAX_TRIG_MAGNITUDE_BITS} is outside the reduction range"),
        });
    }
    let mut w = guard + magnitude_bits + 32;
    loop {
        let pi = pi_fixed(w as u32);
        let xf = to_fixed(x, w);
        // k = round(2x / π); r = x - kπ/2 held at scale 2^(w+1).
        let two_x = &xf << 1usize;
        let k = div_round(&two_x, &pi);
        let r = &two_x - &k * &pi;
        let k_bits = k.bits() as i64;
        // Relative accuracy of r needs |r| well above the error k·ulp(π).
        if (r.bits() as i64) < k_bits + guard + 24 {
            w *= 2;
            continue;
        }
        let scale = (w + 1) as u32;
        let (s, c) = sin_cos_series(&r, scale);
        let quadrant = k.mod_floor_small(4);
        let v = match (which, quadrant) {
            (Trig::Sin, 0) | (Trig::Cos, 3) => s,
            (Trig::Sin, 1) | (Trig::Cos, 0) => c,
            (Trig::Sin, 2) | (Trig::Cos, 1) => -s,
            _ => -c,
        };
        return Ok(round_fixed(&v, scale as i64, prec));
    }
}

/// `sin x` for `|x| < 2^-8` from its exact Taylor polynomial.
fn small_sin(x: Fpn, prec: Precision) -> Fpn {
    // Each term shrinks by at least 2^-16, so this many terms leave a tail
    // below 2^-(guard bits) relative.
    let terms = working_bits(prec) / 16 + 2;
    let xr = ExactRational::from_dyadic(x.sig().into(), x.exp()).into_big_rational();
    let x2 = &xr * &xr;
    let mut term = xr.clone();
    let mut sum = xr;
    for m in 1..terms as i64 {
        term = -(&term * &x2) / BigRational::from_integer(BigInt::from((2 * m) * (2 * m + 1)));
        sum += &term;
    }
    round_p(&ExactRational::from(sum), prec)
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let two_a = a << 1usize;
    let (q, _) = num_integer::Integer::div_mod_floor(&(two_a + b), &(b << 1usize));
    q
}

trait ModSmall {
    fn mod_floor_small(&self, m: u32) -> u32;
}

impl ModSmall for BigInt {
    fn mod_floor_small(&self, m: u32) -> u32 {
        let r = num_integer::Integer::mod_floor(self, &BigInt::from(m));
        r.to_u32().expect("residue below modulus")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p8() -> Precision {
        Precision::new(8).unwrap()
    }

    #[test]
    fn analytic_identities() {
        for bits in [2, 8, 24] {
            let p = Precision::new(bits).unwrap();
            let one = Fpn::from_i64(1, p);
            assert_eq!(fp_exp(Fpn::ZERO, p).unwrap(), one);
            assert_eq!(fp_sin(Fpn::ZERO, p).unwrap(), Fpn::ZERO);
            assert_eq!(fp_cos(Fpn::ZERO, p).unwrap(), one);
            assert_eq!(fp_sqrt(Fpn::from_i64(4, p), p).unwrap(), Fpn::from_i64(2, p));
            assert_eq!(fp_sqrt(Fpn::ZERO, p).unwrap(), Fpn::ZERO);
        }
    }

    #[test]
    fn constants() {
        let pi = pi_fixed(60).to_f64().unwrap() / 2f64.powi(60);
        assert!((pi - std::f64::consts::PI).abs() < 1e-15);
        let ln2 = ln2_fixed(60).to_f64().unwrap() / 2f64.powi(60);
        assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn exp_one_close_to_e() {
        let p = p8();
        let e = fp_exp(Fpn::from_i64(1, p), p).unwrap().to_f64(p);
        assert!(((e - std::f64::consts::E) / std::f64::consts::E).abs() <= 2f64.powi(-8));
    }

    #[test]
    fn domain_and_saturation() {
        let p = p8();
        assert!(matches!(fp_sqrt(Fpn::from_i64(-4, p), p), Err(FpnError::Domain { .. })));
        assert!(fp_exp(Fpn::infinity(false, p), p).is_err());
        let big = Fpn::new(255, 10, p).unwrap();
        assert_eq!(fp_exp(big, p).unwrap(), Fpn::infinity(false, p));
        assert_eq!(fp_exp(big.neg(), p).unwrap(), Fpn::ZERO);
    }

    #[test]
    fn trig_quadrants_against_f64() {
        let p = Precision::new(24).unwrap();
        for &v in &[0.5f64, 1.0, 2.0, 3.0, 3.1415925, -4.0, 7.5, 100.0, 1.0e-4, -3.0e-3] {
            let x = Fpn::from_f64(v, p).unwrap();
            let exact = x.to_f64(p);
            let s = fp_sin(x, p).unwrap().to_f64(p);
            let c = fp_cos(x, p).unwrap().to_f64(p);
            assert!(((s - exact.sin()) / exact.sin()).abs() <= 2f64.powi(-24), "sin {v}");
            assert!(((c - exact.cos()) / exact.cos()).abs() <= 2f64.powi(-24), "cos {v}");
        }
    }
}
