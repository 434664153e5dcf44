use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{ExactRational, Fpn, Precision};

/// Nearest `p`-bit value to `r`, ties to the even significand.
///
/// Magnitudes past the largest finite value saturate to `±∞`; magnitudes
/// below half the smallest normal flush to zero.
pub fn round_p(r: &ExactRational, prec: Precision) -> Fpn {
    let negative = r.numer().sign() == Sign::Minus;
    round_scaled(negative, r.numer().magnitude(), r.denom().magnitude(), 0, prec)
}

pub(crate) fn round_dyadic(mant: &BigInt, exp: i64, prec: Precision) -> Fpn {
    let negative = mant.sign() == Sign::Minus;
    round_scaled(negative, mant.magnitude(), &BigUint::one(), exp, prec)
}

pub(crate) fn round_f64(x: f64, prec: Precision) -> Fpn {
    if x == 0.0 {
        return Fpn::ZERO;
    }
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 { (frac, -1074) } else { (frac | (1u64 << 52), biased - 1075) };
    round_scaled(negative, &BigUint::from(mant), &BigUint::one(), exp, prec)
}

/// Rounds `±(num / den) · 2^exp2`.
///
/// The scale `exp2` only moves the result exponent; shifts applied to the
/// big integers depend on the ratio `num / den` alone, so dyadic values with
/// extreme exponents stay cheap.
pub(crate) fn round_scaled(negative: bool, num: &BigUint, den: &BigUint, exp2: i64, prec: Precision) -> Fpn {
    if num.is_zero() {
        return Fpn::ZERO;
    }
    let p = prec.bits() as i64;
    // floor(log2(num/den)) is t0 or t0 - 1.
    let t0 = num.bits() as i64 - den.bits() as i64;
    let below = if t0 >= 0 { *num < (den << t0 as usize) } else { (num << (-t0) as usize) < *den };
    let t = if below { t0 - 1 } else { t0 };

    // m = num/den · 2^sh lies in [2^(p-1), 2^p).
    let sh = p - 1 - t;
    let (scaled_num, scaled_den) =
        if sh >= 0 { (num << sh as usize, den.clone()) } else { (num.clone(), den << (-sh) as usize) };
    let (q, r) = scaled_num.div_rem(&scaled_den);
    let mut sig = q.to_i64().expect("significand fits in p bits");
    let mut exp = t + exp2 - (p - 1);

    if exp < prec.min_exp() {
        // Below the smallest normal; the only candidates are 0 and that normal.
        let tie = sig == prec.sig_min() && r.is_zero();
        if exp < prec.min_exp() - 1 || tie {
            return Fpn::ZERO;
        }
        return Fpn::from_parts_unchecked(signed(negative, prec.sig_min()), prec.min_exp());
    }

    match (&r << 1usize).cmp(&scaled_den) {
        Ordering::Less => {}
        Ordering::Greater => sig += 1,
        Ordering::Equal => {
            if sig % 2 == 1 {
                sig += 1;
            }
        }
    }
    if sig == prec.sig_limit() {
        sig = prec.sig_min();
        exp += 1;
    }
    if exp > prec.max_exp() {
        return Fpn::infinity(negative, prec);
    }
    Fpn::from_parts_unchecked(signed(negative, sig), exp)
}

fn signed(negative: bool, mag: i64) -> i64 {
    if negative {
        -mag
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Precision {
        Precision::new(2).unwrap()
    }

    fn int(x: i64) -> ExactRational {
        ExactRational::from_integer(x)
    }

    #[test]
    fn worked_examples_at_p2() {
        assert_eq!(round_p(&int(5), p2()), Fpn::from_parts_unchecked(2, 1));
        assert_eq!(round_p(&int(3), p2()), Fpn::from_parts_unchecked(3, 0));
        assert_eq!(round_p(&int(9), p2()), Fpn::from_parts_unchecked(2, 2));
        assert_eq!(round_p(&int(7), p2()), Fpn::from_parts_unchecked(2, 2));
        assert_eq!(round_p(&int(-5), p2()), Fpn::from_parts_unchecked(-2, 1));
        assert_eq!(round_p(&int(0), p2()), Fpn::ZERO);
    }

    #[test]
    fn saturation_and_underflow() {
        let p = p2();
        // Largest finite: 3 · 2^3 = 24; the next binade point is 32.
        assert_eq!(round_p(&int(24), p), Fpn::from_parts_unchecked(3, 3));
        assert_eq!(round_p(&int(27), p), Fpn::from_parts_unchecked(3, 3));
        assert_eq!(round_p(&int(28), p), Fpn::infinity(false, p));
        assert_eq!(round_p(&int(-1000), p), Fpn::infinity(true, p));
        // Smallest normal: 2 · 2^-4 = 1/8.
        let tiny = |n, d| ExactRational::new(n, d).unwrap();
        assert_eq!(round_p(&tiny(1, 8), p), Fpn::from_parts_unchecked(2, -4));
        assert_eq!(round_p(&tiny(1, 16), p), Fpn::ZERO);
        assert_eq!(round_p(&tiny(3, 32), p), Fpn::from_parts_unchecked(2, -4));
        assert_eq!(round_p(&tiny(-3, 32), p), Fpn::from_parts_unchecked(-2, -4));
        assert_eq!(round_p(&tiny(1, 17), p), Fpn::ZERO);
    }

    #[test]
    fn non_dyadic_inputs() {
        let p = Precision::new(8).unwrap();
        let third = ExactRational::new(1, 3).unwrap();
        let x = round_p(&third, p);
        // 1/3 = 0.0101..b; 8 significant bits: 10101011 · 2^-9.
        assert_eq!(x, Fpn::from_parts_unchecked(0b1010_1011, -9));
    }
}
