//! Fixed-width bit layout used by the synthesized circuits.
//!
//! An encoded value is `2p + 3` bits, most significant first within each
//! field: one sign bit, `p` bits of `|s|`, then `p + 2` bits of `e` in two's
//! complement. Zero is all zeros.

use super::{Fpn, FpnError, Precision};

/// Fields of an encoded value before any invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawBits {
    pub negative: bool,
    pub magnitude: u64,
    pub exponent: i64,
}

impl RawBits {
    pub fn split(bits: &[bool], prec: Precision) -> Result<Self, FpnError> {
        let width = prec.encoded_width();
        if bits.len() != width {
            return Err(FpnError::BitLength { expected: width, found: bits.len() });
        }
        let p = prec.bits() as usize;
        let magnitude = bits[1..=p].iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
        let exp_bits = &bits[p + 1..];
        let raw = exp_bits.iter().fold(0i64, |acc, &b| (acc << 1) | b as i64);
        let n = exp_bits.len() as u32;
        // Sign-extend the (p + 2)-bit field.
        let exponent = if exp_bits[0] { raw - (1i64 << n) } else { raw };
        Ok(RawBits { negative: bits[0], magnitude, exponent })
    }
}

pub fn encode_bits(x: Fpn, prec: Precision) -> Vec<bool> {
    let p = prec.bits() as usize;
    let mut out = Vec::with_capacity(prec.encoded_width());
    out.push(x.is_negative());
    let mag = x.sig().unsigned_abs();
    out.extend((0..p).rev().map(|i| (mag >> i) & 1 == 1));
    let exp = x.exp() as u64;
    out.extend((0..p + 2).rev().map(|i| (exp >> i) & 1 == 1));
    out
}

pub fn decode_bits(bits: &[bool], prec: Precision) -> Result<Fpn, FpnError> {
    let raw = RawBits::split(bits, prec)?;
    if raw.magnitude == 0 && raw.negative {
        return Err(FpnError::Unnormalized { sig: 0, p: prec.bits() });
    }
    let mag = raw.magnitude as i64;
    Fpn::new(if raw.negative { -mag } else { mag }, raw.exponent, prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().filter(|c| !c.is_whitespace()).map(|c| c == '1').collect()
    }

    #[test]
    fn layout_of_three_at_p2() {
        let p = Precision::new(2).unwrap();
        let three = Fpn::new(3, 0, p).unwrap();
        assert_eq!(encode_bits(three, p), bits("0 11 0000"));
        let x = Fpn::new(-2, -3, p).unwrap();
        assert_eq!(encode_bits(x, p), bits("1 10 1101"));
        assert_eq!(encode_bits(Fpn::ZERO, p), bits("0 00 0000"));
        assert_eq!(encode_bits(Fpn::infinity(false, p), p), bits("0 10 0100"));
    }

    #[test]
    fn decode_rejects_bad_input() {
        let p = Precision::new(2).unwrap();
        assert_eq!(decode_bits(&bits("0110000"), p).unwrap(), Fpn::new(3, 0, p).unwrap());
        assert_eq!(decode_bits(&bits("011000"), p), Err(FpnError::BitLength { expected: 7, found: 6 }));
        assert!(decode_bits(&bits("1 00 0000"), p).is_err());
        assert!(decode_bits(&bits("0 01 0000"), p).is_err());
        assert!(decode_bits(&bits("0 00 0001"), p).is_err());
        // Exponent 5 is outside [-4, 4].
        assert!(decode_bits(&bits("0 10 0101"), p).is_err());
    }
}
