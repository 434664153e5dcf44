//! High-precision reference values for the elementary functions.

use astro_float::{BigFloat, Consts, RoundingMode};
use crystal_tc0::fpn::{Elementary, Fpn, Precision};

const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    bits: usize,
    cc: Consts,
}

impl Oracle {
    /// An oracle working at `bits` bits of precision.
    pub fn new(bits: usize) -> Self {
        Oracle { bits, cc: Consts::new().expect("constant cache") }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn from_fpn(&self, x: Fpn) -> BigFloat {
        let mut b = BigFloat::from_i64(x.sig(), self.bits);
        if !x.is_zero() {
            let e = b.exponent().expect("finite");
            b.set_exponent(e + x.exp() as i32);
        }
        b
    }

    pub fn eval(&mut self, kind: Elementary, x: Fpn) -> BigFloat {
        let v = self.from_fpn(x);
        let p = self.bits;
        match kind {
            Elementary::Exp => v.exp(p, RM, &mut self.cc),
            Elementary::Sqrt => v.sqrt(p, RM),
            Elementary::Sin => v.sin(p, RM, &mut self.cc),
            Elementary::Cos => v.cos(p, RM, &mut self.cc),
        }
    }

    /// Whether `|got - want| <= 2^-p |want|`.
    pub fn within_rel(&self, got: Fpn, want: &BigFloat, p: Precision) -> bool {
        let g = self.from_fpn(got);
        if want.is_zero() {
            return g.is_zero();
        }
        let err = g.sub(want, self.bits, RM).abs();
        let mut bound = want.abs();
        let e = bound.exponent().expect("finite");
        bound.set_exponent(e - p.bits() as i32);
        err.cmp(&bound).is_some_and(|c| c <= 0)
    }

    /// `|got - want| / |want|` as an `f64`, for reporting.
    pub fn rel_error(&self, got: Fpn, want: &BigFloat) -> f64 {
        let g = self.from_fpn(got);
        let err = g.sub(want, self.bits, RM).abs().div(&want.abs(), 64, RM);
        let s = format!("{err}");
        s.parse().unwrap_or(f64::INFINITY)
    }
}
