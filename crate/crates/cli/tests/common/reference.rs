//! p-bit floating point evaluated straight from its definition over exact
//! rationals. Rounding searches a sorted table of every representable
//! value, so this is only usable for small `p`. Nothing here calls into the
//! library's own rounding or alignment code.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// `(sig, exp)`; zero is `(0, 0)`, infinity is `(±2^(p-1), 2^p)`.
pub type Pair = (i64, i64);

pub fn pow2(e: i64) -> BigRational {
    let m = BigInt::one() << e.unsigned_abs() as usize;
    if e >= 0 {
        BigRational::from_integer(m)
    } else {
        BigRational::new(BigInt::one(), m)
    }
}

pub fn int(x: i64) -> BigRational {
    BigRational::from_integer(x.into())
}

/// `x ⫽ y`: the quotient, plus 1/8 unless it is a multiple of 1/4.
pub fn slash(x: &BigRational, y: &BigRational) -> BigRational {
    let q = x / y;
    if (&q * int(4)).is_integer() {
        q
    } else {
        q + BigRational::new(1.into(), 8.into())
    }
}

pub struct Reference {
    pub p: u32,
    /// Every finite value plus both infinities at their nominal `s·2^e`, ascending.
    grid: Vec<(BigRational, Pair)>,
}

impl Reference {
    pub fn new(p: u32) -> Self {
        let lim = 1i64 << p;
        let half = 1i64 << (p - 1);
        let mut pos = Vec::new();
        for e in -lim..lim {
            for s in half..lim {
                pos.push((int(s) * pow2(e), (s, e)));
            }
        }
        pos.push((int(half) * pow2(lim), (half, lim)));
        let mut grid: Vec<(BigRational, Pair)> = pos.iter().rev().map(|(v, (s, e))| (-v.clone(), (-s, *e))).collect();
        grid.push((BigRational::zero(), (0, 0)));
        grid.extend(pos);
        Reference { p, grid }
    }

    pub fn exp_limit(&self) -> i64 {
        1i64 << self.p
    }

    /// Finite values in ascending order.
    pub fn finite(&self) -> Vec<Pair> {
        self.grid[1..self.grid.len() - 1].iter().map(|(_, x)| *x).collect()
    }

    /// Consecutive entries of the value table, infinities included.
    pub fn neighbours(&self) -> impl Iterator<Item = (&(BigRational, Pair), &(BigRational, Pair))> {
        self.grid.iter().zip(self.grid.iter().skip(1))
    }

    pub fn value(&self, x: Pair) -> BigRational {
        int(x.0) * pow2(x.1)
    }

    /// Nearest table entry; ties go to the even significand, and where both
    /// candidates are even (zero against the smallest normal) to zero.
    pub fn round(&self, r: &BigRational) -> Pair {
        let first = &self.grid[0];
        let last = &self.grid[self.grid.len() - 1];
        if *r >= last.0 {
            return last.1;
        }
        if *r <= first.0 {
            return first.1;
        }
        let idx = self.grid.partition_point(|(v, _)| v <= r);
        let (lo, hi) = (&self.grid[idx - 1], &self.grid[idx]);
        if lo.0 == *r {
            return lo.1;
        }
        let (dl, dh) = (r - &lo.0, &hi.0 - r);
        if dl < dh {
            return lo.1;
        }
        if dh < dl {
            return hi.1;
        }
        match (lo.1 .0 % 2 == 0, hi.1 .0 % 2 == 0) {
            (true, false) => lo.1,
            (false, true) => hi.1,
            _ => {
                if lo.1 .0 == 0 {
                    lo.1
                } else {
                    hi.1
                }
            }
        }
    }

    /// Exponent used for alignment: zero sits below every other exponent.
    fn align(&self, x: Pair) -> i64 {
        if x.0 == 0 {
            -self.exp_limit()
        } else {
            x.1
        }
    }

    pub fn add(&self, a: Pair, b: Pair) -> Pair {
        let (e1, e2) = (self.align(a), self.align(b));
        if e1 >= e2 {
            self.round(&((int(a.0) + slash(&int(b.0), &pow2(e1 - e2))) * pow2(e1)))
        } else {
            self.round(&((slash(&int(a.0), &pow2(e2 - e1)) + int(b.0)) * pow2(e2)))
        }
    }

    pub fn mul(&self, a: Pair, b: Pair) -> Pair {
        self.round(&(int(a.0) * int(b.0) * pow2(a.1 + b.1)))
    }

    pub fn div(&self, a: Pair, b: Pair) -> Pair {
        let p = self.p as i64;
        let q = slash(&(int(a.0) * pow2(p - 1)), &int(b.0));
        self.round(&(q * pow2(a.1 - b.1 - p + 1)))
    }

    pub fn leq(&self, a: Pair, b: Pair) -> bool {
        let (e1, e2) = (self.align(a), self.align(b));
        if e1 >= e2 {
            int(a.0) <= slash(&int(b.0), &pow2(e1 - e2))
        } else {
            slash(&int(a.0), &pow2(e2 - e1)) <= int(b.0)
        }
    }
}

/// Midpoint of two table entries.
pub fn midpoint(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / int(2)
}

pub fn is_even_sig(x: Pair) -> bool {
    x.0.abs() % 2 == 0
}
