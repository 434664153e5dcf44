//! The reference evaluator and the high-precision oracle must reject wrong
//! answers, otherwise a passing acceptance run means nothing.

mod common;

use common::oracle::Oracle;
use common::reference::{int, Reference};
use crystal_tc0::fpn::{fp_elementary, Elementary, Fpn, Precision};
use num_bigint::BigInt;
use num_rational::BigRational;

#[test]
fn reference_worked_examples() {
    let r = Reference::new(2);
    assert_eq!(r.round(&int(5)), (2, 1));
    assert_eq!(r.round(&int(3)), (3, 0));
    assert_eq!(r.round(&int(9)), (2, 2));
    assert_eq!(r.add((2, 0), (3, 0)), (2, 1));
    assert_eq!(r.mul((3, 0), (3, 0)), (2, 2));
    assert_eq!(r.div((2, 0), (2, 0)), (2, -1));
    assert!(r.leq((2, 0), (3, 0)));
    assert!(!r.leq((3, 0), (2, 0)));
}

#[test]
fn reference_saturates_and_underflows() {
    let r = Reference::new(2);
    let max = int(3) * common::reference::pow2(3);
    assert_eq!(r.round(&max), (3, 3));
    assert_eq!(r.round(&(int(100) * &max)), (2, 4));
    let tiny = BigRational::new(BigInt::from(1), BigInt::from(1 << 10));
    assert_eq!(r.round(&tiny), (0, 0));
}

#[test]
fn oracle_rejects_a_result_two_ulps_off() {
    let prec = Precision::new(16).unwrap();
    let mut o = Oracle::new(256);
    for kind in Elementary::ALL {
        let x = Fpn::new(45_000, -15, prec).unwrap();
        let good = fp_elementary(kind, x, prec).unwrap();
        let want = o.eval(kind, x);
        assert!(o.within_rel(good, &want, prec), "{kind}");
        let sig = good.sig() + if good.sig() > 0 { -2 } else { 2 };
        let bad = Fpn::new(sig, good.exp(), prec).unwrap();
        assert!(!o.within_rel(bad, &want, prec), "{kind} accepted a value two ulps away");
    }
}
