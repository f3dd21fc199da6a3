use canheights::elliptic::{CurveQ, PointQ};
use proptest::prelude::*;

fn c389() -> CurveQ {
    CurveQ::from_i64([0, 1, 1, -2, 0]).unwrap()
}

fn combo(e: &CurveQ, a: i64, b: i64) -> PointQ {
    let p = e.point_i64(-1, 1).unwrap();
    let q = e.point_i64(0, 0).unwrap();
    e.add(&e.mul(&p, a), &e.mul(&q, b))
}

fn on_curve(e: &CurveQ, p: &PointQ) -> bool {
    match p {
        PointQ::Infinity => true,
        PointQ::Affine { x, y } => e.on_curve(x, y),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_law(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, d in -3i64..=3, f in -3i64..=3, g in -3i64..=3) {
        let e = c389();
        let (p, q, r) = (combo(&e, a, b), combo(&e, c, d), combo(&e, f, g));
        prop_assert!(on_curve(&e, &p) && on_curve(&e, &q));
        prop_assert_eq!(e.add(&p, &q), e.add(&q, &p));
        prop_assert_eq!(e.add(&e.add(&p, &q), &r), e.add(&p, &e.add(&q, &r)));
        prop_assert_eq!(e.add(&p, &e.negate(&p)), PointQ::Infinity);
        prop_assert_eq!(e.add(&p, &q), combo(&e, a + c, b + d));
    }

    #[test]
    fn heights_are_quadratic_and_nonnegative(a in -3i64..=3, b in -3i64..=3) {
        let e = c389();
        let p = combo(&e, a, b);
        let h = e.neron_tate(&p, 7).unwrap();
        prop_assert!(h.value >= -h.tail);
        prop_assert_eq!(h.value == 0.0, a == 0 && b == 0);
        let h2 = e.neron_tate(&e.double(&p), 7).unwrap();
        prop_assert!((h2.value - 4.0 * h.value).abs() <= h2.tail + 4.0 * h.tail + 1e-12);
    }
}

#[test]
fn budgeted_height_uses_fewer_doublings() {
    let e = CurveQ::from_i64([0, 0, 1, -1, 0]).unwrap();
    let big = e.mul(&e.point_i64(0, 0).unwrap(), 60);
    assert!(e.neron_tate(&big, 8).is_err());
    let h = e.neron_tate_within_budget(&big, 8).unwrap();
    assert!(h.iters < 8 && h.iters >= 1);
    let expect = 3600.0 * 0.0511114082399688;
    assert!((h.value - expect).abs() <= h.tail, "{} vs {expect} (tail {})", h.value, h.tail);
}

#[test]
fn torsion_heights_vanish_exactly() {
    let e = CurveQ::from_i64([0, -1, 0, -6, 0]).unwrap();
    for (x, y) in [(-2, 0), (0, 0), (3, 0)] {
        let h = e.neron_tate(&e.point_i64(x, y).unwrap(), 8).unwrap();
        assert!(h.exact_zero);
        assert_eq!(h.value, 0.0);
    }
}
