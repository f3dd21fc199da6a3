use canheights::character_lattice::box_words;
use canheights::exact::{rat, ratio, QMat, Rational};
use canheights::ns_abelian::{intersection_number, mixed_discriminant, mixed_discriminant_polarization};
use canheights::poly::{berlekamp_massey, eval};
use proptest::prelude::*;

fn small_matrix(n: usize) -> impl Strategy<Value = QMat> {
    proptest::collection::vec(-5i64..=5, n * n).prop_map(move |v| {
        let rows: Vec<Vec<i64>> = v.chunks(n).map(|c| c.to_vec()).collect();
        QMat::from_i64(&rows)
    })
}

fn small_symmetric() -> impl Strategy<Value = Vec<Vec<Rational>>> {
    proptest::collection::vec((-9i64..=9, 1i64..=5), 6).prop_map(|v| {
        let mut m = vec![vec![rat(0); 3]; 3];
        let mut it = v.into_iter();
        for i in 0..3 {
            for j in i..3 {
                let (p, q) = it.next().unwrap();
                m[i][j] = ratio(p, q);
                m[j][i] = ratio(p, q);
            }
        }
        m
    })
}

/// `p(M)` by Horner's rule, coefficients ascending.
fn eval_matrix_poly(p: &[Rational], m: &QMat) -> QMat {
    let n = m.rows();
    let mut acc = QMat::zeros(n, n);
    for c in p.iter().rev() {
        acc = acc.mul(m).add(&QMat::identity(n).scale(c));
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn det_is_multiplicative(a in small_matrix(3), b in small_matrix(3)) {
        prop_assert_eq!(a.mul(&b).det(), a.det() * b.det());
    }

    #[test]
    fn cayley_hamilton(a in small_matrix(4)) {
        prop_assert!(eval_matrix_poly(&a.charpoly(), &a).is_zero());
    }

    #[test]
    fn inverse_roundtrip(a in small_matrix(3)) {
        if let Some(inv) = a.inverse() {
            prop_assert_eq!(a.mul(&inv), QMat::identity(3));
        } else {
            prop_assert_eq!(a.det(), rat(0));
        }
    }

    #[test]
    fn berlekamp_massey_recovers_recurrence(c in proptest::collection::vec(-3i64..=3, 1..=3), init in proptest::collection::vec(-4i64..=4, 3)) {
        // s_n = c_1 s_{n-1} + ... + c_d s_{n-d}
        let d = c.len();
        let mut s: Vec<Rational> = init[..d].iter().map(|&v| rat(v)).collect();
        for n in d..4 * d + 6 {
            let v = (0..d).fold(rat(0), |acc, k| acc + rat(c[k]) * &s[n - 1 - k]);
            s.push(v);
        }
        let p = berlekamp_massey(&s);
        prop_assert!(p.len() - 1 <= d);
        prop_assert_eq!(p.last().cloned(), Some(rat(1)));
        let l = p.len() - 1;
        for n in l..s.len() {
            let v = (0..=l).fold(rat(0), |acc, k| acc + &p[k] * &s[n - l + k]);
            prop_assert_eq!(v, rat(0));
        }
    }

    #[test]
    fn intersection_number_is_symmetric(a in small_symmetric(), b in small_symmetric(), c in small_symmetric()) {
        let abc = intersection_number(&[a.clone(), b.clone(), c.clone()]).unwrap();
        prop_assert_eq!(&abc, &intersection_number(&[b.clone(), c.clone(), a.clone()]).unwrap());
        prop_assert_eq!(&abc, &intersection_number(&[c.clone(), b.clone(), a.clone()]).unwrap());
        prop_assert_eq!(mixed_discriminant(&[a.clone(), b.clone(), c.clone()]).unwrap(), mixed_discriminant_polarization(&[a, b, c]).unwrap());
    }

    #[test]
    fn mixed_discriminant_on_diagonal_is_determinant(a in small_symmetric()) {
        let d = mixed_discriminant(&[a.clone(), a.clone(), a.clone()]).unwrap();
        let m = QMat::from_rows(a);
        prop_assert_eq!(d, m.det());
    }

    #[test]
    fn box_words_count(r in 1usize..=3, b in 0i64..=3) {
        let words: Vec<_> = box_words(r, b).collect();
        prop_assert_eq!(words.len() as i64, (2 * b + 1).pow(r as u32));
        prop_assert!(words.iter().all(|w| w.linf() <= b));
        let mut sorted = words.clone();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), words.len());
    }
}

#[test]
fn polynomial_eval_at_root() {
    // (t − 2)(t + 3) = t² + t − 6
    let p = [rat(-6), rat(1), rat(1)];
    assert_eq!(eval(&p, &rat(2)), rat(0));
    assert_eq!(eval(&p, &rat(-3)), rat(0));
}
