//! Univariate polynomials over Q (ascending coefficient vectors) and their roots.

use malachite_base::num::arithmetic::traits::Lcm;
use malachite_base::num::basic::traits::{One, Zero};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::exact::{numerator, to_f64, Integer, Natural, Rational};

pub fn trim(p: &[Rational]) -> Vec<Rational> {
    let mut v = p.to_vec();
    while v.last().is_some_and(|c| *c == 0u32) {
        v.pop();
    }
    v
}

/// Degree of the trimmed polynomial; the zero polynomial has degree None.
pub fn degree(p: &[Rational]) -> Option<usize> {
    let t = trim(p);
    if t.is_empty() {
        None
    } else {
        Some(t.len() - 1)
    }
}

pub fn eval(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::ZERO;
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn derivative(p: &[Rational]) -> Vec<Rational> {
    p.iter().enumerate().skip(1).map(|(i, c)| c * Rational::from(i as u64)).collect()
}

/// Division with remainder; panics on a zero divisor.
pub fn divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let b = trim(b);
    assert!(!b.is_empty(), "division by zero polynomial");
    let mut r = trim(a);
    if r.len() < b.len() {
        return (vec![], r);
    }
    let db = b.len() - 1;
    let lead = b[db].clone();
    let mut q = vec![Rational::ZERO; r.len() - db];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() / &lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] -= c * &f;
        }
        q[shift] = f;
        r.pop();
        r = trim(&r);
    }
    (q, r)
}

pub fn monic(p: &[Rational]) -> Vec<Rational> {
    let t = trim(p);
    match t.last() {
        None => t,
        Some(l) => {
            let l = l.clone();
            t.iter().map(|c| c / &l).collect()
        }
    }
}

pub fn gcd(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut x = trim(a);
    let mut y = trim(b);
    while !y.is_empty() {
        let (_, r) = divrem(&x, &y);
        x = y;
        y = r;
    }
    monic(&x)
}

/// p / gcd(p, p'), monic.
pub fn squarefree_part(p: &[Rational]) -> Vec<Rational> {
    let t = trim(p);
    if t.len() <= 2 {
        return monic(&t);
    }
    let g = gcd(&t, &derivative(&t));
    monic(&divrem(&t, &g).0)
}

/// Yun's squarefree decomposition: `p = Π f_i^i` with each `f_i` squarefree.
pub fn squarefree_decomposition(p: &[Rational]) -> Vec<(Vec<Rational>, usize)> {
    let f = monic(p);
    if f.len() <= 1 {
        return vec![];
    }
    let df = derivative(&f);
    let a0 = gcd(&f, &df);
    let mut b = divrem(&f, &a0).0;
    let c = divrem(&df, &a0).0;
    let mut d: Vec<Rational> = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while b.len() > 1 {
        let a = gcd(&b, &d);
        let nb = divrem(&b, &a).0;
        let nc = divrem(&d, &a).0;
        if a.len() > 1 {
            out.push((a, i));
        }
        d = sub(&nc, &derivative(&nb));
        b = nb;
        i += 1;
    }
    out
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let z = Rational::ZERO;
    trim(&(0..n).map(|i| a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z)).collect::<Vec<_>>())
}

/// Complex roots repeated according to multiplicity.
pub fn roots_with_multiplicity(p: &[Rational]) -> Vec<Complex64> {
    let mut out = Vec::new();
    for (f, m) in squarefree_decomposition(p) {
        let fl: Vec<f64> = f.iter().map(to_f64).collect();
        for z in roots_f64(&fl) {
            out.extend(std::iter::repeat_n(z, m));
        }
    }
    out
}

/// Scales to a primitive integer polynomial with positive leading coefficient.
pub fn to_primitive_integer(p: &[Rational]) -> Vec<Integer> {
    let t = trim(p);
    let mut l = Natural::ONE;
    for c in &t {
        l = l.lcm(c.denominator_ref());
    }
    let lr = Rational::from(l);
    let mut ints: Vec<Integer> = t.iter().map(|c| numerator(&(c * &lr))).collect();
    let mut g = Natural::ZERO;
    for c in &ints {
        g = crate::exact::gcd_integers(&Integer::from(g.clone()), c);
    }
    if g > 1u32 {
        let gi = Integer::from(g);
        for c in ints.iter_mut() {
            *c = &*c / &gi;
        }
    }
    if ints.last().is_some_and(|c| *c < 0) {
        for c in ints.iter_mut() {
            *c = -c.clone();
        }
    }
    ints
}

fn horner_c(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// All complex roots of a real polynomial (ascending coefficients),
/// via companion eigenvalues followed by Newton polishing.
pub fn roots_f64(p: &[f64]) -> Vec<Complex64> {
    let mut q = p.to_vec();
    while q.last().is_some_and(|c| *c == 0.0) {
        q.pop();
    }
    if q.len() <= 1 {
        return vec![];
    }
    let n = q.len() - 1;
    let lead = q[n];
    let mono: Vec<f64> = q.iter().map(|c| c / lead).collect();
    if n == 1 {
        return vec![Complex64::new(-mono[0], 0.0)];
    }
    let comp = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -mono[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = comp.complex_eigenvalues();
    eig.iter()
        .map(|&z0| {
            let mut z = z0;
            let mut best = horner_c(&mono, z).0.norm();
            for _ in 0..8 {
                let (v, d) = horner_c(&mono, z);
                if d.norm() == 0.0 {
                    break;
                }
                let cand = z - v / d;
                let r = horner_c(&mono, cand).0.norm();
                if r < best {
                    best = r;
                    z = cand;
                } else {
                    break;
                }
            }
            if z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) {
                z.im = 0.0;
            }
            z
        })
        .collect()
}

fn small_divisors(n: &Integer) -> Option<Vec<u64>> {
    let v = u64::try_from(&n.unsigned_abs_ref().clone()).ok()?;
    if v == 0 || v > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= v {
        if v % d == 0 {
            out.push(d);
            if d * d != v {
                out.push(v / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    Some(out)
}

/// Roots of a rational polynomial: float roots of the squarefree part, and the
/// subset that is exactly rational.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub rational: Vec<Rational>,
}

pub fn roots_exact(p: &[Rational]) -> RootSet {
    let sf = squarefree_part(p);
    if sf.len() <= 1 {
        return RootSet { roots: vec![], rational: vec![] };
    }
    let fl: Vec<f64> = sf.iter().map(to_f64).collect();
    let roots = roots_f64(&fl);
    let ints = to_primitive_integer(&sf);
    let mut rational: Vec<Rational> = Vec::new();
    if let Some(divs) = small_divisors(ints.last().unwrap()) {
        for z in &roots {
            if z.im != 0.0 || !z.re.is_finite() {
                continue;
            }
            for &q in &divs {
                let pnum = (z.re * q as f64).round();
                if (pnum - z.re * q as f64).abs() > 1e-6 * (1.0 + pnum.abs()) {
                    continue;
                }
                let cand = Rational::from_integers(
                    Integer::from(pnum as i64),
                    Integer::from(q),
                );
                if eval(&sf, &cand) == 0u32 && !rational.contains(&cand) {
                    rational.push(cand);
                    break;
                }
            }
        }
    }
    rational.sort();
    RootSet { roots, rational }
}

/// Maximum root modulus, with the exact value when a rational root attains it.
pub fn max_modulus(p: &[Rational]) -> (f64, Option<Rational>) {
    let rs = roots_exact(p);
    let m = rs.roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let exact = rs
        .rational
        .iter()
        .filter(|r| (to_f64(&crate::exact::abs_rat(r)) - m).abs() <= 1e-9 * m.max(1.0))
        .max()
        .cloned();
    match exact {
        Some(e) => {
            let a = crate::exact::abs_rat(&e);
            (to_f64(&a), Some(a))
        }
        None => (m, None),
    }
}

/// Minimal linear recurrence of a sequence over Q (Berlekamp–Massey).
/// Returns the monic characteristic polynomial, ascending.
pub fn berlekamp_massey(s: &[Rational]) -> Vec<Rational> {
    let mut c: Vec<Rational> = vec![Rational::ONE];
    let mut b: Vec<Rational> = vec![Rational::ONE];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut bd = Rational::ONE;
    for n in 0..s.len() {
        let mut d = s[n].clone();
        for i in 1..=l {
            if i < c.len() {
                d += &c[i] * &s[n - i];
            }
        }
        if d == 0u32 {
            m += 1;
            continue;
        }
        let coef = &d / &bd;
        let t = c.clone();
        if c.len() < b.len() + m {
            c.resize(b.len() + m, Rational::ZERO);
        }
        for (i, bi) in b.iter().enumerate() {
            c[i + m] -= &coef * bi;
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = t;
            bd = d;
            m = 1;
        } else {
            m += 1;
        }
    }
    c.resize(l + 1, Rational::ZERO);
    // connection polynomial 1 + c1 x + ... + cl x^l  ->  x^l + c1 x^(l-1) + ... + cl
    c.into_iter().rev().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, ratio};

    #[test]
    fn squarefree_removes_repeats() {
        // (t-2)^2 (t+1)
        let p = vec![rat(4), rat(0), rat(-3), rat(1)];
        assert_eq!(squarefree_part(&p), vec![rat(-2), rat(-1), rat(1)]);
    }

    #[test]
    fn multiplicities_kept() {
        // (t-1)^3 (t+2)
        let p = vec![rat(-2), rat(5), rat(-3), rat(-1), rat(1)];
        let dec = squarefree_decomposition(&p);
        assert_eq!(dec, vec![(vec![rat(2), rat(1)], 1), (vec![rat(-1), rat(1)], 3)]);
        assert_eq!(roots_with_multiplicity(&p).len(), 4);
    }

    #[test]
    fn rational_roots_found() {
        // (2t-1)(t+3)(t^2+1)
        let p = vec![rat(-3), rat(5), rat(-1), rat(5), rat(2)];
        let rs = roots_exact(&p);
        assert_eq!(rs.rational, vec![rat(-3), ratio(1, 2)]);
        assert_eq!(rs.roots.len(), 4);
    }

    #[test]
    fn max_modulus_golden() {
        let p = vec![rat(1), rat(-3), rat(1)];
        let (m, e) = max_modulus(&p);
        assert!((m - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-13);
        assert!(e.is_none());
    }

    #[test]
    fn bm_fibonacci() {
        let mut s = vec![rat(0), rat(1)];
        for i in 2..12 {
            let v = &s[i - 1] + &s[i - 2];
            s.push(v);
        }
        assert_eq!(berlekamp_massey(&s), vec![rat(-1), rat(-1), rat(1)]);
    }

    #[test]
    fn bm_geometric_mixture() {
        let s: Vec<Rational> = (0..10).map(|m| rat(3i64.pow(m) + 2 * (-1i64).pow(m))).collect();
        // (t-3)(t+1) = t^2 - 2t - 3
        assert_eq!(berlekamp_massey(&s), vec![rat(-3), rat(-2), rat(1)]);
    }
}
