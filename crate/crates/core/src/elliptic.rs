//! Exact elliptic-curve arithmetic over Q and Néron–Tate heights.
//!
//! Height convention: `ĥ(P) = lim 4^(−m)·h(x(2^m P))` with no factor 1/2.
//! The tail bound is the observed one-step defect `|h(x(2Q)) − 4h(x(Q))|`,
//! maximized over the computed orbit, times a safety factor of 2.

use std::collections::HashSet;

use malachite_base::num::arithmetic::traits::Lcm;
use malachite_base::num::basic::traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{decimal_digits, fmt_rat, gcd_integers, ln_abs_integer, numerator, parse_rat, rat, Integer, Natural, QMat, Rational};
use crate::tolerance::{DIGIT_BUDGET, TAIL_SAFETY};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("curve is singular (discriminant 0)")]
    Singular,
    #[error("point ({0}, {1}) is not on the curve")]
    NotOnCurve(String, String),
    #[error("the point at infinity has no affine height")]
    InfinityPoint,
    #[error("digit budget exceeded after {} doublings", partial.iters)]
    DigitBudgetExceeded { partial: HeightEstimate },
    #[error("iters must be at least 1")]
    ZeroIters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveQ {
    pub a: [Rational; 5],
    b2: Rational,
    b4: Rational,
    b6: Rational,
    b8: Rational,
    disc: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PointQ {
    Infinity,
    Affine { x: Rational, y: Rational },
}

impl PointQ {
    pub fn is_infinity(&self) -> bool {
        matches!(self, PointQ::Infinity)
    }

    pub fn x(&self) -> Option<&Rational> {
        match self {
            PointQ::Infinity => None,
            PointQ::Affine { x, .. } => Some(x),
        }
    }
}

/// `"O"` or `["x", "y"]` with `"p/q"` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRepr {
    Infinity(String),
    Affine([String; 2]),
}

impl PointRepr {
    pub fn from_point(p: &PointQ) -> Self {
        match p {
            PointQ::Infinity => PointRepr::Infinity("O".into()),
            PointQ::Affine { x, y } => PointRepr::Affine([fmt_rat(x), fmt_rat(y)]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightEstimate {
    pub value: f64,
    pub tail: f64,
    pub iters: u32,
    /// The doubling orbit closed up (hit O or repeated): ĥ is exactly 0.
    pub exact_zero: bool,
    pub max_digits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingGram {
    pub g: Vec<Vec<f64>>,
    pub tail: Vec<Vec<f64>>,
    pub tail_error: f64,
    pub convention: &'static str,
}

pub const HEIGHT_CONVENTION: &str = "hhat = lim 4^-m h(x(2^m P)), no factor 1/2";

impl CurveQ {
    pub fn new(a: [Rational; 5]) -> Result<Self, EllipticError> {
        let [a1, a2, a3, a4, a6] = &a;
        let b2 = a1 * a1 + rat(4) * a2;
        let b4 = rat(2) * a4 + a1 * a3;
        let b6 = a3 * a3 + rat(4) * a6;
        let b8 = a1 * a1 * a6 + rat(4) * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        let disc = -(&b2 * &b2 * &b8) - rat(8) * &b4 * &b4 * &b4 - rat(27) * &b6 * &b6 + rat(9) * &b2 * &b4 * &b6;
        if disc == 0u32 {
            return Err(EllipticError::Singular);
        }
        Ok(CurveQ { a, b2, b4, b6, b8, disc })
    }

    pub fn from_i64(a: [i64; 5]) -> Result<Self, EllipticError> {
        Self::new(a.map(rat))
    }

    pub fn discriminant(&self) -> &Rational {
        &self.disc
    }

    pub fn b_invariants(&self) -> [&Rational; 4] {
        [&self.b2, &self.b4, &self.b6, &self.b8]
    }

    pub fn on_curve(&self, x: &Rational, y: &Rational) -> bool {
        let [a1, a2, a3, a4, a6] = &self.a;
        y * y + a1 * x * y + a3 * y == x * x * x + a2 * x * x + a4 * x + a6
    }

    pub fn point(&self, x: Rational, y: Rational) -> Result<PointQ, EllipticError> {
        if !self.on_curve(&x, &y) {
            return Err(EllipticError::NotOnCurve(fmt_rat(&x), fmt_rat(&y)));
        }
        Ok(PointQ::Affine { x, y })
    }

    pub fn point_i64(&self, x: i64, y: i64) -> Result<PointQ, EllipticError> {
        self.point(rat(x), rat(y))
    }

    pub fn parse_point(&self, r: &PointRepr) -> Result<PointQ, EllipticError> {
        match r {
            PointRepr::Infinity(s) if s.trim().eq_ignore_ascii_case("o") => Ok(PointQ::Infinity),
            PointRepr::Infinity(s) => Err(EllipticError::NotOnCurve(s.clone(), String::new())),
            PointRepr::Affine([xs, ys]) => {
                let bad = || EllipticError::NotOnCurve(xs.clone(), ys.clone());
                let x = parse_rat(xs).map_err(|_| bad())?;
                let y = parse_rat(ys).map_err(|_| bad())?;
                self.point(x, y)
            }
        }
    }

    pub fn negate(&self, p: &PointQ) -> PointQ {
        match p {
            PointQ::Infinity => PointQ::Infinity,
            PointQ::Affine { x, y } => {
                let [a1, _, a3, _, _] = &self.a;
                PointQ::Affine { x: x.clone(), y: -y.clone() - a1 * x - a3 }
            }
        }
    }

    /// Chord-tangent group law.
    pub fn add(&self, p: &PointQ, q: &PointQ) -> PointQ {
        let (x1, y1, x2, y2) = match (p, q) {
            (PointQ::Infinity, _) => return q.clone(),
            (_, PointQ::Infinity) => return p.clone(),
            (PointQ::Affine { x: x1, y: y1 }, PointQ::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let [a1, a2, a3, a4, a6] = &self.a;
        let (lambda, nu) = if x1 == x2 {
            if y1 + y2 + a1 * x2 + a3 == 0u32 {
                return PointQ::Infinity;
            }
            let den = rat(2) * y1 + a1 * x1 + a3;
            let lambda = (rat(3) * x1 * x1 + rat(2) * a2 * x1 + a4 - a1 * y1) / &den;
            let nu = (-(x1 * x1 * x1) + a4 * x1 + rat(2) * a6 - a3 * y1) / &den;
            (lambda, nu)
        } else {
            let den = x2 - x1;
            ((y2 - y1) / &den, (y1 * x2 - y2 * x1) / &den)
        };
        let x3 = &lambda * &lambda + a1 * &lambda - a2 - x1 - x2;
        let y3 = -(&lambda + a1) * &x3 - nu - a3;
        PointQ::Affine { x: x3, y: y3 }
    }

    pub fn sub(&self, p: &PointQ, q: &PointQ) -> PointQ {
        self.add(p, &self.negate(q))
    }

    pub fn double(&self, p: &PointQ) -> PointQ {
        self.add(p, p)
    }

    /// `n·P` by double-and-add.
    pub fn mul(&self, p: &PointQ, n: i64) -> PointQ {
        let base = if n < 0 { self.negate(p) } else { p.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = PointQ::Infinity;
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &b);
            }
            k >>= 1;
            if k > 0 {
                b = self.double(&b);
            }
        }
        acc
    }

    /// `nP = O` for some `n` in {1..10, 12}.
    pub fn is_torsion(&self, p: &PointQ) -> bool {
        let mut q = p.clone();
        for n in 1..=12 {
            if n != 11 && q.is_infinity() {
                return true;
            }
            q = self.add(&q, p);
        }
        false
    }

    /// `log max(|p|, |q|)` for `x = p/q` in lowest terms.
    pub fn naive_height(&self, p: &PointQ) -> Result<f64, EllipticError> {
        let x = p.x().ok_or(EllipticError::InfinityPoint)?;
        Ok(naive_height_of(x))
    }

    /// Integer coefficients of the homogeneous duplication map on `(X:Z)`,
    /// with the resultant of the two forms.
    fn duplication(&self) -> Duplication {
        let num = [Rational::ONE, Rational::ZERO, -self.b4.clone(), rat(-2) * &self.b6, -self.b8.clone()];
        let den = [Rational::ZERO, rat(4), self.b2.clone(), rat(2) * &self.b4, self.b6.clone()];
        let mut l = Natural::ONE;
        for c in num.iter().chain(&den) {
            l = l.lcm(c.denominator_ref());
        }
        let lr = Rational::from(l);
        let np = num.map(|c| numerator(&(c * &lr)));
        let dp = den.map(|c| numerator(&(c * &lr)));
        let mut syl = QMat::zeros(8, 8);
        for r in 0..4 {
            for j in 0..5 {
                syl.set(r, r + j, Rational::from(np[j].clone()));
                syl.set(r + 4, r + j, Rational::from(dp[j].clone()));
            }
        }
        let res = numerator(&syl.det());
        let coef_digits = np.iter().chain(&dp).map(decimal_digits).max().unwrap_or(1);
        Duplication { np, dp, res: Integer::from(gcd_integers(&res, &Integer::ZERO)), coef_digits }
    }

    pub fn neron_tate(&self, p: &PointQ, iters: u32) -> Result<HeightEstimate, EllipticError> {
        self.neron_tate_with_budget(p, iters, DIGIT_BUDGET)
    }

    pub fn neron_tate_with_budget(&self, p: &PointQ, iters: u32, digit_budget: u64) -> Result<HeightEstimate, EllipticError> {
        self.doubling_run(p, iters, digit_budget, false)
    }

    /// Like `neron_tate`, but stops doubling once the next step would exceed
    /// the digit budget. The tail grows accordingly.
    pub fn neron_tate_within_budget(&self, p: &PointQ, iters: u32) -> Result<HeightEstimate, EllipticError> {
        self.doubling_run(p, iters, DIGIT_BUDGET, true)
    }

    fn doubling_run(&self, p: &PointQ, iters: u32, digit_budget: u64, stop_early: bool) -> Result<HeightEstimate, EllipticError> {
        if iters == 0 {
            return Err(EllipticError::ZeroIters);
        }
        let zero = |k: u32| HeightEstimate { value: 0.0, tail: 0.0, iters: k, exact_zero: true, max_digits: 0 };
        let x = match p {
            PointQ::Infinity => return Ok(zero(0)),
            PointQ::Affine { x, .. } => x,
        };
        let dup = self.duplication();
        let mut xz = (numerator(x), Integer::from(x.denominator_ref().clone()));
        let mut seen: HashSet<(Integer, Integer)> = HashSet::new();
        let mut h_prev = height_xz(&xz.0, &xz.1);
        let mut defect: f64 = 0.0;
        let mut max_digits = 0;
        let mut done = iters;
        for k in 1..=iters {
            let cur_digits = decimal_digits(&xz.0).max(decimal_digits(&xz.1));
            if cur_digits < 64 && !seen.insert(xz.clone()) {
                return Ok(zero(k));
            }
            if stop_early && k > 1 && 4 * cur_digits + dup.coef_digits > digit_budget {
                done = k - 1;
                break;
            }
            let next = dup.double(&xz);
            if next.1 == 0u32 {
                return Ok(zero(k));
            }
            let digits = decimal_digits(&next.0).max(decimal_digits(&next.1));
            max_digits = max_digits.max(digits);
            let h = height_xz(&next.0, &next.1);
            defect = defect.max((h - 4.0 * h_prev).abs());
            if digits > digit_budget && !stop_early {
                let scale = 4f64.powi(k as i32);
                return Err(EllipticError::DigitBudgetExceeded {
                    partial: HeightEstimate { value: h / scale, tail: f64::INFINITY, iters: k, exact_zero: false, max_digits },
                });
            }
            h_prev = h;
            xz = next;
        }
        let scale = 4f64.powi(done as i32);
        Ok(HeightEstimate { value: h_prev / scale, tail: TAIL_SAFETY * defect / scale, iters: done, exact_zero: false, max_digits })
    }

    /// `⟨P_a, P_b⟩ = (ĥ(P_a + P_b) − ĥ(P_a) − ĥ(P_b)) / 2`. Entries that would
    /// exceed the digit budget use fewer doublings.
    pub fn pairing_gram(&self, points: &[PointQ], iters: u32) -> Result<PairingGram, EllipticError> {
        let n = points.len();
        let diag: Vec<HeightEstimate> = points.iter().map(|p| self.neron_tate_within_budget(p, iters)).collect::<Result<_, _>>()?;
        let mut g = vec![vec![0.0; n]; n];
        let mut tail = vec![vec![0.0; n]; n];
        for a in 0..n {
            g[a][a] = diag[a].value;
            tail[a][a] = diag[a].tail;
            for b in a + 1..n {
                let s = self.neron_tate_within_budget(&self.add(&points[a], &points[b]), iters)?;
                let v = (s.value - diag[a].value - diag[b].value) / 2.0;
                let t = (s.tail + diag[a].tail + diag[b].tail) / 2.0;
                g[a][b] = v;
                g[b][a] = v;
                tail[a][b] = t;
                tail[b][a] = t;
            }
        }
        let tail_error = tail.iter().flatten().fold(0.0f64, |m, &t| m.max(t));
        Ok(PairingGram { g, tail, tail_error, convention: HEIGHT_CONVENTION })
    }

    /// Integer matrix acting on `E^n`: `(A·P)_a = Σ_b A_ab P_b`.
    pub fn act(&self, a: &QMat, points: &[PointQ]) -> Vec<PointQ> {
        assert_eq!(a.cols(), points.len(), "matrix width must match tuple length");
        assert!(a.is_integral(), "action needs an integer matrix");
        (0..a.rows())
            .map(|i| {
                let mut acc = PointQ::Infinity;
                for (j, p) in points.iter().enumerate() {
                    let c = i64::try_from(&numerator(a.get(i, j))).expect("small matrix entry");
                    if c != 0 {
                        acc = self.add(&acc, &self.mul(p, c));
                    }
                }
                acc
            })
            .collect()
    }
}

pub fn naive_height_of(x: &Rational) -> f64 {
    let p = numerator(x);
    let q = Integer::from(x.denominator_ref().clone());
    height_xz(&p, &q)
}

fn height_xz(x: &Integer, z: &Integer) -> f64 {
    let a = ln_abs_integer(x);
    let b = ln_abs_integer(z);
    let h = a.max(b);
    if h.is_finite() { h.max(0.0) } else { 0.0 }
}

fn eval_binary_quartic(c: &[Integer; 5], x: &Integer, z: &Integer) -> Integer {
    // c0 X^4 + c1 X^3 Z + c2 X^2 Z^2 + c3 X Z^3 + c4 Z^4
    let mut acc = Integer::ZERO;
    let mut xp = vec![Integer::ONE];
    let mut zp = vec![Integer::ONE];
    for i in 1..=4 {
        xp.push(&xp[i - 1] * x);
        zp.push(&zp[i - 1] * z);
    }
    for (i, ci) in c.iter().enumerate() {
        if *ci != 0u32 {
            acc += ci * &xp[4 - i] * &zp[i];
        }
    }
    acc
}

struct Duplication {
    np: [Integer; 5],
    dp: [Integer; 5],
    /// `|Res(N, D)|`; any common factor of `N(X,Z)` and `D(X,Z)` for coprime
    /// `(X, Z)` divides it.
    res: Integer,
    coef_digits: u64,
}

impl Duplication {
    fn double(&self, xz: &(Integer, Integer)) -> (Integer, Integer) {
        let mut x = eval_binary_quartic(&self.np, &xz.0, &xz.1);
        let mut z = eval_binary_quartic(&self.dp, &xz.0, &xz.1);
        if z == 0u32 {
            return (Integer::ONE, Integer::ZERO);
        }
        let g = Integer::from(gcd_integers(&self.res, &Integer::from(gcd_integers(&(&x % &self.res), &(&z % &self.res)))));
        if g > 1u32 {
            x /= &g;
            z /= &g;
        }
        if z < 0u32 {
            x = -x;
            z = -z;
        }
        (x, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn c37() -> CurveQ {
        CurveQ::from_i64([0, 0, 1, -1, 0]).unwrap()
    }

    #[test]
    fn group_identities() {
        let e = c37();
        let p = e.point_i64(0, 0).unwrap();
        assert_eq!(e.add(&p, &PointQ::Infinity), p);
        assert_eq!(e.add(&p, &e.negate(&p)), PointQ::Infinity);
        let q = e.point_i64(1, 0).unwrap();
        let s = e.add(&p, &q);
        let PointQ::Affine { x, y } = &s else { panic!() };
        assert!(e.on_curve(x, y));
    }

    #[test]
    fn naive_heights() {
        assert_eq!(naive_height_of(&rat(0)), 0.0);
        assert!((naive_height_of(&ratio(3, 2)) - 3f64.ln()).abs() < 1e-15);
        assert!((naive_height_of(&ratio(-7, 9)) - 9f64.ln()).abs() < 1e-15);
        assert_eq!(c37().naive_height(&PointQ::Infinity), Err(EllipticError::InfinityPoint));
    }

    #[test]
    fn singular_rejected() {
        assert_eq!(CurveQ::from_i64([0, 0, 0, 0, 0]), Err(EllipticError::Singular));
    }

    #[test]
    fn torsion_on_x3_plus_1() {
        let e = CurveQ::from_i64([0, 0, 0, 0, 1]).unwrap();
        for (x, y) in [(-1, 0), (0, 1), (0, -1), (2, 3), (2, -3)] {
            let p = e.point_i64(x, y).unwrap();
            assert!(e.is_torsion(&p));
            assert!(e.neron_tate(&p, 8).unwrap().exact_zero);
        }
        assert!(e.is_torsion(&PointQ::Infinity));
    }

    #[test]
    fn generator_of_37a_not_torsion() {
        let e = c37();
        let p = e.point_i64(0, 0).unwrap();
        assert!(!e.is_torsion(&p));
        let h = e.neron_tate(&p, 8).unwrap();
        assert!(h.value > 10.0 * h.tail);
    }

    #[test]
    fn budget_reports_partial() {
        let e = c37();
        let p = e.point_i64(0, 0).unwrap();
        match e.neron_tate_with_budget(&p, 8, 50) {
            Err(EllipticError::DigitBudgetExceeded { partial }) => assert!(partial.tail.is_infinite()),
            other => panic!("{other:?}"),
        }
    }
}
