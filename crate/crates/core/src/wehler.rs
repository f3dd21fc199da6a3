//! Wehler K3 surfaces: a (1,1) form and a (2,2) form in P²×P² over Q.
//!
//! Coordinates are kept as primitive integer triples with the first nonzero
//! entry positive. Both forms are scaled to integer coefficients on input.

use std::collections::BTreeMap;

use malachite_base::num::arithmetic::traits::{CheckedSqrt, Lcm};
use malachite_base::num::basic::traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{decimal_digits, fmt_rat, gcd_integers, ln_abs_integer, numerator, parse_rat, Integer, Natural, QMat, Rational};
use crate::tolerance::PERIOD_SEARCH_DIGITS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WehlerError {
    #[error("fiber through the point is degenerate (tangent or contained line)")]
    IndeterminateFiber,
    #[error("point is not on the surface")]
    NotOnSurface,
    #[error("zero vector is not a projective point")]
    ZeroVector,
    #[error("enumeration box has {size} candidates, cap is {cap}")]
    BudgetExceeded { size: u64, cap: u64 },
    #[error("digit budget exceeded at step {step}")]
    DigitBudgetExceeded { step: usize },
    #[error("bad fixture field {field}: {msg}")]
    Fixture { field: String, msg: String },
    #[error("involution index must be 1 or 2, got {0}")]
    BadIndex(u8),
}

/// Quadratic monomials in three variables, in the order used by `Q`.
pub const MONOMIALS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub const ENUMERATION_CAP: u64 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfacePoint {
    pub x: [Integer; 3],
    pub y: [Integer; 3],
}

impl SurfacePoint {
    pub fn new(x: [Integer; 3], y: [Integer; 3]) -> Result<Self, WehlerError> {
        Ok(SurfacePoint { x: normalize(x)?, y: normalize(y)? })
    }

    pub fn from_i64(x: [i64; 3], y: [i64; 3]) -> Result<Self, WehlerError> {
        Self::new(x.map(Integer::from), y.map(Integer::from))
    }

    pub fn max_digits(&self) -> u64 {
        self.x.iter().chain(&self.y).map(decimal_digits).max().unwrap_or(0)
    }

    pub fn to_strings(&self) -> [[String; 3]; 2] {
        [self.x.clone().map(|v| v.to_string()), self.y.clone().map(|v| v.to_string())]
    }
}

impl Serialize for SurfacePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let [x, y] = self.to_strings();
        let mut st = s.serialize_struct("SurfacePoint", 2)?;
        st.serialize_field("x", &x)?;
        st.serialize_field("y", &y)?;
        st.end()
    }
}

/// Primitive representative, first nonzero coordinate positive.
pub fn normalize(v: [Integer; 3]) -> Result<[Integer; 3], WehlerError> {
    let g = gcd_integers(&gcd_integers(&v[0], &v[1]).into(), &v[2]);
    if g == 0u32 {
        return Err(WehlerError::ZeroVector);
    }
    let g = Integer::from(g);
    let neg = v.iter().find(|c| **c != 0u32).map(|c| *c < 0u32).unwrap_or(false);
    Ok(v.map(|c| {
        let q = c / &g;
        if neg { -q } else { q }
    }))
}

fn log_height(v: &[Integer; 3]) -> f64 {
    v.iter().map(ln_abs_integer).fold(0.0f64, |m, h| if h.is_finite() { m.max(h) } else { m })
}

fn dot(a: &[Integer; 3], b: &[Integer; 3]) -> Integer {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

fn cross(a: &[Integer; 3], b: &[Integer; 3]) -> [Integer; 3] {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

fn quad_monomials(v: &[Integer; 3]) -> [Integer; 6] {
    MONOMIALS.map(|(i, j)| &v[i] * &v[j])
}

type M3 = [[Integer; 3]; 3];

fn quad_form(c: &M3, u: &[Integer; 3], v: &[Integer; 3]) -> Integer {
    let mut acc = Integer::ZERO;
    for i in 0..3 {
        if u[i] == 0u32 {
            continue;
        }
        let mut row = Integer::ZERO;
        for j in 0..3 {
            row += &c[i][j] * &v[j];
        }
        acc += &u[i] * row;
    }
    acc
}

/// Fixture file layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WehlerFixture {
    #[serde(rename = "L")]
    pub l: Vec<Vec<String>>,
    /// Keys like `"x0x1*y2y2"`.
    #[serde(rename = "Q")]
    pub q: BTreeMap<String, String>,
    pub base_point: Option<[[i64; 3]; 2]>,
    #[serde(default)]
    pub points: Vec<[[i64; 3]; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WehlerSurface {
    l: [[Integer; 3]; 3],
    q: [[Integer; 6]; 6],
    /// Original rational coefficients, for serialization.
    l_rat: QMat,
    q_rat: QMat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orbit {
    pub points: Vec<SurfacePoint>,
    /// Number of steps actually taken.
    pub m_reached: usize,
    pub stopped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct K3Eigendivisors {
    pub lambda: f64,
    pub characters: [f64; 2],
    /// Coefficients on (D₁, D₂) with intersection 1 against D₁ + D₂.
    pub d_plus: [f64; 2],
    pub d_minus: [f64; 2],
    pub self_intersections: [f64; 2],
    pub d_plus_dot_d_minus: f64,
    pub no_minus_two_classes: bool,
}

pub const GRAM: [[i64; 2]; 2] = [[2, 4], [4, 2]];

fn scale_to_integers(rows: &[Vec<Rational>]) -> Vec<Vec<Integer>> {
    let mut l = Natural::ONE;
    for r in rows.iter().flatten() {
        l = l.lcm(r.denominator_ref());
    }
    let lr = Rational::from(l);
    rows.iter().map(|r| r.iter().map(|c| numerator(&(c * &lr))).collect()).collect()
}

impl WehlerSurface {
    pub fn new(l: QMat, q: QMat) -> Result<Self, WehlerError> {
        let bad = |f: &str, m: &str| WehlerError::Fixture { field: f.into(), msg: m.into() };
        if l.rows() != 3 || l.cols() != 3 {
            return Err(bad("L", "expected 3x3"));
        }
        if q.rows() != 6 || q.cols() != 6 {
            return Err(bad("Q", "expected 6x6"));
        }
        if l.is_zero() || q.is_zero() {
            return Err(bad("L/Q", "form is identically zero"));
        }
        let li = scale_to_integers(&l.to_rows());
        let qi = scale_to_integers(&q.to_rows());
        let arr3 = |r: &Vec<Integer>| [r[0].clone(), r[1].clone(), r[2].clone()];
        let arr6 = |r: &Vec<Integer>| std::array::from_fn(|k| r[k].clone());
        Ok(WehlerSurface {
            l: [arr3(&li[0]), arr3(&li[1]), arr3(&li[2])],
            q: std::array::from_fn(|k| arr6(&qi[k])),
            l_rat: l,
            q_rat: q,
        })
    }

    pub fn from_i64(l: [[i64; 3]; 3], q: [[i64; 6]; 6]) -> Result<Self, WehlerError> {
        Self::new(QMat::from_i64(&l.map(|r| r.to_vec())), QMat::from_i64(&q.map(|r| r.to_vec())))
    }

    pub fn from_fixture(f: &WehlerFixture) -> Result<Self, WehlerError> {
        let bad = |field: String, msg: String| WehlerError::Fixture { field, msg };
        if f.l.len() != 3 || f.l.iter().any(|r| r.len() != 3) {
            return Err(bad("L".into(), "expected 3x3".into()));
        }
        let mut l = QMat::zeros(3, 3);
        for (i, row) in f.l.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                l.set(i, j, parse_rat(s).map_err(|e| bad(format!("L[{i}][{j}]"), e.to_string()))?);
            }
        }
        let mut q = QMat::zeros(6, 6);
        for (key, s) in &f.q {
            let (i, j) = parse_monomial_key(key).ok_or_else(|| bad(format!("Q.{key}"), "expected key like x0x1*y2y2".into()))?;
            q.set(i, j, parse_rat(s).map_err(|e| bad(format!("Q.{key}"), e.to_string()))?);
        }
        Self::new(l, q)
    }

    pub fn to_fixture(&self, base_point: Option<&SurfacePoint>, points: &[SurfacePoint]) -> WehlerFixture {
        let to_i64 = |p: &SurfacePoint| {
            let f = |v: &[Integer; 3]| v.clone().map(|c| i64::try_from(&c).expect("small fixture point"));
            [f(&p.x), f(&p.y)]
        };
        let mut q = BTreeMap::new();
        for i in 0..6 {
            for j in 0..6 {
                let c = self.q_rat.get(i, j);
                if *c != 0u32 {
                    q.insert(monomial_key(i, j), fmt_rat(c));
                }
            }
        }
        WehlerFixture {
            l: self.l_rat.to_rows().iter().map(|r| r.iter().map(fmt_rat).collect()).collect(),
            q,
            base_point: base_point.map(to_i64),
            points: points.iter().map(to_i64).collect(),
        }
    }

    pub fn l_form(&self, x: &[Integer; 3], y: &[Integer; 3]) -> Integer {
        let mut acc = Integer::ZERO;
        for a in 0..3 {
            for b in 0..3 {
                acc += &self.l[a][b] * &x[a] * &y[b];
            }
        }
        acc
    }

    pub fn q_form(&self, x: &[Integer; 3], y: &[Integer; 3]) -> Integer {
        let mx = quad_monomials(x);
        let my = quad_monomials(y);
        let mut acc = Integer::ZERO;
        for a in 0..6 {
            for b in 0..6 {
                acc += &self.q[a][b] * &mx[a] * &my[b];
            }
        }
        acc
    }

    pub fn contains(&self, p: &SurfacePoint) -> bool {
        self.l_form(&p.x, &p.y) == 0u32 && self.q_form(&p.x, &p.y) == 0u32
    }

    /// Twice the symmetric matrix of `Q(x, ·)` when `fixed_x`, else of `Q(·, y)`.
    fn conic(&self, v: &[Integer; 3], fixed_x: bool) -> M3 {
        let m = quad_monomials(v);
        let mut w: [Integer; 6] = std::array::from_fn(|_| Integer::ZERO);
        for (k, wk) in w.iter_mut().enumerate() {
            for (j, mj) in m.iter().enumerate() {
                let c = if fixed_x { &self.q[j][k] } else { &self.q[k][j] };
                *wk += c * mj;
            }
        }
        let mut c: M3 = std::array::from_fn(|_| std::array::from_fn(|_| Integer::ZERO));
        for (k, &(i, j)) in MONOMIALS.iter().enumerate() {
            if i == j {
                c[i][i] = Integer::from(2) * &w[k];
            } else {
                c[i][j] = w[k].clone();
                c[j][i] = w[k].clone();
            }
        }
        c
    }

    /// Line coefficients of `L(x, ·)` (fixed_x) or `L(·, y)`.
    fn line(&self, v: &[Integer; 3], fixed_x: bool) -> [Integer; 3] {
        std::array::from_fn(|k| {
            let mut acc = Integer::ZERO;
            for j in 0..3 {
                acc += if fixed_x { &self.l[j][k] * &v[j] } else { &self.l[k][j] * &v[j] };
            }
            acc
        })
    }

    /// Other point of the fiber line ∩ conic over `pr_which(p)`.
    /// `sigma(p, 1)` keeps `x` and moves `y`.
    pub fn sigma(&self, p: &SurfacePoint, which: u8) -> Result<SurfacePoint, WehlerError> {
        let fixed_x = match which {
            1 => true,
            2 => false,
            k => return Err(WehlerError::BadIndex(k)),
        };
        let (keep, moving) = if fixed_x { (&p.x, &p.y) } else { (&p.y, &p.x) };
        let a = self.line(keep, fixed_x);
        if a.iter().all(|c| *c == 0u32) {
            return Err(WehlerError::IndeterminateFiber);
        }
        let c = self.conic(keep, fixed_x);
        let z = cross(&a, moving);
        let b = quad_form(&c, moving, &z);
        let cc = quad_form(&c, &z, &z);
        if b == 0u32 && cc == 0u32 {
            return Err(WehlerError::IndeterminateFiber);
        }
        let two_b = Integer::from(2) * &b;
        let out: [Integer; 3] = std::array::from_fn(|k| &cc * &moving[k] - &two_b * &z[k]);
        let out = normalize(out)?;
        if fixed_x {
            Ok(SurfacePoint { x: p.x.clone(), y: out })
        } else {
            Ok(SurfacePoint { x: out, y: p.y.clone() })
        }
    }

    /// φ = σ₂∘σ₁.
    pub fn phi(&self, p: &SurfacePoint) -> Result<SurfacePoint, WehlerError> {
        self.sigma(&self.sigma(p, 1)?, 2)
    }

    /// φ⁻¹ = σ₁∘σ₂.
    pub fn phi_inv(&self, p: &SurfacePoint) -> Result<SurfacePoint, WehlerError> {
        self.sigma(&self.sigma(p, 2)?, 1)
    }

    /// Gradient of (L, Q) at p has rank 2.
    pub fn is_smooth_at(&self, p: &SurfacePoint) -> bool {
        let mut rows = vec![vec![Rational::ZERO; 6]; 2];
        let ly = self.line(&p.x, true);
        let lx = self.line(&p.y, false);
        let cx = self.conic(&p.y, false);
        let cy = self.conic(&p.x, true);
        for k in 0..3 {
            rows[0][k] = Rational::from(lx[k].clone());
            rows[0][3 + k] = Rational::from(ly[k].clone());
            let gx: Integer = (0..3).map(|j| &cx[k][j] * &p.x[j]).sum();
            let gy: Integer = (0..3).map(|j| &cy[k][j] * &p.y[j]).sum();
            rows[1][k] = Rational::from(gx);
            rows[1][3 + k] = Rational::from(gy);
        }
        QMat::from_rows(rows).rank() == 2
    }

    /// Iterate φ (or φ⁻¹ when `inverse`) up to `steps` times.
    pub fn orbit(&self, p: &SurfacePoint, steps: usize, inverse: bool, digit_budget: u64) -> Orbit {
        let mut points = vec![p.clone()];
        let mut stopped = None;
        for step in 1..=steps {
            let cur = points.last().unwrap();
            let next = if inverse { self.phi_inv(cur) } else { self.phi(cur) };
            match next {
                Ok(q) if q.max_digits() > digit_budget => {
                    stopped = Some(WehlerError::DigitBudgetExceeded { step }.to_string());
                    break;
                }
                Ok(q) => points.push(q),
                Err(e) => {
                    stopped = Some(e.to_string());
                    break;
                }
            }
        }
        Orbit { m_reached: points.len() - 1, points, stopped }
    }

    /// All points with both coordinate triples in the box `max|·| ≤ floor(exp(bound))`.
    pub fn enumerate_points(&self, height_bound: f64) -> Result<Vec<SurfacePoint>, WehlerError> {
        self.enumerate_points_with_cap(height_bound, ENUMERATION_CAP)
    }

    pub fn enumerate_points_with_cap(&self, height_bound: f64, cap: u64) -> Result<Vec<SurfacePoint>, WehlerError> {
        let b = height_bound.max(0.0).exp().floor() as i64;
        let side = (2 * b + 1) as u64;
        let size = side.saturating_mul(side).saturating_mul(side);
        if size > cap {
            return Err(WehlerError::BudgetExceeded { size, cap });
        }
        let xs = primitive_box(b);
        let bound = Integer::from(b);
        let mut out: Vec<SurfacePoint> = xs
            .par_iter()
            .flat_map_iter(|x| self.points_over_x(x, b, &bound, &xs))
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn points_over_x(&self, x: &[Integer; 3], b: i64, bound: &Integer, ys: &[[Integer; 3]]) -> Vec<SurfacePoint> {
        let in_box = |v: &[Integer; 3]| v.iter().all(|c| Integer::from(c.unsigned_abs_ref().clone()) <= *bound);
        let a = self.line(x, true);
        let c = self.conic(x, true);
        let mk = |y: [Integer; 3]| SurfacePoint { x: x.clone(), y };
        if a.iter().all(|v| *v == 0u32) {
            return ys.iter().filter(|y| quad_form(&c, y, y) == 0u32).map(|y| mk(y.clone())).collect();
        }
        // two independent vectors spanning the line a·y = 0
        let basis: Vec<[Integer; 3]> = (0..3)
            .map(|k| {
                let mut e: [Integer; 3] = std::array::from_fn(|_| Integer::ZERO);
                e[k] = Integer::ONE;
                cross(&a, &e)
            })
            .filter(|v| v.iter().any(|c| *c != 0u32))
            .collect();
        let u = basis[0].clone();
        let v = basis.iter().skip(1).find(|w| cross(&u, w).iter().any(|c| *c != 0u32)).unwrap().clone();
        let alpha = quad_form(&c, &u, &u);
        let beta = Integer::from(2) * quad_form(&c, &u, &v);
        let gamma = quad_form(&c, &v, &v);
        let mut params: Vec<(Integer, Integer)> = Vec::new();
        if alpha == 0u32 && beta == 0u32 && gamma == 0u32 {
            let _ = b;
            return ys
                .iter()
                .filter(|y| dot(&a, y) == 0u32)
                .map(|y| mk(y.clone()))
                .collect();
        }
        if alpha == 0u32 {
            params.push((Integer::ONE, Integer::ZERO));
            if beta != 0u32 {
                params.push((-gamma.clone(), beta.clone()));
            }
        } else {
            let disc = &beta * &beta - Integer::from(4) * &alpha * &gamma;
            if disc < 0u32 {
                return Vec::new();
            }
            let Some(r) = Natural::try_from(disc).unwrap().checked_sqrt() else {
                return Vec::new();
            };
            let r = Integer::from(r);
            let two_a = Integer::from(2) * &alpha;
            params.push((-&beta + &r, two_a.clone()));
            params.push((-&beta - &r, two_a));
        }
        params
            .into_iter()
            .filter_map(|(s, t)| {
                let y: [Integer; 3] = std::array::from_fn(|k| &s * &u[k] + &t * &v[k]);
                let y = normalize(y).ok()?;
                in_box(&y).then(|| mk(y))
            })
            .filter(|p| self.contains(p))
            .collect()
    }

    /// Points returning to themselves under φ within `period_bound` steps.
    pub fn find_periodic(&self, height_bound: f64, period_bound: usize) -> Result<Vec<(SurfacePoint, usize)>, WehlerError> {
        let pts = self.enumerate_points(height_bound)?;
        let mut out: Vec<(SurfacePoint, usize)> = pts
            .par_iter()
            .filter_map(|p| period_of(self, p, period_bound).map(|k| (p.clone(), k)))
            .collect();
        out.sort();
        Ok(out)
    }

    /// Enumerated points plus their images under alternating σ-words of
    /// length ≤ `depth`, sorted. Exceptional fibers end a word early.
    pub fn fixture_points(&self, height_bound: f64, depth: usize) -> Result<Vec<SurfacePoint>, WehlerError> {
        let mut out = std::collections::BTreeSet::new();
        for p in self.enumerate_points(height_bound)? {
            for first in [1u8, 2] {
                let mut cur = p.clone();
                let mut which = first;
                for _ in 0..depth {
                    match self.sigma(&cur, which) {
                        Ok(q) => cur = q,
                        Err(_) => break,
                    }
                    out.insert(cur.clone());
                    which = 3 - which;
                }
            }
            out.insert(p);
        }
        Ok(out.into_iter().collect())
    }

    /// Random surface through `base`: every coefficient but one from {−2..2},
    /// the last one solved so `base` lies on both forms.
    pub fn random_through(seed: u64, base: &SurfacePoint) -> Option<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut l = [[0i64; 3]; 3];
        let mut q = [[0i64; 6]; 6];
        for r in l.iter_mut().flatten() {
            *r = rng.random_range(-2..=2);
        }
        for r in q.iter_mut().flatten() {
            *r = rng.random_range(-2..=2);
        }
        let mut l_q = QMat::from_i64(&l.map(|r| r.to_vec()));
        let mut q_q = QMat::from_i64(&q.map(|r| r.to_vec()));
        let (xi, yi) = (base.x.clone(), base.y.clone());
        let s = WehlerSurface::new(l_q.clone(), q_q.clone()).ok()?;
        // solve one L entry with x_a·y_b ≠ 0
        let (la, lb) = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).find(|&(a, b)| xi[a] != 0u32 && yi[b] != 0u32)?;
        let lval = s.l_form(&xi, &yi);
        let lc = Rational::from(&xi[la] * &yi[lb]);
        l_q.set(la, lb, l_q.get(la, lb) - Rational::from(lval) / lc);
        let mx = quad_monomials(&xi);
        let my = quad_monomials(&yi);
        let (qa, qb) = (0..6).flat_map(|a| (0..6).map(move |b| (a, b))).find(|&(a, b)| mx[a] != 0u32 && my[b] != 0u32)?;
        let qval = s.q_form(&xi, &yi);
        let qc = Rational::from(&mx[qa] * &my[qb]);
        q_q.set(qa, qb, q_q.get(qa, qb) - Rational::from(qval) / qc);
        WehlerSurface::new(l_q, q_q).ok()
    }
}

fn period_of(s: &WehlerSurface, p: &SurfacePoint, period_bound: usize) -> Option<usize> {
    let mut cur = p.clone();
    for k in 1..=period_bound {
        // one step of φ multiplies the digit count by about λ < 16
        if cur.max_digits() * 16 > PERIOD_SEARCH_DIGITS {
            return None;
        }
        cur = s.phi(&cur).ok()?;
        if cur == *p {
            return Some(k);
        }
    }
    None
}

fn primitive_box(b: i64) -> Vec<[Integer; 3]> {
    let mut out = Vec::new();
    for i in -b..=b {
        for j in -b..=b {
            for k in -b..=b {
                let v = [Integer::from(i), Integer::from(j), Integer::from(k)];
                if let Ok(n) = normalize(v.clone()) {
                    if n == v {
                        out.push(v);
                    }
                }
            }
        }
    }
    out
}

pub fn monomial_key(i: usize, j: usize) -> String {
    let (a, b) = MONOMIALS[i];
    let (c, d) = MONOMIALS[j];
    format!("x{a}x{b}*y{c}y{d}")
}

fn parse_monomial_key(key: &str) -> Option<(usize, usize)> {
    (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).find(|&(i, j)| monomial_key(i, j) == key)
}

/// Pullback of σ_which on (D₁, D₂); columns are images.
pub fn ns_action(which: u8) -> Result<QMat, WehlerError> {
    match which {
        1 => Ok(QMat::from_i64(&[vec![1, 4], vec![0, -1]])),
        2 => Ok(QMat::from_i64(&[vec![-1, 0], vec![4, 1]])),
        k => Err(WehlerError::BadIndex(k)),
    }
}

/// φ* = σ₁*·σ₂* for φ = σ₂∘σ₁.
pub fn phi_pullback() -> QMat {
    ns_action(1).unwrap().mul(&ns_action(2).unwrap())
}

pub fn gram() -> QMat {
    QMat::from_i64(&GRAM.map(|r| r.to_vec()))
}

/// a² + 4ab + b² = −1 has no solution mod 3, so there is no (−2)-class.
fn no_minus_two_classes() -> bool {
    (0..3).all(|a: i64| (0..3).all(|b: i64| (a * a + 4 * a * b + b * b + 1).rem_euclid(3) != 0))
}

pub fn eigendivisors_k3() -> K3Eigendivisors {
    let p = phi_pullback();
    let tr = crate::exact::to_f64(&p.trace());
    let det = crate::exact::to_f64(&p.det());
    let disc = (tr * tr - 4.0 * det).sqrt();
    let lam = (tr + disc) / 2.0;
    let lam_inv = det / lam;
    let pf = p.to_f64();
    let eig = |mu: f64| {
        // (φ* − μ) v = 0 from the first row
        let (a, b) = (pf[(0, 0)] - mu, pf[(0, 1)]);
        let v = if b.abs() > a.abs() { [1.0, -a / b] } else { [-b / a, 1.0] };
        let s = 6.0 * (v[0] + v[1]);
        [v[0] / s, v[1] / s]
    };
    let dp = eig(lam);
    let dm = eig(lam_inv);
    let form = |u: [f64; 2], v: [f64; 2]| 2.0 * u[0] * v[0] + 4.0 * (u[0] * v[1] + u[1] * v[0]) + 2.0 * u[1] * v[1];
    K3Eigendivisors {
        lambda: lam,
        characters: [lam, lam_inv],
        d_plus: dp,
        d_minus: dm,
        self_intersections: [form(dp, dp), form(dm, dm)],
        d_plus_dot_d_minus: form(dp, dm),
        no_minus_two_classes: no_minus_two_classes(),
    }
}

/// `a·h(x) + b·h(y)` with h the log of the max coordinate.
pub fn height(p: &SurfacePoint, class: [f64; 2]) -> f64 {
    class[0] * log_height(&p.x) + class[1] * log_height(&p.y)
}

pub fn base_heights(p: &SurfacePoint) -> [f64; 2] {
    [log_height(&p.x), log_height(&p.y)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    pub fn fixture() -> WehlerSurface {
        WehlerSurface::from_i64(
            [[-1, 0, -2], [0, -2, 1], [1, 1, 1]],
            [
                [-1, -2, 1, 0, -4, 1],
                [2, -2, 1, 4, -1, 2],
                [-2, 0, -2, -2, -2, 2],
                [-2, 1, -1, 1, -2, 2],
                [-1, 1, 1, 2, -1, 0],
                [-1, -1, 1, 0, -2, 1],
            ],
        )
        .unwrap()
    }

    #[test]
    fn normalization() {
        let p = SurfacePoint::from_i64([-2, 4, 0], [0, -3, 3]).unwrap();
        assert_eq!(p, SurfacePoint::from_i64([1, -2, 0], [0, 1, -1]).unwrap());
        assert_eq!(SurfacePoint::from_i64([0, 0, 0], [1, 0, 0]), Err(WehlerError::ZeroVector));
    }

    #[test]
    fn base_point_fixed() {
        let s = fixture();
        let p = SurfacePoint::from_i64([1, 0, 0], [0, 1, 0]).unwrap();
        assert!(s.contains(&p));
        assert_eq!(s.sigma(&p, 1).unwrap(), p);
        assert_eq!(s.sigma(&p, 2).unwrap(), p);
    }

    #[test]
    fn sigma_is_involution_on_orbit() {
        let s = fixture();
        let p = SurfacePoint::from_i64([1, 1, 0], [3, -1, -1]).unwrap();
        assert!(s.contains(&p));
        let q = s.sigma(&p, 1).unwrap();
        assert!(s.contains(&q));
        assert_ne!(q, p);
        assert_eq!(s.sigma(&q, 1).unwrap(), p);
        let r = s.sigma(&q, 2).unwrap();
        assert!(s.contains(&r));
        assert_eq!(s.sigma(&r, 2).unwrap(), q);
    }

    #[test]
    fn ns_matrices() {
        let g = gram();
        for k in [1, 2] {
            let m = ns_action(k).unwrap();
            assert_eq!(m.transpose().mul(&g).mul(&m), g);
            assert_eq!(m.mul(&m), QMat::identity(2));
        }
        let p = phi_pullback();
        assert_eq!(p.trace(), rat(14));
        assert_eq!(p.det(), rat(1));
    }

    #[test]
    fn eigendivisors() {
        let e = eigendivisors_k3();
        assert!((e.lambda - (7.0 + 4.0 * 3f64.sqrt())).abs() < 1e-12);
        assert!((e.characters[0] * e.characters[1] - 1.0).abs() < 1e-12);
        assert!(e.self_intersections.iter().all(|v| v.abs() < 1e-12));
        assert!(e.d_plus_dot_d_minus > 0.0);
        assert!(e.no_minus_two_classes);
    }

    #[test]
    fn heights_additive() {
        let p = SurfacePoint::from_i64([1, 5, 0], [3, -1, -7]).unwrap();
        assert_eq!(height(&SurfacePoint::from_i64([1, 0, 0], [0, 1, 0]).unwrap(), [1.0, 1.0]), 0.0);
        let h = height(&p, [1.0, 1.0]);
        assert!((h - height(&p, [1.0, 0.0]) - height(&p, [0.0, 1.0])).abs() < 1e-15);
    }

    #[test]
    fn enumeration_small_box() {
        let s = fixture();
        let pts = s.enumerate_points(0.0).unwrap();
        assert!(pts.contains(&SurfacePoint::from_i64([1, 0, 0], [0, 1, 0]).unwrap()));
        assert!(pts.iter().all(|p| s.contains(p)));
        assert!(s.enumerate_points_with_cap(5.0, 1000).is_err());
    }

    #[test]
    fn random_surface_contains_base() {
        let base = SurfacePoint::from_i64([1, 1, 0], [1, 0, 1]).unwrap();
        for seed in 0..5 {
            if let Some(s) = WehlerSurface::random_through(seed, &base) {
                assert!(s.contains(&base));
            }
        }
    }
}
