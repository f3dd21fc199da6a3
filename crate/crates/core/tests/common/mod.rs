#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use canheights::canheight::{DynamicalSystem, SystemFile, SystemPoint};
use canheights::elliptic::{CurveQ, PointQ};
use canheights::exact::{rat, Rational};
use canheights::wehler::{SurfacePoint, WehlerSurface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load(name: &str) -> (DynamicalSystem, SystemFile) {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    let file: SystemFile = serde_json::from_str(&text).unwrap();
    (DynamicalSystem::from_file(&file).unwrap(), file)
}

pub fn e3() -> DynamicalSystem {
    load("e3.json").0
}

pub fn wehler_system() -> DynamicalSystem {
    load("wehler.json").0
}

pub fn surface() -> WehlerSurface {
    match load("wehler.json").1 {
        SystemFile::Wehler(w) => WehlerSurface::from_fixture(&w.surface).unwrap(),
        _ => unreachable!(),
    }
}

/// The 100 smallest points of the deterministic fixture set.
pub fn wehler_fixture_points() -> Vec<SurfacePoint> {
    let mut pts = surface().fixture_points(2.5, 6).unwrap();
    pts.sort_by_key(|p| (p.max_digits(), p.clone()));
    pts.truncate(100);
    pts
}

pub fn wandering() -> SurfacePoint {
    SurfacePoint::from_i64([1, 1, 0], [3, -1, -1]).unwrap()
}

/// y² = x³ − x² − 6x.
pub fn e3_curve() -> CurveQ {
    CurveQ::from_i64([0, -1, 0, -6, 0]).unwrap()
}

pub fn e3_torsion() -> Vec<PointQ> {
    let e = e3_curve();
    vec![PointQ::Infinity, e.point_i64(-2, 0).unwrap(), e.point_i64(0, 0).unwrap(), e.point_i64(3, 0).unwrap()]
}

pub fn e3_nontorsion() -> Vec<PointQ> {
    let e = e3_curve();
    [(-1, 2), (-1, -2), (6, 12), (6, -12), (8, 20), (8, -20)].iter().map(|&(x, y)| e.point_i64(x, y).unwrap()).collect()
}

pub fn all_torsion_tuples(count: usize) -> Vec<SystemPoint> {
    let t = e3_torsion();
    let mut out = Vec::new();
    for a in &t {
        for b in &t {
            for c in &t {
                out.push(SystemPoint::Abelian(vec![a.clone(), b.clone(), c.clone()]));
            }
        }
    }
    out.truncate(count);
    out
}

/// Tuples with at least one torsion and at least one nontorsion coordinate.
pub fn mixed_tuples(count: usize, seed: u64) -> Vec<SystemPoint> {
    let t = e3_torsion();
    let n = e3_nontorsion();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let tpos = rng.random_range(0..3);
            let npos = (tpos + rng.random_range(1..3)) % 3;
            let mut v: Vec<PointQ> = (0..3)
                .map(|_| if rng.random_bool(0.5) { t[rng.random_range(0..t.len())].clone() } else { n[rng.random_range(0..n.len())].clone() })
                .collect();
            v[tpos] = t[rng.random_range(0..t.len())].clone();
            v[npos] = n[rng.random_range(0..n.len())].clone();
            SystemPoint::Abelian(v)
        })
        .collect()
}

/// Tuples drawn from all small points, not all torsion.
pub fn e3_tuples(count: usize, seed: u64) -> Vec<SystemPoint> {
    let mut pool = e3_torsion();
    pool.extend(e3_nontorsion());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let v: Vec<PointQ> = (0..3).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
        if v.iter().any(|p| !e3_curve().is_torsion(p)) {
            out.push(SystemPoint::Abelian(v));
        }
    }
    out
}

/// Roots of t³ − 3t − 1, largest first: 2cos(π/9), 2cos(13π/9), 2cos(7π/9)
/// sorted by square.
pub fn companion_roots() -> [f64; 3] {
    let pi = std::f64::consts::PI;
    let mut r = [2.0 * (pi / 9.0).cos(), 2.0 * (7.0 * pi / 9.0).cos(), 2.0 * (13.0 * pi / 9.0).cos()];
    r.sort_by(|a, b| (b * b).partial_cmp(&(a * a)).unwrap());
    r
}

/// Characters of the E³ fixture in closed form: `(r², (r+1)²)` per root.
pub fn character_oracle() -> Vec<[f64; 2]> {
    companion_roots().iter().map(|r| [r * r, (r + 1.0) * (r + 1.0)]).collect()
}

/// λ₁ of `A^{e1} B^{e2}` on NS(E³): the largest squared eigenvalue modulus.
pub fn lambda1_oracle(e: &[i64]) -> f64 {
    companion_roots()
        .iter()
        .map(|r| (r.powi(e[0] as i32) * (r + 1.0).powi(e[1] as i32)).powi(2))
        .fold(0.0, f64::max)
}

/// Multilinear coefficient of `t_1⋯t_n` in `det(Σ t_i M_i)`, by expanding
/// the Leibniz formula over polynomials in `t`.
pub trait Ring: Clone {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl Ring for Rational {
    fn zero() -> Self {
        rat(0)
    }
    fn one() -> Self {
        rat(1)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
}

type Poly<T> = HashMap<Vec<u8>, T>;

fn poly_mul<T: Ring>(a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
    let mut out: Poly<T> = HashMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let c = ca.mul(cb);
            let slot = out.entry(e).or_insert_with(T::zero);
            *slot = slot.add(&c);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(vec![], true)];
    }
    let mut out = Vec::new();
    for (p, even) in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            // inserting at pos moves n−1 past (n−1−pos) elements
            let flips = (n - 1 - pos) % 2 == 1;
            out.push((q, even != flips));
        }
    }
    out
}

pub fn leibniz_top_coefficient<T: Ring>(ms: &[Vec<Vec<T>>]) -> T {
    let n = ms.len();
    let mut total: Poly<T> = HashMap::new();
    for (sigma, even) in permutations(n) {
        let mut prod: Poly<T> = HashMap::new();
        prod.insert(vec![0; n], T::one());
        for (k, &col) in sigma.iter().enumerate() {
            let mut entry: Poly<T> = HashMap::new();
            for (i, m) in ms.iter().enumerate() {
                let mut e = vec![0u8; n];
                e[i] = 1;
                entry.insert(e, m[k][col].clone());
            }
            prod = poly_mul(&prod, &entry);
        }
        for (e, c) in prod {
            let c = if even { c } else { c.neg() };
            let slot = total.entry(e).or_insert_with(T::zero);
            *slot = slot.add(&c);
        }
    }
    total.remove(&vec![1u8; n]).unwrap_or_else(T::zero)
}
