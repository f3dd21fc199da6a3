//! Néron–Severi model of `E^n`: symmetric matrices as divisor classes, the
//! congruence pullback `M ↦ AᵀMA`, mixed discriminants as intersection
//! numbers, weak numerical triviality, and eigendivisor certificates.
//!
//! Normalization: `intersection_number = n!·mixed_discriminant`, so the
//! identity class has top self-intersection `n!`.

use malachite_base::num::basic::traits::{One, Zero};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::character_lattice::{box_words, GroupWord, LogCharacterMatrix};
use crate::cone_engine::{common_eigenvectors, CommutingFamily, ConeError, ConeMap, ConeSpec, Character};
use crate::exact::{rat, to_f64, QMat, Rational};
use crate::linalg::min_sym_eigenvalue;
use crate::poly;
use crate::tolerance::{REL, UNIT_MODULUS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("automorphism {0} is not an integer matrix with |det| = 1")]
    NotUnimodular(String),
    #[error("automorphisms {0} and {1} do not commute")]
    NotCommuting(String, String),
    #[error("word {0:?} has an eigenvalue of modulus 1")]
    EntropyCheckFailed(Vec<i64>),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Scalars the intersection calculus runs over: exact rationals or floats.
pub trait Field: Clone + PartialEq + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn magnitude(&self) -> f64;
    /// Exact zero for rationals; `|x| <= tol` for floats.
    fn negligible(&self, tol: f64) -> bool;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

impl Field for Rational {
    fn zero() -> Self {
        Rational::ZERO
    }
    fn one() -> Self {
        Rational::ONE
    }
    fn from_i64(v: i64) -> Self {
        rat(v)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> f64 {
        to_f64(self).abs()
    }
    fn negligible(&self, _tol: f64) -> bool {
        *self == 0u32
    }
}

/// Square matrix as rows.
pub type Sq<T> = Vec<Vec<T>>;

pub fn det<T: Field>(m: &Sq<T>) -> T {
    let n = m.len();
    let mut a = m.clone();
    let mut d = T::one();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].magnitude().partial_cmp(&a[j][c].magnitude()).unwrap()).unwrap();
        if a[p][c].magnitude() == 0.0 && a[p][c].negligible(0.0) {
            return T::zero();
        }
        if p != c {
            a.swap(p, c);
            d = T::zero().sub(&d);
        }
        let piv = a[c][c].clone();
        d = d.mul(&piv);
        for r in c + 1..n {
            let f = a[r][c].div(&piv);
            if f.negligible(0.0) {
                continue;
            }
            for k in c..n {
                let v = a[c][k].mul(&f);
                a[r][k] = a[r][k].sub(&v);
            }
        }
    }
    d
}

fn check_shapes<T: Field>(ms: &[Sq<T>], n: usize) -> Result<(), NsError> {
    for m in ms {
        if m.len() != n || m.iter().any(|r| r.len() != n) {
            return Err(NsError::DimensionMismatch(format!("expected {n}x{n} matrices")));
        }
        for i in 0..n {
            for j in 0..i {
                let diff = m[i][j].sub(&m[j][i]);
                if !diff.negligible(1e-12 * (1.0 + m[i][j].magnitude())) {
                    return Err(NsError::NotSymmetric);
                }
            }
        }
    }
    Ok(())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(p.clone());
            return;
        }
        heap(k - 1, p, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
            heap(k - 1, p, out);
        }
    }
    heap(n, &mut p, &mut out);
    out
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// `n!·D(M_1,…,M_n)`: the coefficient of `t_1⋯t_n` in `det(Σ t_i M_i)`,
/// summed over column assignments.
pub fn intersection_number<T: Field>(ms: &[Sq<T>]) -> Result<T, NsError> {
    let n = ms.len();
    check_shapes(ms, n)?;
    let mut total = T::zero();
    for sigma in permutations(n) {
        let mixed: Sq<T> = (0..n).map(|i| (0..n).map(|k| ms[sigma[k]][i][k].clone()).collect()).collect();
        total = total.add(&det(&mixed));
    }
    Ok(total)
}

/// Mixed discriminant `D(M_1,…,M_n)`.
pub fn mixed_discriminant<T: Field>(ms: &[Sq<T>]) -> Result<T, NsError> {
    let n = ms.len();
    Ok(intersection_number(ms)?.div(&T::from_i64(factorial(n))))
}

/// Mixed discriminant by inclusion–exclusion over subset sums.
pub fn mixed_discriminant_polarization<T: Field>(ms: &[Sq<T>]) -> Result<T, NsError> {
    let n = ms.len();
    check_shapes(ms, n)?;
    let mut total = T::zero();
    for mask in 1u32..(1u32 << n) {
        let mut s: Sq<T> = vec![vec![T::zero(); n]; n];
        for (k, m) in ms.iter().enumerate() {
            if mask & (1 << k) != 0 {
                for i in 0..n {
                    for j in 0..n {
                        s[i][j] = s[i][j].add(&m[i][j]);
                    }
                }
            }
        }
        let d = det(&s);
        if (n - mask.count_ones() as usize) % 2 == 0 {
            total = total.add(&d);
        } else {
            total = total.sub(&d);
        }
    }
    Ok(total.div(&T::from_i64(factorial(n))))
}

/// `E_ii` and `E_ij + E_ji`: a basis of symmetric `n×n` matrices.
pub fn symmetric_basis<T: Field>(n: usize) -> Vec<Sq<T>> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut m = vec![vec![T::zero(); n]; n];
            m[i][j] = T::one();
            m[j][i] = T::one();
            out.push(m);
        }
    }
    out
}

fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for mut rest in multisets(n - first, k - 1) {
            rest.iter_mut().for_each(|x| *x += first);
            let mut v = vec![first];
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// True iff the product with every tuple of complementary classes vanishes;
/// by multilinearity it suffices to test the symmetric basis.
pub fn is_weakly_numerically_trivial<T: Field>(partial: &[Sq<T>], n: usize) -> Result<bool, NsError> {
    let codim = partial.len();
    if codim > n {
        return Err(NsError::DimensionMismatch(format!("{codim} classes on a {n}-fold")));
    }
    check_shapes(partial, n)?;
    let basis = symmetric_basis::<T>(n);
    let scale = partial.iter().flatten().flatten().fold(1.0f64, |a, x| a.max(x.magnitude()));
    let tol = 1e-9 * scale.powi(codim as i32);
    for ms in multisets(basis.len(), n - codim) {
        let mut all: Vec<Sq<T>> = partial.to_vec();
        all.extend(ms.iter().map(|&k| basis[k].clone()));
        if !intersection_number(&all)?.negligible(tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn qmat_to_sq(m: &QMat) -> Sq<Rational> {
    m.to_rows()
}

pub fn dmat_to_sq(m: &DMatrix<f64>) -> Sq<f64> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Integer matrix with `|det| = 1`; pulls classes back by `M ↦ AᵀMA`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoAction {
    label: String,
    a: QMat,
}

impl AutoAction {
    pub fn new(label: impl Into<String>, a: QMat) -> Result<Self, NsError> {
        let label = label.into();
        if !a.is_square() || !a.is_integral() || crate::exact::abs_rat(&a.det()) != 1u32 {
            return Err(NsError::NotUnimodular(label));
        }
        Ok(AutoAction { label, a })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &QMat {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn pullback(&self, m: &QMat) -> QMat {
        self.a.transpose().mul(m).mul(&self.a)
    }

    pub fn pullback_f64(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let a = self.a.to_f64();
        a.transpose() * m * a
    }
}

/// `Π A_j^{e_j}` for commuting unimodular matrices.
pub fn word_matrix(gens: &[AutoAction], w: &GroupWord) -> QMat {
    let n = gens.first().map_or(0, |g| g.dim());
    let mut acc = QMat::identity(n);
    for (g, &e) in gens.iter().zip(&w.exponents) {
        if e == 0 {
            continue;
        }
        let base = if e > 0 { g.a.clone() } else { g.a.inverse().expect("unimodular") };
        acc = acc.mul(&base.pow(e.unsigned_abs() as u32));
    }
    acc
}

fn eigen_moduli(a: &QMat) -> Vec<f64> {
    let mut m: Vec<f64> = poly::roots_with_multiplicity(&a.charpoly()).iter().map(|z| z.norm()).collect();
    m.sort_by(|x, y| y.partial_cmp(x).unwrap());
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NsCertificates {
    pub n_characters: usize,
    pub maximal: bool,
    pub distinct: bool,
    pub d_min_eigenvalue: f64,
    pub d_positive_definite: bool,
    /// `D_1⋯D_n` under the `n!·D` normalization.
    pub intersection_number: f64,
    /// `det[w_1 … w_n]²` for the unit root vectors.
    pub det_v_squared: f64,
    pub entropy_words_checked: usize,
    /// `|det|` of the leading `(n−1)×(n−1)` block of the log embedding.
    pub regulator: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigendivisorSystem {
    pub labels: Vec<String>,
    pub characters: Vec<Character>,
    /// `D_i = w_i w_iᵀ` with unit trace.
    pub divisors: Vec<Vec<Vec<f64>>>,
    pub d: Vec<Vec<f64>>,
    pub certificates: NsCertificates,
}

impl EigendivisorSystem {
    pub fn log_matrix(&self) -> LogCharacterMatrix {
        LogCharacterMatrix::from_characters(&self.characters, self.labels.clone()).expect("positive characters")
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Root vectors `w_i` with `A_jᵀ w_i = μ_ij w_i`.
    pub fn roots(&self) -> Vec<Vec<f64>> {
        self.characters.iter().map(|c| c.root.as_ref().expect("rank-one character").w.clone()).collect()
    }
}

/// Words in the box `‖e‖∞ <= 3` with an eigenvalue of modulus 1 fail.
pub fn entropy_check(gens: &[AutoAction], bound: i64) -> Result<usize, NsError> {
    let mut checked = 0;
    for w in box_words(gens.len(), bound) {
        if w.is_identity() {
            continue;
        }
        let m = word_matrix(gens, &w);
        if eigen_moduli(&m).iter().any(|&x| (x - 1.0).abs() <= UNIT_MODULUS) {
            return Err(NsError::EntropyCheckFailed(w.exponents));
        }
        checked += 1;
    }
    Ok(checked)
}

/// Common eigendivisors of a commuting family of unimodular actions, computed
/// on the psd cone, with nef/big/ample certificates.
pub fn eigendivisor_system(family: &[AutoAction]) -> Result<EigendivisorSystem, NsError> {
    let n = family.first().map_or(0, |g| g.dim());
    if family.iter().any(|g| g.dim() != n) || n == 0 {
        return Err(NsError::DimensionMismatch("generators of different sizes".into()));
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if family[i].a.mul(&family[j].a) != family[j].a.mul(&family[i].a) {
                return Err(NsError::NotCommuting(family[i].label.clone(), family[j].label.clone()));
            }
        }
    }
    let checked = entropy_check(family, 3)?;
    let labels: Vec<String> = family.iter().map(|g| g.label.clone()).collect();
    let maps = family.iter().map(|g| ConeMap::congruence_exact(g.a.clone())).collect();
    let fam = CommutingFamily::new(maps, labels.clone())?;
    let chars = common_eigenvectors(&fam, &ConeSpec::psd(n), REL)?;
    let roots: Vec<DVector<f64>> = chars
        .iter()
        .filter_map(|c| c.root.as_ref().map(|r| DVector::from_vec(r.w.clone())))
        .collect();
    let divisors: Vec<DMatrix<f64>> = roots.iter().map(|w| w * w.transpose()).collect();
    let mut d = DMatrix::zeros(n, n);
    for di in &divisors {
        d += di;
    }
    let d_min = min_sym_eigenvalue(&d);
    let maximal = chars.len() == n && roots.len() == n;
    let (inter, detv2) = if maximal {
        let sq: Vec<Sq<f64>> = divisors.iter().map(dmat_to_sq).collect();
        let v = DMatrix::from_columns(&roots);
        (intersection_number(&sq)?, v.determinant().powi(2))
    } else {
        (0.0, 0.0)
    };
    let report = crate::cone_engine::character_structure_report(&chars, &fam);
    let regulator = if chars.len() == n && family.len() == n - 1 && n >= 2 {
        let l = LogCharacterMatrix::from_characters(&chars, labels.clone()).ok();
        l.map(|l| l.matrix().clone().remove_row(n - 1).determinant().abs())
    } else {
        None
    };
    Ok(EigendivisorSystem {
        labels,
        characters: chars,
        divisors: divisors.iter().map(dmat_to_sq).collect(),
        d: dmat_to_sq(&d),
        certificates: NsCertificates {
            n_characters: roots.len(),
            maximal,
            distinct: report.distinct,
            d_min_eigenvalue: d_min,
            d_positive_definite: d_min >= 1e-9,
            intersection_number: inter,
            det_v_squared: detv2,
            entropy_words_checked: checked,
            regulator,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeProfile {
    /// Products of the top-k squared eigenvalue moduli.
    pub spectral: Vec<f64>,
    /// Growth rates of `(A^m)*H^k · H^{n−k}` from the exact sequence.
    pub limit: Vec<f64>,
    pub recurrence_orders: Vec<usize>,
    pub terms_used: Vec<usize>,
    pub agree: bool,
    pub log_concave: bool,
}

fn growth_rate(seq: &[Rational]) -> Option<(f64, usize)> {
    let cp = poly::berlekamp_massey(seq);
    let order = cp.len() - 1;
    if 2 * order + 2 > seq.len() {
        return None;
    }
    if order == 0 {
        return Some((0.0, 0));
    }
    Some((poly::max_modulus(&cp).0, order))
}

/// Dynamical degrees `λ_0..λ_n` by eigenvalue moduli and, independently, by
/// the minimal linear recurrence of the exact intersection sequence with
/// `H = I` and `W_m = (A^m)ᵀA^m`, starting from `m <= 20` and extending the
/// sequence until the recurrence is certified by at least twice its order.
pub fn dynamical_degree_profile(a: &AutoAction) -> DegreeProfile {
    let n = a.dim();
    let moduli = eigen_moduli(&a.a);
    let spectral: Vec<f64> = (0..=n).map(|k| moduli[..k].iter().map(|m| m * m).product()).collect();
    let id = qmat_to_sq(&QMat::identity(n));
    let mut limit = Vec::with_capacity(n + 1);
    let mut orders = Vec::with_capacity(n + 1);
    let mut used = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut terms = 21usize;
        let mut powers: Vec<QMat> = vec![QMat::identity(n)];
        loop {
            while powers.len() < terms {
                let next = powers.last().unwrap().mul(&a.a);
                powers.push(next);
            }
            let seq: Vec<Rational> = powers[..terms]
                .iter()
                .map(|p| {
                    let w = qmat_to_sq(&p.transpose().mul(p));
                    let mut ms = vec![w; k];
                    ms.extend(std::iter::repeat_n(id.clone(), n - k));
                    intersection_number(&ms).expect("square symmetric")
                })
                .collect();
            if let Some((g, ord)) = growth_rate(&seq) {
                limit.push(g);
                orders.push(ord);
                used.push(terms);
                break;
            }
            if terms >= 321 {
                let last = to_f64(&seq[terms - 1]).abs();
                let prev = to_f64(&seq[terms - 2]).abs();
                limit.push(last / prev);
                orders.push(0);
                used.push(terms);
                break;
            }
            terms = 2 * terms - 1;
        }
    }
    let agree = spectral.iter().zip(&limit).all(|(s, l)| (s - l).abs() <= 1e-6 * s.max(1.0));
    let log_concave = (1..n).all(|k| spectral[k] * spectral[k] >= spectral[k - 1] * spectral[k + 1] * (1.0 - 1e-12));
    DegreeProfile { spectral, limit, recurrence_orders: orders, terms_used: used, agree, log_concave }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn diag(v: &[i64]) -> Sq<Rational> {
        let n = v.len();
        (0..n).map(|i| (0..n).map(|j| if i == j { rat(v[i]) } else { rat(0) }).collect()).collect()
    }

    fn rank_one(v: &[i64]) -> Sq<Rational> {
        v.iter().map(|a| v.iter().map(|b| rat(a * b)).collect()).collect()
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(mixed_discriminant(&vec![diag(&[1, 1, 1]); 3]).unwrap(), rat(1));
        assert_eq!(mixed_discriminant(&vec![diag(&[1, 2, 3]); 3]).unwrap(), rat(6));
    }

    #[test]
    fn rank_one_triple() {
        let ms = vec![rank_one(&[1, 0, 0]), rank_one(&[0, 1, 0]), rank_one(&[1, 1, 1])];
        assert_eq!(mixed_discriminant(&ms).unwrap(), ratio(1, 6));
        assert_eq!(mixed_discriminant_polarization(&ms).unwrap(), ratio(1, 6));
    }

    #[test]
    fn weak_triviality_examples() {
        assert!(!is_weakly_numerically_trivial(&[diag(&[1, -1])], 2).unwrap());
        assert!(is_weakly_numerically_trivial(&[diag(&[0, 0])], 2).unwrap());
        let p = vec![rank_one(&[1, 0, 0]), rank_one(&[0, 1, 0])];
        assert!(!is_weakly_numerically_trivial(&p, 3).unwrap());
    }

    #[test]
    fn non_unimodular_rejected() {
        assert!(AutoAction::new("X", QMat::from_i64(&[vec![2, 0], vec![0, 1]])).is_err());
    }

    #[test]
    fn identity_fails_entropy() {
        let id = AutoAction::new("I", QMat::identity(2)).unwrap();
        assert!(matches!(eigendivisor_system(&[id]), Err(NsError::EntropyCheckFailed(_))));
    }

    #[test]
    fn golden_e2_system() {
        let a = AutoAction::new("A", QMat::from_i64(&[vec![2, 1], vec![1, 1]])).unwrap();
        let sys = eigendivisor_system(&[a]).unwrap();
        let rho = ((3.0 + 5f64.sqrt()) / 2.0).powi(2);
        assert_eq!(sys.characters.len(), 2);
        assert!((sys.characters[0].values[0] - rho).abs() < 1e-9 * rho);
        assert!((sys.characters[1].values[0] - 1.0 / rho).abs() < 1e-9);
        assert!(sys.certificates.intersection_number > 0.0);
    }

    #[test]
    fn identity_degrees_are_one() {
        let p = dynamical_degree_profile(&AutoAction::new("I", QMat::identity(3)).unwrap());
        assert!(p.spectral.iter().chain(&p.limit).all(|&x| (x - 1.0).abs() < 1e-12));
    }
}
