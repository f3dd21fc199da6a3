//! Log-character embedding of a group, rank and discreteness certificates, and
//! the box search for distinguished elements.
//!
//! `L[i][j] = ln χ_i(generator_j)`. A word `w` (exponent vector) maps to `L·w`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::cone_engine::Character;
use crate::exact::rat;
use crate::linalg::rank;
use crate::poly;
use crate::tolerance::{STRICT_MARGIN, ZERO_SUM_ABS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("log-character matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("no distinguished word for index {index} with exponents bounded by {bound}")]
    NotFoundWithinBound { index: usize, bound: i64 },
    #[error("enumeration of {size} candidates exceeds the cap {cap}")]
    BudgetExceeded { size: u128, cap: u128 },
    #[error("index {index} out of range for {len} characters")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("character value {0} is not positive")]
    NonPositiveCharacter(f64),
}

/// Exponent vector of `Π generator_j^{e_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupWord {
    pub exponents: Vec<i64>,
}

impl GroupWord {
    pub fn new(exponents: Vec<i64>) -> Self {
        GroupWord { exponents }
    }

    pub fn identity(r: usize) -> Self {
        GroupWord { exponents: vec![0; r] }
    }

    pub fn is_identity(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    pub fn l1(&self) -> i64 {
        self.exponents.iter().map(|e| e.abs()).sum()
    }

    pub fn linf(&self) -> i64 {
        self.exponents.iter().map(|e| e.abs()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogCharacterMatrix {
    l: DMatrix<f64>,
    labels: Vec<String>,
}

impl LogCharacterMatrix {
    pub fn new(l: DMatrix<f64>, labels: Vec<String>) -> Self {
        assert_eq!(l.ncols(), labels.len(), "one label per generator");
        LogCharacterMatrix { l, labels }
    }

    pub fn from_characters(chars: &[Character], labels: Vec<String>) -> Result<Self, LatticeError> {
        let r = labels.len();
        let mut l = DMatrix::zeros(chars.len(), r);
        for (i, c) in chars.iter().enumerate() {
            for j in 0..r {
                let v = c.values[j];
                if v <= 0.0 {
                    return Err(LatticeError::NonPositiveCharacter(v));
                }
                l[(i, j)] = v.ln();
            }
        }
        Ok(LogCharacterMatrix { l, labels })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_characters(&self) -> usize {
        self.l.nrows()
    }

    pub fn n_generators(&self) -> usize {
        self.l.ncols()
    }

    /// `π(g) = L·w`.
    pub fn apply(&self, w: &GroupWord) -> Vec<f64> {
        let v = DVector::from_iterator(w.exponents.len(), w.exponents.iter().map(|&e| e as f64));
        (&self.l * v).iter().copied().collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.l.ncols()).map(|j| self.l.column(j).sum()).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.l.norm()
    }

    /// Columns `L·w_k` for a list of words.
    pub fn compose(&self, words: &[GroupWord]) -> LogCharacterMatrix {
        let cols: Vec<DVector<f64>> = words.iter().map(|w| DVector::from_vec(self.apply(w))).collect();
        let labels = words.iter().map(|w| format!("{:?}", w.exponents)).collect();
        LogCharacterMatrix { l: DMatrix::from_columns(&cols), labels }
    }
}

/// All exponent vectors in `[-bound, bound]^r`, lexicographic order.
pub fn box_words(r: usize, bound: i64) -> impl Iterator<Item = GroupWord> {
    let side = (2 * bound + 1) as u64;
    let total = side.checked_pow(r as u32).unwrap_or(u64::MAX);
    (0..total).map(move |mut k| {
        let mut e = vec![0i64; r];
        for slot in e.iter_mut().rev() {
            *slot = (k % side) as i64 - bound;
            k /= side;
        }
        GroupWord { exponents: e }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeReport {
    pub rank: usize,
    pub generators: usize,
    pub column_sums_zero: bool,
    /// Per deleted index, strict diagonal dominance of the remaining block.
    pub dominance: Option<Vec<bool>>,
    pub dominance_ok: Option<bool>,
    pub gap: Option<f64>,
    pub gap_word: Option<GroupWord>,
    pub search_bound: i64,
}

/// Strict diagonal dominance (by rows or by columns) after scaling rows to a
/// positive diagonal.
fn strictly_dominant(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        let d = a[(i, i)];
        if d == 0.0 {
            return false;
        }
        if d < 0.0 {
            a.row_mut(i).neg_mut();
        }
    }
    let rows = (0..n).all(|i| a[(i, i)] > (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>());
    let cols = (0..n).all(|j| a[(j, j)] > (0..n).filter(|&i| i != j).map(|i| a[(i, j)].abs()).sum::<f64>());
    rows || cols
}

fn delete(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    m.clone().remove_row(k).remove_column(k)
}

/// Rank, dominance certificate (square input), and discreteness gap over the
/// exponent box of radius `search_bound`.
pub fn lattice_certificate(l: &LogCharacterMatrix, search_bound: i64) -> Result<LatticeReport, LatticeError> {
    let r = l.n_generators();
    let rk = rank(&l.l, 1e-9);
    if rk < r || r == 0 {
        return Err(LatticeError::RankDeficient { rank: rk, expected: r });
    }
    let column_sums_zero = l.column_sums().iter().all(|s| s.abs() <= ZERO_SUM_ABS);
    let (dominance, dominance_ok) = if l.l.is_square() {
        let d: Vec<bool> = (0..r).map(|k| strictly_dominant(&delete(&l.l, k))).collect();
        let ok = d.iter().all(|&b| b);
        (Some(d), Some(ok))
    } else {
        (None, None)
    };
    let mut best: Option<(f64, GroupWord)> = None;
    if search_bound > 0 {
        for w in box_words(r, search_bound) {
            if w.is_identity() {
                continue;
            }
            let n = l.apply(&w).iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(b, _)| n < *b) {
                best = Some((n, w));
            }
        }
    }
    Ok(LatticeReport {
        rank: rk,
        generators: r,
        column_sums_zero,
        dominance,
        dominance_ok,
        gap: best.as_ref().map(|b| b.0),
        gap_word: best.map(|b| b.1),
        search_bound,
    })
}

/// Word `w` with `(L·w)_j < 0` for every `j ≠ i`, minimizing `‖w‖₁` and then
/// lexicographically. Strictness is a margin of `1e-9·‖L‖`.
pub fn find_distinguished(l: &LogCharacterMatrix, i: usize, bound: i64) -> Result<GroupWord, LatticeError> {
    let m = l.n_characters();
    if i >= m {
        return Err(LatticeError::IndexOutOfRange { index: i, len: m });
    }
    let r = l.n_generators();
    let rk = rank(&l.l, 1e-9);
    if rk < r {
        return Err(LatticeError::RankDeficient { rank: rk, expected: r });
    }
    let margin = STRICT_MARGIN * l.frobenius_norm();
    let mut best: Option<GroupWord> = None;
    for w in box_words(r, bound) {
        if w.is_identity() {
            continue;
        }
        if best.as_ref().is_some_and(|b| w.l1() >= b.l1()) {
            continue;
        }
        let v = l.apply(&w);
        if (0..m).filter(|&j| j != i).all(|j| v[j] <= -margin) {
            best = Some(w);
        }
    }
    best.ok_or(LatticeError::NotFoundWithinBound { index: i, bound })
}

pub const DEFAULT_POLY_CAP: u128 = 10_000_000;

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Coefficient bounds `|c_j| <= C(d,j)·bound^j` for monic polynomials with all
/// roots of modulus at most `bound`.
pub fn coefficient_box(degree: usize, bound: f64) -> Vec<i64> {
    (1..=degree as u64)
        .map(|j| ((binom(degree as u64, j) as f64) * bound.powi(j as i32) + 1e-9).floor() as i64)
        .collect()
}

pub fn bounded_spectral_radii(degree: usize, bound: f64) -> Result<Vec<f64>, LatticeError> {
    bounded_spectral_radii_with_cap(degree, bound, DEFAULT_POLY_CAP)
}

/// Sorted set of maximal root moduli `>= 1` attained by monic integer
/// polynomials of the given degree whose roots all lie in `|z| <= bound`.
pub fn bounded_spectral_radii_with_cap(degree: usize, bound: f64, cap: u128) -> Result<Vec<f64>, LatticeError> {
    let cb = coefficient_box(degree, bound);
    let size: u128 = cb.iter().map(|&c| (2 * c + 1) as u128).product();
    if size > cap {
        return Err(LatticeError::BudgetExceeded { size, cap });
    }
    let mut found: Vec<f64> = Vec::new();
    let mut coeffs = vec![0i64; degree];
    let total = size as u64;
    for mut k in 0..total {
        for (j, c) in coeffs.iter_mut().enumerate() {
            let side = (2 * cb[j] + 1) as u64;
            *c = (k % side) as i64 - cb[j];
            k /= side;
        }
        // t^d + c_1 t^(d-1) + ... + c_d, ascending
        let mut p: Vec<_> = coeffs.iter().rev().map(|&c| rat(c)).collect();
        p.push(rat(1));
        let (m, _) = poly::max_modulus(&p);
        if m <= bound * (1.0 + 1e-9) && m >= 1.0 - 1e-9 {
            found.push(m);
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for v in found {
        if out.last().is_none_or(|&u| (v - u).abs() > 1e-9 * v.max(1.0)) {
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_radii() {
        assert_eq!(bounded_spectral_radii(1, 2.0).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn degree_two_unit_bound() {
        assert_eq!(bounded_spectral_radii(2, 1.0).unwrap(), vec![1.0]);
    }

    #[test]
    fn budget_enforced() {
        assert!(matches!(bounded_spectral_radii(4, 4.0), Err(LatticeError::BudgetExceeded { .. })));
    }

    #[test]
    fn zero_matrix_rank_deficient() {
        let l = LogCharacterMatrix::new(DMatrix::zeros(2, 1), vec!["g".into()]);
        assert!(matches!(lattice_certificate(&l, 2), Err(LatticeError::RankDeficient { .. })));
    }

    #[test]
    fn rank_one_gap() {
        let lam = (7.0 + 4.0 * 3f64.sqrt()).ln();
        let l = LogCharacterMatrix::new(DMatrix::from_column_slice(2, 1, &[lam, -lam]), vec!["phi".into()]);
        let rep = lattice_certificate(&l, 3).unwrap();
        assert_eq!(rep.rank, 1);
        assert!((rep.gap.unwrap() - lam * 2f64.sqrt()).abs() < 1e-12);
        assert!(rep.column_sums_zero);
    }

    #[test]
    fn box_order_is_lexicographic() {
        let v: Vec<_> = box_words(2, 1).map(|w| w.exponents).collect();
        assert_eq!(v[0], vec![-1, -1]);
        assert_eq!(v[8], vec![1, 1]);
        let mut s = v.clone();
        s.sort();
        assert_eq!(s, v);
    }
}
