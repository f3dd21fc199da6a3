//! Canonical heights for an abelian group of maximal dynamical rank, on the
//! two testbeds: `E^n` with commuting integer matrices, and a Wehler K3
//! surface with `G = ⟨σ₂∘σ₁⟩`.
//!
//! Every estimate carries a tail. On `E^n` the per-index heights are exact
//! quadratic forms in the Néron–Tate Gram, so the only tail is the Gram tail.
//! On the Wehler surface the tail comes from observed one-step defects.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::character_lattice::{find_distinguished, GroupWord, LatticeError};
use crate::cone_engine::{spectral_radius, ConeMap};
use crate::elliptic::{CurveQ, EllipticError, PairingGram, PointQ, PointRepr};
use crate::exact::{parse_rat, QMat};
use crate::ns_abelian::{eigendivisor_system, word_matrix, AutoAction, EigendivisorSystem, NsError};
use crate::tolerance::{DIGIT_BUDGET, PERIOD_SEARCH_DIGITS, TAIL_SAFETY};
use crate::wehler::{eigendivisors_k3, height, K3Eigendivisors, SurfacePoint, WehlerError, WehlerFixture, WehlerSurface};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanHeightError {
    #[error("point lies in the excluded set: {0}")]
    ExcludedPoint(String),
    #[error("digit budget exceeded before any step")]
    DigitBudgetExceeded,
    #[error("zero-locus conditions disagree: {0}")]
    Inconclusive(String),
    #[error("index {index} out of range for {n} characters")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("point kind does not match the system")]
    WrongPointKind,
    #[error("tuple has {found} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("word has {found} exponents, expected {expected}")]
    WordLength { expected: usize, found: usize },
    #[error("bad system field {field}: {msg}")]
    Field { field: String, msg: String },
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Wehler(#[from] WehlerError),
    #[error(transparent)]
    Ns(#[from] NsError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

type Result<T> = std::result::Result<T, CanHeightError>;

#[derive(Clone, Debug, PartialEq)]
pub enum SystemPoint {
    Abelian(Vec<PointQ>),
    Wehler(SurfacePoint),
}

/// JSON form of a point: a tuple of curve points, or a pair of integer triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Abelian(Vec<PointRepr>),
    Wehler([[i64; 3]; 2]),
}

impl Serialize for SystemPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SystemPoint::Abelian(ps) => ps.iter().map(PointRepr::from_point).collect::<Vec<_>>().serialize(s),
            SystemPoint::Wehler(p) => p.serialize(s),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub label: String,
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbelianFixture {
    /// Weierstrass coefficients `[a1, a2, a3, a4, a6]`.
    pub curve: Vec<String>,
    pub generators: Vec<NamedMatrix>,
    #[serde(default = "default_iters")]
    pub iters: u32,
    #[serde(default = "default_search_bound")]
    pub search_bound: i64,
    #[serde(default)]
    pub points: BTreeMap<String, PointSpec>,
}

fn default_iters() -> u32 {
    8
}

fn default_search_bound() -> i64 {
    3
}

fn default_m_max() -> usize {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WehlerSystemFixture {
    #[serde(flatten)]
    pub surface: WehlerFixture,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default)]
    pub named_points: BTreeMap<String, PointSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemFile {
    Abelian(AbelianFixture),
    Wehler(WehlerSystemFixture),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinguishedCert {
    pub index: usize,
    pub word: Vec<i64>,
    pub chi_own: f64,
    pub chi_others_max: f64,
    pub lambda1: f64,
    /// `χ_i(g_i) = λ₁(g_i)`.
    pub matches_lambda1: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCert {
    pub n_characters: usize,
    pub characters_distinct: bool,
    pub nef_and_big: bool,
    pub distinguished: Vec<DistinguishedCert>,
}

impl HypothesisCert {
    pub fn holds(&self) -> bool {
        self.characters_distinct && self.nef_and_big && self.distinguished.iter().all(|d| d.matches_lambda1)
    }
}

#[derive(Clone, Debug)]
pub struct AbelianSystem {
    pub curve: CurveQ,
    pub generators: Vec<AutoAction>,
    pub eig: EigendivisorSystem,
    pub words: Vec<GroupWord>,
    pub iters: u32,
}

#[derive(Clone, Debug)]
pub struct WehlerSystem {
    pub surface: WehlerSurface,
    pub eig: K3Eigendivisors,
    pub m_max: usize,
    pub digit_budget: u64,
}

#[derive(Clone, Debug)]
pub enum Kind {
    Abelian(AbelianSystem),
    Wehler(WehlerSystem),
}

#[derive(Clone, Debug)]
pub struct DynamicalSystem {
    pub kind: Kind,
    pub hypothesis: HypothesisCert,
    /// `characters[i][j] = χ_i(generator j)`.
    characters: Vec<Vec<f64>>,
    labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Telescoping {
    pub value: f64,
    pub tail: f64,
    pub m_used: usize,
    pub stopped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalHeightEstimate {
    pub value: f64,
    pub tail: f64,
    pub m_used: usize,
    pub per_index: Vec<Telescoping>,
    /// A Weil height for `D = Σ D_i` at the point.
    pub h_d: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductHeight {
    pub value: f64,
    pub hhat_g: f64,
    pub am_gm_ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ZeroClass {
    PeriodicAll,
    Nonperiodic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroLocusReport {
    pub class: ZeroClass,
    /// ĥ_G = 0.
    pub hhat_g_zero: bool,
    /// Every per-index height vanishes.
    pub all_indices_zero: bool,
    /// Periodic under every generator.
    pub periodic_all: bool,
    /// Periodic under some nontrivial tested word.
    pub periodic_some: bool,
    /// Some per-index height vanishes.
    pub some_index_zero: bool,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArithmeticDegree {
    pub alpha: f64,
    pub periodic: bool,
    pub m_used: usize,
    pub heights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingRow {
    pub t: f64,
    pub n: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingTable {
    pub rows: Vec<CountingRow>,
    pub divergent: bool,
    pub m_used: usize,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitRow {
    pub m: usize,
    pub h: f64,
    pub hhat_plus: f64,
    pub hhat_minus: f64,
    pub tail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterRow {
    pub label: String,
    pub hhat_g: f64,
    pub product: f64,
    pub tail: f64,
}

fn field_err(field: impl Into<String>, msg: impl ToString) -> CanHeightError {
    CanHeightError::Field { field: field.into(), msg: msg.to_string() }
}

fn parse_matrix(field: &str, rows: &[Vec<String>]) -> Result<QMat> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let mut row = Vec::with_capacity(r.len());
        for (j, s) in r.iter().enumerate() {
            row.push(parse_rat(s).map_err(|e| field_err(format!("{field}[{i}][{j}]"), e))?);
        }
        out.push(row);
    }
    if out.is_empty() || out.iter().any(|r| r.len() != out.len()) {
        return Err(field_err(field, "expected a square matrix"));
    }
    Ok(QMat::from_rows(out))
}

fn word_value(chars: &[f64], w: &GroupWord) -> f64 {
    chars.iter().zip(&w.exponents).map(|(c, &e)| c.powi(e as i32)).product()
}

fn is_zero(t: &Telescoping) -> bool {
    t.value.abs() <= t.tail.max(1e-12)
}

impl DynamicalSystem {
    pub fn abelian(curve: CurveQ, generators: Vec<AutoAction>, iters: u32, search_bound: i64) -> Result<Self> {
        let eig = eigendivisor_system(&generators)?;
        let l = eig.log_matrix();
        let n = eig.n();
        let words: Vec<GroupWord> = (0..n).map(|i| find_distinguished(&l, i, search_bound)).collect::<std::result::Result<_, _>>()?;
        let characters: Vec<Vec<f64>> = eig.characters.iter().map(|c| c.values.clone()).collect();
        let distinguished = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let m = word_matrix(&generators, w);
                let lambda1 = spectral_radius(&ConeMap::congruence_exact(m)).rho;
                let own = word_value(&characters[i], w);
                let others = (0..n).filter(|&k| k != i).map(|k| word_value(&characters[k], w)).fold(0.0f64, f64::max);
                DistinguishedCert {
                    index: i,
                    word: w.exponents.clone(),
                    chi_own: own,
                    chi_others_max: others,
                    lambda1,
                    matches_lambda1: (own - lambda1).abs() <= 1e-9 * lambda1 && own > others,
                }
            })
            .collect();
        let hypothesis = HypothesisCert {
            n_characters: n,
            characters_distinct: eig.certificates.distinct,
            nef_and_big: eig.certificates.d_positive_definite,
            distinguished,
        };
        let labels = generators.iter().map(|g| g.label().to_string()).collect();
        Ok(DynamicalSystem {
            kind: Kind::Abelian(AbelianSystem { curve, generators, eig, words, iters }),
            hypothesis,
            characters,
            labels,
        })
    }

    pub fn wehler(surface: WehlerSurface, m_max: usize, digit_budget: u64) -> Self {
        let eig = eigendivisors_k3();
        let lam = eig.lambda;
        let characters = vec![vec![lam], vec![1.0 / lam]];
        let distinguished = vec![
            DistinguishedCert { index: 0, word: vec![1], chi_own: lam, chi_others_max: 1.0 / lam, lambda1: lam, matches_lambda1: true },
            DistinguishedCert { index: 1, word: vec![-1], chi_own: lam, chi_others_max: 1.0 / lam, lambda1: lam, matches_lambda1: true },
        ];
        let hypothesis = HypothesisCert {
            n_characters: 2,
            characters_distinct: true,
            nef_and_big: eig.d_plus_dot_d_minus > 0.0,
            distinguished,
        };
        DynamicalSystem {
            kind: Kind::Wehler(WehlerSystem { surface, eig, m_max, digit_budget }),
            hypothesis,
            characters,
            labels: vec!["phi".into()],
        }
    }

    pub fn from_file(f: &SystemFile) -> Result<Self> {
        match f {
            SystemFile::Abelian(a) => {
                if a.curve.len() != 5 {
                    return Err(field_err("curve", "expected [a1, a2, a3, a4, a6]"));
                }
                let mut coeffs = Vec::new();
                for (k, s) in a.curve.iter().enumerate() {
                    coeffs.push(parse_rat(s).map_err(|e| field_err(format!("curve[{k}]"), e))?);
                }
                let curve = CurveQ::new(coeffs.try_into().unwrap())?;
                let mut gens = Vec::new();
                for (k, g) in a.generators.iter().enumerate() {
                    let m = parse_matrix(&format!("generators[{k}].matrix"), &g.matrix)?;
                    gens.push(AutoAction::new(g.label.clone(), m).map_err(|e| field_err(format!("generators[{k}]"), e))?);
                }
                if gens.is_empty() {
                    return Err(field_err("generators", "at least one generator is required"));
                }
                if a.iters == 0 {
                    return Err(field_err("iters", "must be positive"));
                }
                Self::abelian(curve, gens, a.iters, a.search_bound)
            }
            SystemFile::Wehler(w) => {
                if w.m_max == 0 {
                    return Err(field_err("m_max", "must be positive"));
                }
                Ok(Self::wehler(WehlerSurface::from_fixture(&w.surface)?, w.m_max, DIGIT_BUDGET))
            }
        }
    }

    pub fn n(&self) -> usize {
        self.characters.len()
    }

    pub fn n_generators(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn characters(&self) -> &[Vec<f64>] {
        &self.characters
    }

    pub fn distinguished_words(&self) -> Vec<GroupWord> {
        self.hypothesis.distinguished.iter().map(|d| GroupWord::new(d.word.clone())).collect()
    }

    /// `λ₁(g_i)`.
    pub fn lambda1(&self, i: usize) -> f64 {
        self.hypothesis.distinguished[i].lambda1
    }

    pub fn chi(&self, i: usize, w: &GroupWord) -> f64 {
        word_value(&self.characters[i], w)
    }

    /// Parse a point given in JSON form.
    pub fn point(&self, spec: &PointSpec) -> Result<SystemPoint> {
        match (&self.kind, spec) {
            (Kind::Abelian(a), PointSpec::Abelian(reprs)) => {
                let n = a.eig.n();
                if reprs.len() != n {
                    return Err(CanHeightError::DimensionMismatch { expected: n, found: reprs.len() });
                }
                Ok(SystemPoint::Abelian(reprs.iter().map(|r| a.curve.parse_point(r)).collect::<std::result::Result<_, _>>()?))
            }
            (Kind::Wehler(w), PointSpec::Wehler([x, y])) => {
                let p = SurfacePoint::from_i64(*x, *y)?;
                if !w.surface.contains(&p) {
                    return Err(WehlerError::NotOnSurface.into());
                }
                Ok(SystemPoint::Wehler(p))
            }
            _ => Err(CanHeightError::WrongPointKind),
        }
    }

    fn check_word(&self, w: &GroupWord) -> Result<()> {
        if w.exponents.len() != self.n_generators() {
            return Err(CanHeightError::WordLength { expected: self.n_generators(), found: w.exponents.len() });
        }
        Ok(())
    }

    /// `g(x)` for a word `g` in the generators.
    pub fn apply(&self, w: &GroupWord, x: &SystemPoint) -> Result<SystemPoint> {
        self.check_word(w)?;
        match (&self.kind, x) {
            (Kind::Abelian(a), SystemPoint::Abelian(ps)) => {
                let m = word_matrix(&a.generators, w);
                Ok(SystemPoint::Abelian(a.curve.act(&m, ps)))
            }
            (Kind::Wehler(s), SystemPoint::Wehler(p)) => {
                let e = w.exponents[0];
                let mut cur = p.clone();
                for _ in 0..e.unsigned_abs() {
                    cur = if e > 0 { s.surface.phi(&cur) } else { s.surface.phi_inv(&cur) }
                        .map_err(|err| CanHeightError::ExcludedPoint(err.to_string()))?;
                }
                Ok(SystemPoint::Wehler(cur))
            }
            _ => Err(CanHeightError::WrongPointKind),
        }
    }

    fn gram(&self, a: &AbelianSystem, ps: &[PointQ]) -> Result<PairingGram> {
        if ps.len() != a.eig.n() {
            return Err(CanHeightError::DimensionMismatch { expected: a.eig.n(), found: ps.len() });
        }
        Ok(a.curve.pairing_gram(ps, a.iters)?)
    }

    fn abelian_per_index(a: &AbelianSystem, g: &PairingGram) -> Vec<Telescoping> {
        a.eig
            .divisors
            .iter()
            .map(|d| {
                let mut value = 0.0;
                let mut tail = 0.0;
                for (r, row) in d.iter().enumerate() {
                    for (c, dv) in row.iter().enumerate() {
                        value += dv * g.g[r][c];
                        tail += dv.abs() * g.tail[r][c];
                    }
                }
                Telescoping { value, tail, m_used: a.iters as usize, stopped: None }
            })
            .collect()
    }

    /// `ĥ_{D_i,g_i}(x)`.
    pub fn telescoping_height(&self, i: usize, x: &SystemPoint, m_max: usize, digit_budget: u64) -> Result<Telescoping> {
        if i >= self.n() {
            return Err(CanHeightError::IndexOutOfRange { index: i, n: self.n() });
        }
        match (&self.kind, x) {
            (Kind::Abelian(a), SystemPoint::Abelian(ps)) => {
                let g = self.gram(a, ps)?;
                Ok(Self::abelian_per_index(a, &g).swap_remove(i))
            }
            (Kind::Wehler(s), SystemPoint::Wehler(p)) => wehler_telescoping(s, i, p, m_max, digit_budget),
            _ => Err(CanHeightError::WrongPointKind),
        }
    }

    pub fn canonical_height_g(&self, x: &SystemPoint) -> Result<CanonicalHeightEstimate> {
        let (per_index, h_d) = match (&self.kind, x) {
            (Kind::Abelian(a), SystemPoint::Abelian(ps)) => {
                let g = self.gram(a, ps)?;
                (Self::abelian_per_index(a, &g), naive_class_height(&a.curve, &a.eig.d, ps))
            }
            (Kind::Wehler(s), SystemPoint::Wehler(p)) => {
                let per: Vec<Telescoping> =
                    (0..2).map(|i| wehler_telescoping(s, i, p, s.m_max, s.digit_budget)).collect::<Result<_>>()?;
                let d = [s.eig.d_plus[0] + s.eig.d_minus[0], s.eig.d_plus[1] + s.eig.d_minus[1]];
                (per, height(p, d))
            }
            _ => return Err(CanHeightError::WrongPointKind),
        };
        let value: f64 = per_index.iter().map(|t| t.value).sum();
        let tail: f64 = per_index.iter().map(|t| t.tail).sum();
        let m_used = per_index.iter().map(|t| t.m_used).min().unwrap_or(0);
        Ok(CanonicalHeightEstimate { value, tail, m_used, per_index, h_d, defect: value - h_d })
    }

    /// `Ĥ_G = Π ĥ_{D_i,g_i}` with factors within their tail clamped to 0.
    pub fn product_height(&self, x: &SystemPoint) -> Result<ProductHeight> {
        let est = self.canonical_height_g(x)?;
        Ok(product_from(&est))
    }

    pub fn classify_zero_locus(&self, x: &SystemPoint, period_bound: usize) -> Result<ZeroLocusReport> {
        let est = self.canonical_height_g(x)?;
        let mut evidence = Vec::new();
        let hhat_g_zero = est.value.abs() <= est.tail.max(1e-12);
        let zeros: Vec<bool> = est.per_index.iter().map(is_zero).collect();
        evidence.push(format!("hhat_G = {} (tail {})", est.value, est.tail));
        let all_indices_zero = zeros.iter().all(|&z| z);
        let some_index_zero = zeros.iter().any(|&z| z);
        let gens: Vec<GroupWord> = (0..self.n_generators())
            .map(|j| {
                let mut e = vec![0; self.n_generators()];
                e[j] = 1;
                GroupWord::new(e)
            })
            .collect();
        let mut periodic_gen = Vec::new();
        for g in &gens {
            periodic_gen.push(self.is_periodic(g, x, period_bound, &mut evidence)?);
        }
        let mut periodic_words = Vec::new();
        for w in self.distinguished_words() {
            if let Some(k) = gens.iter().position(|g| *g == w) {
                periodic_words.push(periodic_gen[k]);
                continue;
            }
            periodic_words.push(self.is_periodic(&w, x, period_bound, &mut evidence)?);
        }
        let periodic_all = periodic_gen.iter().all(|&p| p);
        let periodic_some = periodic_gen.iter().chain(&periodic_words).any(|&p| p);
        let conds = [hhat_g_zero, all_indices_zero, periodic_all, periodic_some, some_index_zero];
        if conds.iter().any(|&c| c != conds[0]) {
            return Err(CanHeightError::Inconclusive(format!("conditions {conds:?}; {}", evidence.join("; "))));
        }
        Ok(ZeroLocusReport {
            class: if conds[0] { ZeroClass::PeriodicAll } else { ZeroClass::Nonperiodic },
            hhat_g_zero,
            all_indices_zero,
            periodic_all,
            periodic_some,
            some_index_zero,
            evidence,
        })
    }

    fn is_periodic(&self, w: &GroupWord, x: &SystemPoint, period_bound: usize, evidence: &mut Vec<String>) -> Result<bool> {
        if let (Kind::Abelian(a), SystemPoint::Abelian(ps)) = (&self.kind, x) {
            // A^k − I is invertible for a word of positive entropy, so any
            // nontorsion coordinate rules out periodicity.
            if let Some(k) = ps.iter().position(|p| !a.curve.is_torsion(p)) {
                evidence.push(format!("word {:?}: coordinate {k} nontorsion", w.exponents));
                return Ok(false);
            }
        }
        let mut cur = self.apply(w, x)?;
        let mut reached = period_bound;
        for k in 1..=period_bound {
            if cur == *x {
                evidence.push(format!("word {:?}: period {k}", w.exponents));
                return Ok(true);
            }
            if k == period_bound {
                break;
            }
            if let SystemPoint::Wehler(p) = &cur {
                // one step of φ^{±1} multiplies the digit count by about λ < 16
                if p.max_digits() * 16 * w.exponents[0].unsigned_abs() > PERIOD_SEARCH_DIGITS {
                    reached = k;
                    break;
                }
            }
            cur = self.apply(w, &cur)?;
        }
        evidence.push(format!("word {:?}: no recurrence within {reached}", w.exponents));
        Ok(false)
    }

    /// Ample heights `h_H(g^m x)` for `m = 0..=m_budget`, with `H = D₁+D₂`
    /// on the surface and `H = Σ pr_a^*(O)` with canonical heights on `E^n`.
    pub fn orbit_heights(&self, w: &GroupWord, x: &SystemPoint, m_budget: usize) -> Result<(Vec<f64>, Option<usize>)> {
        self.check_word(w)?;
        match (&self.kind, x) {
            (Kind::Abelian(a), SystemPoint::Abelian(ps)) => {
                let g = self.gram(a, ps)?;
                let gm = nalgebra::DMatrix::from_fn(g.g.len(), g.g.len(), |r, c| g.g[r][c]);
                let m = word_matrix(&a.generators, w);
                let mut pw = QMat::identity(m.rows());
                let mut out = Vec::with_capacity(m_budget + 1);
                for _ in 0..=m_budget {
                    let f = pw.to_f64();
                    out.push((&f * &gm * f.transpose()).trace());
                    pw = pw.mul(&m);
                }
                let all_torsion = ps.iter().all(|p| a.curve.is_torsion(p));
                Ok((out, all_torsion.then_some(0)))
            }
            (Kind::Wehler(s), SystemPoint::Wehler(p)) => {
                let e = w.exponents[0];
                if e == 0 {
                    return Ok((vec![height(p, [1.0, 1.0]); m_budget + 1], Some(0)));
                }
                let mut out = vec![height(p, [1.0, 1.0])];
                let mut cur = SystemPoint::Wehler(p.clone());
                let mut period = None;
                for m in 1..=m_budget.min(s.m_max) {
                    let next = self.apply(w, &cur)?;
                    let SystemPoint::Wehler(q) = &next else { unreachable!() };
                    if q.max_digits() > s.digit_budget {
                        break;
                    }
                    out.push(height(q, [1.0, 1.0]));
                    if *q == *p {
                        period = Some(m);
                        break;
                    }
                    cur = next;
                }
                Ok((out, period))
            }
            _ => Err(CanHeightError::WrongPointKind),
        }
    }

    /// `α_g(x) = lim h⁺(g^m x)^{1/m}`, estimated from the growth rate of the
    /// ample height along the orbit.
    pub fn arithmetic_degree(&self, w: &GroupWord, x: &SystemPoint, m_budget: usize) -> Result<ArithmeticDegree> {
        let (heights, period) = self.orbit_heights(w, x, m_budget)?;
        let m_used = heights.len() - 1;
        let bounded = heights.iter().cloned().fold(0.0f64, f64::max) <= 1e-9;
        if period.is_some() || bounded {
            return Ok(ArithmeticDegree { alpha: 1.0, periodic: true, m_used, heights });
        }
        let alpha = match &self.kind {
            Kind::Abelian(_) => {
                let k = m_used.min(10).max(1);
                ((heights[m_used].ln() - heights[m_used - k].ln()) / k as f64).exp()
            }
            // fit h_m = A r^m + C on the last three terms
            Kind::Wehler(_) if m_used >= 2 => {
                let (a, b, c) = (heights[m_used - 2], heights[m_used - 1], heights[m_used]);
                (c - b) / (b - a)
            }
            Kind::Wehler(_) => {
                let a = heights[0].max(1.0);
                heights[m_used].max(1.0) / a
            }
        };
        Ok(ArithmeticDegree { alpha, periodic: false, m_used, heights })
    }

    /// `N(T) = #{m : h_H(g^m x) ≤ T}`. Without a grid the orbit heights
    /// themselves are used as thresholds.
    pub fn counting_function(&self, w: &GroupWord, x: &SystemPoint, t_grid: Option<&[f64]>, m_budget: usize) -> Result<CountingTable> {
        let (heights, period) = self.orbit_heights(w, x, m_budget)?;
        let m_used = heights.len() - 1;
        let lam = self.word_lambda1(w)?;
        let target = 1.0 / lam.ln();
        let hmax = heights.iter().cloned().fold(0.0f64, f64::max);
        let divergent = period.is_some() || hmax <= 1e-9;
        let grid: Vec<f64> = match t_grid {
            Some(g) => g.to_vec(),
            None => {
                let step = (m_used / 20).max(1);
                let mut g: Vec<f64> = heights.iter().skip(1).step_by(step).cloned().filter(|t| *t > 1.0).collect();
                if heights[m_used] > 1.0 && g.last() != Some(&heights[m_used]) {
                    g.push(heights[m_used]);
                }
                g
            }
        };
        let rows = grid
            .into_iter()
            .map(|t| {
                let n = heights.iter().filter(|&&h| h <= t).count();
                CountingRow { t, n, ratio: if t > 1.0 { n as f64 / t.ln() } else { f64::NAN } }
            })
            .collect();
        Ok(CountingTable { rows, divergent, m_used, target })
    }

    /// Spectral radius of `g*` on Néron–Severi.
    pub fn word_lambda1(&self, w: &GroupWord) -> Result<f64> {
        self.check_word(w)?;
        Ok(match &self.kind {
            Kind::Abelian(a) => spectral_radius(&ConeMap::congruence_exact(word_matrix(&a.generators, w))).rho,
            Kind::Wehler(s) => {
                if w.exponents[0] == 0 { 1.0 } else { s.eig.lambda.powi(w.exponents[0].abs() as i32) }
            }
        })
    }

    /// Per-m telescoping table for the surface; on `E^n` the rows hold the
    /// exact per-index values for `g_1^m x`.
    pub fn orbit_table(&self, x: &SystemPoint, steps: usize) -> Result<Vec<OrbitRow>> {
        match (&self.kind, x) {
            (Kind::Wehler(s), SystemPoint::Wehler(p)) => {
                let fw = s.surface.orbit(p, steps, false, s.digit_budget);
                let bw = s.surface.orbit(p, steps, true, s.digit_budget);
                let lam = s.eig.lambda;
                let hp: Vec<f64> = fw.points.iter().map(|q| height(q, s.eig.d_plus)).collect();
                let hm: Vec<f64> = bw.points.iter().map(|q| height(q, s.eig.d_minus)).collect();
                let dp = defects(&hp, lam);
                let dm = defects(&hm, lam);
                let m_top = fw.m_reached.min(bw.m_reached);
                Ok((0..=m_top)
                    .map(|m| {
                        let scale = lam.powi(m as i32);
                        let d = dp[..m].iter().chain(&dm[..m]).cloned().fold(0.0f64, f64::max);
                        OrbitRow {
                            m,
                            h: height(&fw.points[m], [1.0, 1.0]),
                            hhat_plus: hp[m] / scale,
                            hhat_minus: hm[m] / scale,
                            tail: TAIL_SAFETY * d / (scale * (lam - 1.0)),
                        }
                    })
                    .collect())
            }
            (Kind::Abelian(_), SystemPoint::Abelian(_)) => {
                let w = self.distinguished_words()[0].clone();
                let mut cur = x.clone();
                let mut rows = Vec::new();
                for m in 0..=steps {
                    let est = self.canonical_height_g(&cur)?;
                    let (h, _) = self.orbit_heights(&w, &cur, 0)?;
                    rows.push(OrbitRow {
                        m,
                        h: h[0],
                        hhat_plus: est.per_index[0].value,
                        hhat_minus: est.per_index.get(1).map_or(0.0, |t| t.value),
                        tail: est.tail,
                    });
                    if m < steps {
                        cur = self.apply(&w, &cur)?;
                    }
                }
                Ok(rows)
            }
            _ => Err(CanHeightError::WrongPointKind),
        }
    }

    /// ĥ_G against Ĥ_G over a point set; no relation is asserted.
    pub fn scatter(&self, points: &[(String, SystemPoint)]) -> Result<Vec<ScatterRow>> {
        points
            .iter()
            .map(|(label, x)| {
                let est = self.canonical_height_g(x)?;
                let p = product_from(&est);
                Ok(ScatterRow { label: label.clone(), hhat_g: est.value, product: p.value, tail: est.tail })
            })
            .collect()
    }
}

fn product_from(est: &CanonicalHeightEstimate) -> ProductHeight {
    let n = est.per_index.len() as f64;
    let factors: Vec<f64> = est.per_index.iter().map(|t| if is_zero(t) { 0.0 } else { t.value.max(0.0) }).collect();
    let value: f64 = factors.iter().product();
    let am = factors.iter().sum::<f64>() / n;
    let gm = value.powf(1.0 / n);
    ProductHeight { value, hhat_g: est.value, am_gm_ok: gm <= am * (1.0 + 1e-12) + 1e-300 }
}

fn defects(h: &[f64], lam: f64) -> Vec<f64> {
    h.windows(2).map(|w| (w[1] - lam * w[0]).abs()).collect()
}

fn wehler_telescoping(s: &WehlerSystem, i: usize, p: &SurfacePoint, m_max: usize, digit_budget: u64) -> Result<Telescoping> {
    let inverse = i == 1;
    let class = if inverse { s.eig.d_minus } else { s.eig.d_plus };
    let orbit = s.surface.orbit(p, m_max, inverse, digit_budget);
    if orbit.m_reached == 0 && m_max > 0 {
        return Err(match &orbit.stopped {
            Some(msg) if msg.contains("digit budget") => CanHeightError::DigitBudgetExceeded,
            Some(msg) => CanHeightError::ExcludedPoint(msg.clone()),
            None => CanHeightError::ExcludedPoint("empty orbit".into()),
        });
    }
    let lam = s.eig.lambda;
    let hs: Vec<f64> = orbit.points.iter().map(|q| height(q, class)).collect();
    let d = defects(&hs, lam).into_iter().fold(0.0f64, f64::max);
    let m = orbit.m_reached;
    let scale = lam.powi(m as i32);
    Ok(Telescoping { value: hs[m] / scale, tail: TAIL_SAFETY * d / (scale * (lam - 1.0)), m_used: m, stopped: orbit.stopped })
}

/// Naive Weil height for the class `M` on `E^n`, by polarization of the
/// naive x-height.
fn naive_class_height(curve: &CurveQ, m: &[Vec<f64>], ps: &[PointQ]) -> f64 {
    let h = |p: &PointQ| curve.naive_height(p).unwrap_or(0.0);
    let hs: Vec<f64> = ps.iter().map(h).collect();
    let mut acc = 0.0;
    for a in 0..ps.len() {
        acc += m[a][a] * hs[a];
        for b in a + 1..ps.len() {
            let s = h(&curve.add(&ps[a], &ps[b]));
            acc += m[a][b] * (s - hs[a] - hs[b]);
        }
    }
    acc
}
