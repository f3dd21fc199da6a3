//! Spectral computations for linear maps and commuting families that preserve a
//! salient, full-dimensional closed convex cone.
//!
//! Cones come in three kinds: the nonnegative orthant, the positive
//! semidefinite cone of symmetric `n×n` matrices (in upper-triangle `svec`
//! coordinates, ambient dimension `n(n+1)/2`), and polyhedral cones given by
//! generators or half-spaces.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat, to_f64, QMat, Rational};
use crate::linalg::{column_basis, dot, inf_norm, mat_vec, max_abs, norm2, null_space, rank};
use crate::poly;
use crate::tolerance::{CLUSTER_REL, NULL_REL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("cone is not salient")]
    NotSalient,
    #[error("cone does not span the ambient space (rank {rank} < {dim})")]
    NotFullDimensional { rank: usize, dim: usize },
    #[error("maps {0} and {1} do not commute")]
    NotCommuting(String, String),
    #[error("map {0} does not preserve the cone")]
    ConeNotPreserved(String),
    #[error("eigenspace of the spectral radius meets the cone only at 0")]
    NoConeEigenvector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConeKind {
    Orthant { dim: usize },
    Psd { size: usize },
    Generators { rays: Vec<Vec<f64>> },
    HalfSpaces { normals: Vec<Vec<f64>> },
}

#[derive(Clone, Debug)]
pub struct ConeSpec {
    kind: ConeKind,
    ambient_dim: usize,
    /// Inward facet normals (rows); empty for psd.
    h: DMatrix<f64>,
    /// Extreme rays; empty for psd.
    rays: Vec<Vec<f64>>,
}

pub fn svec_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Upper-triangle coordinates of a symmetric matrix, row by row.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(svec_dim(n));
    for i in 0..n {
        for j in i..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn smat(v: &[f64]) -> DMatrix<f64> {
    let n = size_from_svec(v.len());
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = v[k];
            m[(j, i)] = v[k];
            k += 1;
        }
    }
    m
}

fn size_from_svec(len: usize) -> usize {
    let n = (((8 * len + 1) as f64).sqrt() as usize - 1) / 2;
    assert_eq!(svec_dim(n), len, "not an svec length");
    n
}

/// Matrix of `M ↦ AᵀMA` on svec coordinates.
pub fn congruence_svec_exact(a: &QMat) -> QMat {
    let n = a.rows();
    let d = svec_dim(n);
    let at = a.transpose();
    let mut out = QMat::zeros(d, d);
    let mut col = 0;
    for p in 0..n {
        for q in p..n {
            let mut e = QMat::zeros(n, n);
            e.set(p, q, rat(1));
            e.set(q, p, rat(1));
            let img = at.mul(&e).mul(a);
            let mut row = 0;
            for i in 0..n {
                for j in i..n {
                    out.set(row, col, img.get(i, j).clone());
                    row += 1;
                }
            }
            col += 1;
        }
    }
    out
}

pub fn congruence_svec_f64(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let d = svec_dim(n);
    let mut out = DMatrix::zeros(d, d);
    let mut col = 0;
    for p in 0..n {
        for q in p..n {
            let mut e = DMatrix::zeros(n, n);
            e[(p, q)] = 1.0;
            e[(q, p)] = 1.0;
            let img = a.transpose() * e * a;
            out.set_column(col, &DVector::from_vec(svec(&img)));
            col += 1;
        }
    }
    out
}

fn lp_feasible(rows: &DMatrix<f64>, eq: &[(Vec<f64>, f64)], free: bool) -> bool {
    // rows·y >= 0 plus equalities; y free (or >= 0 when !free)
    let k = rows.ncols();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let bounds = if free { (f64::NEG_INFINITY, f64::INFINITY) } else { (0.0, f64::INFINITY) };
    let vars: Vec<_> = (0..k).map(|_| pb.add_var(0.0, bounds)).collect();
    for i in 0..rows.nrows() {
        let expr: Vec<_> = (0..k).map(|j| (vars[j], rows[(i, j)])).collect();
        pb.add_constraint(&expr[..], ComparisonOp::Ge, 0.0);
    }
    for (coef, rhs) in eq {
        let expr: Vec<_> = (0..k).map(|j| (vars[j], coef[j])).collect();
        pb.add_constraint(&expr[..], ComparisonOp::Eq, *rhs);
    }
    pb.solve().is_ok()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

fn normalize_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let keep: Vec<_> = (0..m.nrows())
        .filter_map(|i| {
            let r = m.row(i).into_owned();
            let n = r.norm();
            (n > 1e-12 * scale).then(|| r / n)
        })
        .collect();
    if keep.is_empty() {
        DMatrix::zeros(0, m.ncols())
    } else {
        DMatrix::from_rows(&keep)
    }
}

fn push_unique_direction(out: &mut Vec<Vec<f64>>, v: Vec<f64>) {
    let nv = norm2(&v);
    if nv == 0.0 {
        return;
    }
    let dup = out.iter().any(|u| (dot(u, &v) / (norm2(u) * nv)) > 1.0 - 1e-9);
    if !dup {
        out.push(v);
    }
}

/// Extreme rays of `{y : B y >= 0}` for a pointed cone, by tight-subset enumeration.
fn extreme_rays(b: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let k = b.ncols();
    let b = normalize_rows(b);
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let ok = |y: &[f64]| mat_vec(&b, y).iter().all(|&s| s >= -tol);
    for s in subsets(b.nrows(), k - 1) {
        let sub = if s.is_empty() {
            DMatrix::zeros(0, k)
        } else {
            DMatrix::from_rows(&s.iter().map(|&i| b.row(i).into_owned()).collect::<Vec<_>>())
        };
        let ns = null_space(&sub, 1e-10);
        if ns.ncols() != 1 {
            continue;
        }
        let y: Vec<f64> = ns.column(0).iter().copied().collect();
        let neg: Vec<f64> = y.iter().map(|x| -x).collect();
        if ok(&y) {
            push_unique_direction(&mut out, y);
        } else if ok(&neg) {
            push_unique_direction(&mut out, neg);
        }
    }
    out
}

impl ConeSpec {
    pub fn orthant(dim: usize) -> Self {
        ConeSpec {
            kind: ConeKind::Orthant { dim },
            ambient_dim: dim,
            h: DMatrix::identity(dim, dim),
            rays: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn psd(size: usize) -> Self {
        ConeSpec {
            kind: ConeKind::Psd { size },
            ambient_dim: svec_dim(size),
            h: DMatrix::zeros(0, svec_dim(size)),
            rays: vec![],
        }
    }

    /// Cone generated by the given rays; salience is certified by LP.
    pub fn from_generators(rays: Vec<Vec<f64>>) -> Result<Self, ConeError> {
        let d = rays.first().map_or(0, |r| r.len());
        if let Some(bad) = rays.iter().find(|r| r.len() != d) {
            return Err(ConeError::DimensionMismatch { expected: d, found: bad.len() });
        }
        let g = DMatrix::from_fn(d, rays.len(), |i, j| rays[j][i]);
        let r = rank(&g, 1e-10);
        if r < d || d == 0 {
            return Err(ConeError::NotFullDimensional { rank: r, dim: d });
        }
        // salient iff no convex combination of generators vanishes
        let mut eq: Vec<(Vec<f64>, f64)> = (0..d).map(|i| (g.row(i).iter().copied().collect(), 0.0)).collect();
        eq.push((vec![1.0; rays.len()], 1.0));
        if lp_feasible(&DMatrix::zeros(0, rays.len()), &eq, false) {
            return Err(ConeError::NotSalient);
        }
        let scale = max_abs(&g);
        let mut normals: Vec<Vec<f64>> = Vec::new();
        for s in subsets(rays.len(), d - 1) {
            let sub = if s.is_empty() {
                DMatrix::zeros(0, d)
            } else {
                DMatrix::from_rows(&s.iter().map(|&j| g.column(j).transpose()).collect::<Vec<_>>())
            };
            let ns = null_space(&sub, 1e-10);
            if ns.ncols() != 1 {
                continue;
            }
            let mut h: Vec<f64> = ns.column(0).iter().copied().collect();
            let vals: Vec<f64> = rays.iter().map(|r| dot(&h, r)).collect();
            let t = 1e-10 * scale;
            if vals.iter().all(|&v| v >= -t) {
            } else if vals.iter().all(|&v| v <= t) {
                h.iter_mut().for_each(|x| *x = -*x);
            } else {
                continue;
            }
            push_unique_direction(&mut normals, h);
        }
        let h = DMatrix::from_rows(&normals.iter().map(|n| nalgebra::RowDVector::from_vec(n.clone())).collect::<Vec<_>>());
        let mut extreme = Vec::new();
        for r in &rays {
            let tight: Vec<usize> = (0..h.nrows()).filter(|&i| dot(&normals[i], r).abs() <= 1e-9 * norm2(r)).collect();
            let sub = DMatrix::from_rows(&tight.iter().map(|&i| h.row(i).into_owned()).collect::<Vec<_>>());
            if !tight.is_empty() && rank(&sub, 1e-10) == d - 1 {
                push_unique_direction(&mut extreme, r.clone());
            }
        }
        if d == 1 {
            extreme = vec![rays[0].clone()];
        }
        Ok(ConeSpec { kind: ConeKind::Generators { rays }, ambient_dim: d, h, rays: extreme })
    }

    /// Cone `{v : n·v >= 0 for every normal n}`.
    pub fn from_half_spaces(normals: Vec<Vec<f64>>) -> Result<Self, ConeError> {
        let d = normals.first().map_or(0, |r| r.len());
        if let Some(bad) = normals.iter().find(|r| r.len() != d) {
            return Err(ConeError::DimensionMismatch { expected: d, found: bad.len() });
        }
        let h = DMatrix::from_fn(normals.len(), d, |i, j| normals[i][j]);
        if d == 0 || rank(&h, 1e-10) < d {
            return Err(ConeError::NotSalient);
        }
        // full-dimensional iff some v has all constraints strictly positive
        let mut pb = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..d).map(|_| pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        for i in 0..h.nrows() {
            let expr: Vec<_> = (0..d).map(|j| (vars[j], h[(i, j)])).collect();
            pb.add_constraint(&expr[..], ComparisonOp::Ge, 1.0);
        }
        if pb.solve().is_err() {
            return Err(ConeError::NotFullDimensional { rank: d.saturating_sub(1), dim: d });
        }
        let rays = extreme_rays(&h, 1e-9);
        Ok(ConeSpec { kind: ConeKind::HalfSpaces { normals }, ambient_dim: d, h, rays })
    }

    pub fn from_kind(kind: ConeKind) -> Result<Self, ConeError> {
        match kind {
            ConeKind::Orthant { dim } => Ok(Self::orthant(dim)),
            ConeKind::Psd { size } => Ok(Self::psd(size)),
            ConeKind::Generators { rays } => Self::from_generators(rays),
            ConeKind::HalfSpaces { normals } => Self::from_half_spaces(normals),
        }
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_psd(&self) -> bool {
        matches!(self.kind, ConeKind::Psd { .. })
    }

    pub fn extreme_rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    /// Strictly positive on the cone minus 0: sum of facet normals, or trace.
    pub fn interior_functional(&self) -> Vec<f64> {
        match self.kind {
            ConeKind::Psd { size } => {
                let mut f = Vec::with_capacity(self.ambient_dim);
                for i in 0..size {
                    for j in i..size {
                        f.push(if i == j { 1.0 } else { 0.0 });
                    }
                }
                f
            }
            _ => (0..self.ambient_dim).map(|j| self.h.column(j).sum()).collect(),
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        if v.len() != self.ambient_dim {
            return false;
        }
        let scale = inf_norm(v).max(f64::MIN_POSITIVE);
        match self.kind {
            ConeKind::Psd { .. } => crate::linalg::min_sym_eigenvalue(&smat(v)) >= -tol * scale,
            _ => {
                let hn = normalize_rows(&self.h);
                mat_vec(&hn, v).iter().all(|&s| s >= -tol * scale)
            }
        }
    }
}

/// Matrix entries, exact or float.
#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Exact(QMat),
    Float(DMatrix<f64>),
}

impl Entries {
    pub fn to_f64(&self) -> DMatrix<f64> {
        match self {
            Entries::Exact(q) => q.to_f64(),
            Entries::Float(f) => f.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Entries::Exact(q) => q.rows(),
            Entries::Float(f) => f.nrows(),
        }
    }
}

/// A linear map on the ambient space of a cone. For the psd kind the map is
/// `M ↦ AᵀMA` and `A` is recorded.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeMap {
    matrix: Entries,
    congruence: Option<Entries>,
}

impl ConeMap {
    pub fn exact(m: QMat) -> Self {
        assert!(m.is_square(), "cone map must be square");
        ConeMap { matrix: Entries::Exact(m), congruence: None }
    }

    pub fn float(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "cone map must be square");
        ConeMap { matrix: Entries::Float(m), congruence: None }
    }

    pub fn congruence_exact(a: QMat) -> Self {
        assert!(a.is_square());
        ConeMap { matrix: Entries::Exact(congruence_svec_exact(&a)), congruence: Some(Entries::Exact(a)) }
    }

    pub fn congruence_float(a: DMatrix<f64>) -> Self {
        assert!(a.is_square());
        ConeMap { matrix: Entries::Float(congruence_svec_f64(&a)), congruence: Some(Entries::Float(a)) }
    }

    pub fn entries(&self) -> &Entries {
        &self.matrix
    }

    pub fn congruence(&self) -> Option<&Entries> {
        self.congruence.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.matrix.to_f64()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.to_f64(), v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CharPoly {
    Exact(#[serde(serialize_with = "ser_rats")] Vec<Rational>),
    Float(Vec<f64>),
}

fn ser_rats<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    v.iter().map(crate::exact::fmt_rat).collect::<Vec<_>>().serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralRadius {
    pub rho: f64,
    /// Set when the spectral radius is a rational root of the exact polynomial.
    #[serde(skip)]
    pub rho_exact: Option<Rational>,
    /// Coefficients of det(tI − M), ascending.
    pub char_poly: CharPoly,
}

fn charpoly_f64(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut mk = DMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = m * &mk;
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        mk = next;
        c[n - k] = -(m * &mk).trace() / k as f64;
    }
    c
}

pub fn spectral_radius(map: &ConeMap) -> SpectralRadius {
    match &map.matrix {
        Entries::Exact(q) => {
            let cp = q.charpoly();
            let (rho, rho_exact) = poly::max_modulus(&cp);
            SpectralRadius { rho, rho_exact, char_poly: CharPoly::Exact(cp) }
        }
        Entries::Float(f) => {
            let rho = f.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
            SpectralRadius { rho, rho_exact: None, char_poly: CharPoly::Float(charpoly_f64(f)) }
        }
    }
}

/// Orthonormal basis of the geometric eigenspace of a real eigenvalue.
fn eigenspace(m: &Entries, lambda: f64, exact: Option<&Rational>) -> DMatrix<f64> {
    if let (Entries::Exact(q), Some(l)) = (m, exact) {
        let shifted = q.sub(&QMat::identity(q.rows()).scale(l));
        let ns = shifted.nullspace();
        if ns.is_empty() {
            return DMatrix::zeros(q.rows(), 0);
        }
        let cols: Vec<DVector<f64>> = ns.iter().map(|v| DVector::from_iterator(v.len(), v.iter().map(to_f64))).collect();
        return column_basis(&DMatrix::from_columns(&cols), 1e-12);
    }
    let f = m.to_f64();
    let n = f.nrows();
    null_space(&(f - DMatrix::identity(n, n) * lambda), NULL_REL)
}

fn normalize_max(v: &mut [f64]) {
    let s = inf_norm(v);
    if s > 0.0 {
        v.iter_mut().for_each(|x| {
            *x /= s;
            if x.abs() < 1e-14 {
                *x = 0.0;
            }
        });
    }
}

fn normalize_trace(v: &mut [f64]) {
    let t: f64 = smat(v).trace();
    if t > 0.0 {
        v.iter_mut().for_each(|x| *x /= t);
    }
}

/// Extreme rays of `C ∩ span(basis)` in ambient coordinates, after an LP
/// feasibility gate `{H E y >= 0, f·E y = 1}`.
fn eigencone(cone: &ConeSpec, basis: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    if basis.ncols() == 0 {
        return vec![];
    }
    let b = &cone.h * basis;
    let f = DVector::from_vec(cone.interior_functional());
    let fe: Vec<f64> = (basis.transpose() * f).iter().copied().collect();
    if !lp_feasible(&normalize_rows(&b), &[(fe, 1.0)], true) {
        return vec![];
    }
    extreme_rays(&b, tol)
        .into_iter()
        .map(|y| {
            let mut v = mat_vec(basis, &y);
            normalize_max(&mut v);
            v
        })
        .collect()
}

fn real_eigen_clusters(r: &DMatrix<f64>) -> Vec<f64> {
    let scale = max_abs(r).max(1.0);
    let mut vals: Vec<f64> = r
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * scale)
        .map(|z| z.re)
        .collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out: Vec<f64> = Vec::new();
    for v in vals {
        if !out.iter().any(|&u| (u - v).abs() <= CLUSTER_REL * scale) {
            out.push(v);
        }
    }
    out
}

fn check_preserved(map: &ConeMap, cone: &ConeSpec, label: &str, tol: f64) -> Result<(), ConeError> {
    if map.dim() != cone.ambient_dim() {
        return Err(ConeError::DimensionMismatch { expected: cone.ambient_dim(), found: map.dim() });
    }
    if cone.is_psd() {
        return match map.congruence {
            Some(ref a) if svec_dim(a.dim()) == cone.ambient_dim() => Ok(()),
            _ => Err(ConeError::ConeNotPreserved(label.to_string())),
        };
    }
    let m = map.to_f64();
    for r in &cone.rays {
        if !cone.contains(&mat_vec(&m, r), tol.max(1e-12) * 10.0) {
            return Err(ConeError::ConeNotPreserved(label.to_string()));
        }
    }
    Ok(())
}

/// Rank-one (or rank-two, for complex pairs) PSD eigenvectors of `M ↦ AᵀMA`
/// built from eigenvectors of `Aᵀ` with `|μ|² = rho`.
fn psd_pf(a: &Entries, rho: f64) -> Vec<f64> {
    let n = a.dim();
    let at = a.to_f64().transpose();
    let mut total = DMatrix::<f64>::zeros(n, n);
    let eigs = at.complex_eigenvalues();
    let mut seen: Vec<Complex64> = Vec::new();
    for z in eigs.iter() {
        if (z.norm_sqr() - rho).abs() > CLUSTER_REL * rho.max(1.0) || z.im < 0.0 {
            continue;
        }
        if seen.iter().any(|s| (s - z).norm() <= CLUSTER_REL * rho.max(1.0)) {
            continue;
        }
        seen.push(*z);
        if z.im == 0.0 {
            let exact_mu = match a {
                Entries::Exact(q) => {
                    let cp = q.charpoly();
                    poly::roots_exact(&cp).rational.into_iter().find(|r| (to_f64(r) - z.re).abs() <= 1e-9 * (1.0 + z.re.abs()))
                }
                Entries::Float(_) => None,
            };
            let space = match (a, exact_mu) {
                (Entries::Exact(q), Some(mu)) => eigenspace(&Entries::Exact(q.transpose()), z.re, Some(&mu)),
                _ => null_space(&(&at - DMatrix::identity(n, n) * z.re), NULL_REL),
            };
            for c in space.column_iter() {
                total += &c * c.transpose();
            }
        } else {
            let atc = at.map(|x| Complex64::new(x, 0.0));
            let shifted = atc - DMatrix::<Complex64>::identity(n, n) * *z;
            for w in complex_null_space(&shifted) {
                let ww = &w * w.adjoint();
                total += ww.map(|c| c.re);
            }
        }
    }
    svec(&total)
}

fn complex_null_space(m: &DMatrix<Complex64>) -> Vec<DVector<Complex64>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd right vectors");
    let smax = svd.singular_values.max().max(1.0);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= NULL_REL * smax)
        .map(|i| vt.row(i).adjoint())
        .filter(|v: &DVector<Complex64>| v.len() == n)
        .collect()
}

/// Eigenvector in the cone for the spectral radius. On a multi-dimensional
/// eigencone the normalized sum of its extreme rays is returned.
pub fn pf_eigenvector(map: &ConeMap, cone: &ConeSpec, tol: f64) -> Result<Vec<f64>, ConeError> {
    check_preserved(map, cone, "map", tol)?;
    let sr = spectral_radius(map);
    let m = map.to_f64();
    let mut v = if cone.is_psd() {
        let a = map.congruence.as_ref().expect("checked congruence");
        let mut v = psd_pf(a, sr.rho);
        normalize_trace(&mut v);
        v
    } else {
        let basis = eigenspace(&map.matrix, sr.rho, sr.rho_exact.as_ref());
        let rays = eigencone(cone, &basis, tol.max(1e-10));
        if rays.is_empty() {
            return Err(ConeError::NoConeEigenvector);
        }
        let mut v = vec![0.0; cone.ambient_dim()];
        for r in rays {
            v.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        }
        normalize_max(&mut v);
        v
    };
    if inf_norm(&v) == 0.0 {
        return Err(ConeError::NoConeEigenvector);
    }
    let resid: Vec<f64> = mat_vec(&m, &v).iter().zip(&v).map(|(a, b)| a - sr.rho * b).collect();
    if norm2(&resid) > tol.max(1e-12) * max_abs(&m).max(1.0) * norm2(&v) || !cone.contains(&v, 1e-9) {
        return Err(ConeError::NoConeEigenvector);
    }
    if cone.is_psd() {
        // symmetric roundoff
        v.iter_mut().for_each(|x| {
            if x.abs() < 1e-15 {
                *x = 0.0
            }
        });
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct CommutingFamily {
    maps: Vec<ConeMap>,
    labels: Vec<String>,
}

fn commute(a: &ConeMap, b: &ConeMap) -> bool {
    match (&a.matrix, &b.matrix) {
        (Entries::Exact(x), Entries::Exact(y)) => x.mul(y) == y.mul(x),
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            let d = &x * &y - &y * &x;
            max_abs(&d) <= 1e-9 * max_abs(&x).max(1.0) * max_abs(&y).max(1.0)
        }
    }
}

impl CommutingFamily {
    pub fn new(maps: Vec<ConeMap>, labels: Vec<String>) -> Result<Self, ConeError> {
        assert_eq!(maps.len(), labels.len(), "one label per map");
        let d = maps.first().map_or(0, |m| m.dim());
        for m in &maps {
            if m.dim() != d {
                return Err(ConeError::DimensionMismatch { expected: d, found: m.dim() });
            }
        }
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                if !commute(&maps[i], &maps[j]) {
                    return Err(ConeError::NotCommuting(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        Ok(CommutingFamily { maps, labels })
    }

    pub fn maps(&self) -> &[ConeMap] {
        &self.maps
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Real common eigenvector `w` behind a rank-one psd character, with
/// `Aⱼᵀ w = μⱼ w` for every generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootFactor {
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Character {
    pub values: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub root: Option<RootFactor>,
}

fn polyhedral_recurse(maps: &[DMatrix<f64>], k: usize, q: DMatrix<f64>, cone: &ConeSpec, tol: f64, out: &mut Vec<Vec<f64>>) {
    if k == maps.len() {
        for r in eigencone(cone, &q, tol) {
            push_unique_direction(out, r);
        }
        return;
    }
    let r = q.transpose() * &maps[k] * &q;
    for lambda in real_eigen_clusters(&r) {
        let e = null_space(&(&r - DMatrix::identity(r.nrows(), r.nrows()) * lambda), NULL_REL);
        if e.ncols() == 0 {
            continue;
        }
        let sub = &q * e;
        let rays = eigencone(cone, &sub, tol);
        if rays.is_empty() {
            continue;
        }
        let span = DMatrix::from_columns(&rays.iter().map(|v| DVector::from_vec(v.clone())).collect::<Vec<_>>());
        let nq = column_basis(&span, 1e-9);
        polyhedral_recurse(maps, k + 1, nq, cone, tol, out);
    }
}

/// Row-reduced basis of a column span, for deterministic leaf bases.
fn canonical_basis(p: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let mut a = p.transpose();
    let (rows, cols) = a.shape();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (piv, val) = (r..rows).map(|i| (i, a[(i, c)].abs())).fold((r, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        if val < 1e-9 {
            continue;
        }
        a.swap_rows(piv, r);
        let s = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= s;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                for j in 0..cols {
                    let t = a[(r, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        r += 1;
    }
    (0..r)
        .map(|i| {
            let v: DVector<f64> = a.row(i).transpose();
            let n = v.norm();
            v / n
        })
        .collect()
}

enum PsdLeaf {
    Real(DVector<f64>),
    Complex(DVector<Complex64>),
}

fn psd_recurse(ats: &[DMatrix<f64>], k: usize, p: DMatrix<f64>, out: &mut Vec<PsdLeaf>) {
    if p.ncols() == 0 {
        return;
    }
    if k == ats.len() {
        for w in canonical_basis(&p) {
            out.push(PsdLeaf::Real(w));
        }
        return;
    }
    let r = p.transpose() * &ats[k] * &p;
    let scale = max_abs(&r).max(1.0);
    let eigs = r.complex_eigenvalues();
    let mut reals = real_eigen_clusters(&r);
    reals.sort_by(|a, b| (b * b).partial_cmp(&(a * a)).unwrap().then(b.partial_cmp(a).unwrap()));
    for mu in reals {
        let e = null_space(&(&r - DMatrix::identity(r.nrows(), r.nrows()) * mu), NULL_REL);
        if e.ncols() > 0 {
            psd_recurse(ats, k + 1, &p * e, out);
        }
    }
    let mut seen: Vec<Complex64> = Vec::new();
    for z in eigs.iter().filter(|z| z.im > 1e-9 * scale) {
        if seen.iter().any(|s| (s - z).norm() <= CLUSTER_REL * scale) {
            continue;
        }
        seen.push(*z);
        let rc = r.map(|x| Complex64::new(x, 0.0));
        let ns = complex_null_space(&(rc - DMatrix::<Complex64>::identity(r.nrows(), r.nrows()) * *z));
        if ns.len() != 1 {
            continue;
        }
        let pc = p.map(|x| Complex64::new(x, 0.0));
        let w = pc * &ns[0];
        let joint = ats[k + 1..].iter().all(|a| {
            let ac = a.map(|x| Complex64::new(x, 0.0));
            let aw = &ac * &w;
            let nu = w.dotc(&aw) / w.dotc(&w);
            (aw - &w * nu).norm() <= 1e-8 * max_abs(a).max(1.0) * w.norm()
        });
        if joint {
            out.push(PsdLeaf::Complex(w));
        }
    }
}

/// Common eigenvectors of a commuting family on a cone, with their characters,
/// by repeated eigencone restriction. Characters are sorted by their values,
/// descending, generator by generator.
pub fn common_eigenvectors(family: &CommutingFamily, cone: &ConeSpec, tol: f64) -> Result<Vec<Character>, ConeError> {
    for (m, l) in family.maps.iter().zip(&family.labels) {
        check_preserved(m, cone, l, tol)?;
    }
    let fmaps: Vec<DMatrix<f64>> = family.maps.iter().map(|m| m.to_f64()).collect();
    let mut chars: Vec<Character> = Vec::new();
    if cone.is_psd() {
        let ats: Vec<DMatrix<f64>> = family.maps.iter().map(|m| m.congruence.as_ref().unwrap().to_f64().transpose()).collect();
        let n = ats.first().map_or(0, |a| a.nrows());
        let mut leaves = Vec::new();
        psd_recurse(&ats, 0, DMatrix::identity(n, n), &mut leaves);
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for leaf in leaves {
            match leaf {
                PsdLeaf::Real(mut w) => {
                    w /= w.norm();
                    if let Some(first) = w.iter().find(|x| x.abs() > 1e-12) {
                        if *first < 0.0 {
                            w = -w;
                        }
                    }
                    let mut v = svec(&(&w * w.transpose()));
                    normalize_trace(&mut v);
                    let before = dirs.len();
                    push_unique_direction(&mut dirs, v.clone());
                    if dirs.len() == before {
                        continue;
                    }
                    let mu: Vec<f64> = ats.iter().map(|a| w.dot(&(a * &w))).collect();
                    chars.push(Character {
                        values: mu.iter().map(|m| m * m).collect(),
                        eigenvector: v,
                        root: Some(RootFactor { w: w.iter().copied().collect(), mu }),
                    });
                }
                PsdLeaf::Complex(w) => {
                    let m = (&w * w.adjoint()).map(|c| c.re);
                    let mut v = svec(&m);
                    normalize_trace(&mut v);
                    let before = dirs.len();
                    push_unique_direction(&mut dirs, v.clone());
                    if dirs.len() == before {
                        continue;
                    }
                    let values = fmaps.iter().map(|f| dot(&v, &mat_vec(f, &v)) / dot(&v, &v)).collect();
                    chars.push(Character { values, eigenvector: v, root: None });
                }
            }
        }
    } else {
        let d = cone.ambient_dim();
        let mut dirs = Vec::new();
        polyhedral_recurse(&fmaps, 0, DMatrix::identity(d, d), cone, tol.max(1e-10), &mut dirs);
        for mut v in dirs {
            normalize_max(&mut v);
            let values = fmaps.iter().map(|f| dot(&v, &mat_vec(f, &v)) / dot(&v, &v)).collect();
            chars.push(Character { values, eigenvector: v, root: None });
        }
    }
    chars.sort_by(|a, b| {
        for (x, y) in a.values.iter().zip(&b.values) {
            match y.partial_cmp(x).unwrap() {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        b.eigenvector.partial_cmp(&a.eigenvector).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(chars)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Achiever {
    pub generator: String,
    pub spectral_radius: f64,
    pub index: Option<usize>,
    pub missing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub distinct: bool,
    pub noncollinear: bool,
    pub independent: bool,
    pub equivalences_agree: bool,
    pub achievers: Vec<Achiever>,
}

/// Evaluates distinctness, noncollinearity and independence of the characters
/// and, for each generator, which character attains its spectral radius.
pub fn character_structure_report(chars: &[Character], family: &CommutingFamily) -> StructureReport {
    let rel = crate::tolerance::REL;
    let mut distinct = true;
    let mut noncollinear = true;
    for i in 0..chars.len() {
        for j in i + 1..chars.len() {
            let same = chars[i]
                .values
                .iter()
                .zip(&chars[j].values)
                .all(|(a, b)| (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300));
            if same {
                distinct = false;
            }
            let (u, v) = (&chars[i].eigenvector, &chars[j].eigenvector);
            let c = dot(u, v).abs() / (norm2(u) * norm2(v));
            if c >= 1.0 - rel {
                noncollinear = false;
            }
        }
    }
    let independent = if chars.is_empty() {
        true
    } else {
        let v = DMatrix::from_columns(&chars.iter().map(|c| DVector::from_vec(c.eigenvector.clone())).collect::<Vec<_>>());
        rank(&v, rel) == chars.len()
    };
    let achievers = family
        .maps
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let rho = spectral_radius(m).rho;
            let index = chars.iter().position(|c| (c.values[j] - rho).abs() <= crate::tolerance::ACHIEVER_REL * rho.max(f64::MIN_POSITIVE));
            Achiever { generator: family.labels[j].clone(), spectral_radius: rho, index, missing: index.is_none() }
        })
        .collect();
    StructureReport {
        distinct,
        noncollinear,
        independent,
        equivalences_agree: distinct == noncollinear && noncollinear == independent,
        achievers,
    }
}
