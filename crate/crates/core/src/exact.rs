//! Exact rational scalars and small dense rational matrices.
//!
//! Rationals are serialized as `"p/q"` strings. Matrices are row-major.

use std::fmt;
use std::str::FromStr;

use malachite_base::num::arithmetic::traits::{Abs, Gcd, Sign};
use malachite_base::num::basic::traits::{One, Zero};
use malachite_base::num::conversion::traits::RoundingFrom;
use malachite_base::num::logic::traits::SignificantBits;
use malachite_base::rounding_modes::RoundingMode;
use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use malachite_nz::integer::Integer;
pub use malachite_nz::natural::Natural;
pub use malachite_q::Rational;

use crate::error::ParseError;

pub fn rat(n: i64) -> Rational {
    Rational::from(n)
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::from_signeds(p, q)
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`.
pub fn parse_rat(s: &str) -> Result<Rational, ParseError> {
    let t = s.trim();
    let bad = || ParseError::Rational(s.to_string());
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let p = Integer::from_str(num).map_err(|_| bad())?;
    let q = Integer::from_str(den).map_err(|_| bad())?;
    if q == 0 {
        return Err(bad());
    }
    Ok(Rational::from_integers(p, q))
}

/// Always emits an explicit denominator.
pub fn fmt_rat(r: &Rational) -> String {
    let sign = if *r < 0 { "-" } else { "" };
    format!("{}{}/{}", sign, r.numerator_ref(), r.denominator_ref())
}

pub fn to_f64(r: &Rational) -> f64 {
    f64::rounding_from(r, RoundingMode::Nearest).0
}

pub fn from_f64_exact(x: f64) -> Rational {
    Rational::try_from(x).unwrap_or(Rational::ZERO)
}

pub fn is_integer(r: &Rational) -> bool {
    *r.denominator_ref() == 1u32
}

/// Numerator as a signed integer.
pub fn numerator(r: &Rational) -> Integer {
    Integer::from_sign_and_abs_ref(*r >= 0u32, r.numerator_ref())
}

pub fn denominator(r: &Rational) -> Integer {
    Integer::from(r.denominator_ref().clone())
}

/// Natural log of a positive natural number, accurate for any size.
pub fn ln_natural(n: &Natural) -> f64 {
    if *n == 0u32 {
        return f64::NEG_INFINITY;
    }
    let bits = n.significant_bits();
    if bits <= 1000 {
        return f64::rounding_from(n, RoundingMode::Nearest).0.ln();
    }
    let shift = bits - 64;
    let top: Natural = n >> shift;
    let t = f64::rounding_from(&top, RoundingMode::Nearest).0;
    t.ln() + (shift as f64) * std::f64::consts::LN_2
}

pub fn ln_abs_integer(n: &Integer) -> f64 {
    ln_natural(n.unsigned_abs_ref())
}

/// Number of decimal digits of |n| (approximate to within one).
pub fn decimal_digits(n: &Integer) -> u64 {
    let bits = n.unsigned_abs_ref().significant_bits();
    ((bits as f64) * std::f64::consts::LOG10_2).ceil() as u64
}

pub fn gcd_integers(a: &Integer, b: &Integer) -> Natural {
    a.unsigned_abs_ref().gcd(b.unsigned_abs_ref())
}

pub fn sign_of(r: &Rational) -> i32 {
    match r.sign() {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 1,
    }
}

pub fn abs_rat(r: &Rational) -> Rational {
    r.abs()
}

/// Serde adapter for a single rational stored as `"p/q"`.
pub mod serde_rat {
    use super::*;
    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = RatOrInt::deserialize(d)?;
        s.into_rat().map_err(serde::de::Error::custom)
    }
}

/// Accepts JSON strings `"p/q"` or bare integers.
#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum RatOrInt {
    S(String),
    I(i64),
}

impl RatOrInt {
    pub(crate) fn into_rat(self) -> Result<Rational, ParseError> {
        match self {
            RatOrInt::S(s) => parse_rat(&s),
            RatOrInt::I(i) => Ok(rat(i)),
        }
    }
}

/// Dense rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMat { rows, cols, data: vec![Rational::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::ONE;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        QMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| rat(v)).collect()).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        QMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = QMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if *a == 0u32 {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if *b != 0u32 {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Rational) -> QMat {
        QMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn pow(&self, e: u32) -> QMat {
        let mut acc = QMat::identity(self.rows);
        let mut base = self.clone();
        let mut k = e;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| *a == 0u32)
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(is_integer)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn max_abs(&self) -> Rational {
        self.data.iter().map(|a| a.abs()).max().unwrap_or(Rational::ZERO)
    }

    /// Gaussian elimination determinant.
    pub fn det(&self) -> Rational {
        assert!(self.is_square(), "det of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::ONE;
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| *a.get(r, c) != 0u32) else {
                return Rational::ZERO;
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            let piv = a.get(c, c).clone();
            det *= &piv;
            for r in c + 1..n {
                if *a.get(r, c) == 0u32 {
                    continue;
                }
                let f = a.get(r, c) / &piv;
                for k in c..n {
                    let v = a.get(c, k) * &f;
                    a.data[r * n + k] -= v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (QMat, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| *a.get(i, c) != 0u32) else {
                continue;
            };
            a.swap_rows(p, r);
            let inv = Rational::ONE / a.get(r, c);
            for k in 0..a.cols {
                let v = a.get(r, k) * &inv;
                a.set(r, k, v);
            }
            for i in 0..a.rows {
                if i == r || *a.get(i, c) == 0u32 {
                    continue;
                }
                let f = a.get(i, c).clone();
                for k in 0..a.cols {
                    let v = a.get(r, k) * &f;
                    a.data[i * a.cols + k] -= v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Rational::ZERO; self.cols];
                v[f] = Rational::ONE;
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut aug = QMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, Rational::ONE);
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(QMat::from_fn(n, n, |i, j| r.get(i, n + j).clone()))
    }

    /// Characteristic polynomial det(tI − A), ascending coefficients, monic.
    pub fn charpoly(&self) -> Vec<Rational> {
        assert!(self.is_square());
        let n = self.rows;
        let mut c = vec![Rational::ZERO; n + 1];
        c[n] = Rational::ONE;
        let mut m = QMat::zeros(n, n);
        for k in 1..=n {
            let mut next = self.mul(&m);
            for i in 0..n {
                let v = next.get(i, i) + &c[n - k + 1];
                next.set(i, i, v);
            }
            m = next;
            let am = self.mul(&m);
            c[n - k] = -am.trace() / Rational::from(k as u64);
        }
        c
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(self.get(i, j)))
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| self.row(i).iter().map(fmt_rat).collect()).collect()
    }

    pub fn from_strings(rows: &[Vec<String>]) -> Result<QMat, ParseError> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let c = parsed.first().map_or(0, |r| r.len());
        if parsed.iter().any(|r| r.len() != c) {
            return Err(ParseError::Shape("ragged matrix rows".into()));
        }
        Ok(QMat::from_rows(parsed))
    }
}

impl fmt::Display for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|r| r.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Serialize for QMat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<RatOrInt>> = Vec::deserialize(d)?;
        let parsed = rows
            .into_iter()
            .map(|r| r.into_iter().map(RatOrInt::into_rat).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        let c = parsed.first().map_or(0, |r| r.len());
        if parsed.iter().any(|r| r.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(QMat::from_rows(parsed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        let r = parse_rat("-6/4").unwrap();
        assert_eq!(fmt_rat(&r), "-3/2");
        assert_eq!(fmt_rat(&parse_rat("7").unwrap()), "7/1");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn det_and_inverse() {
        let a = QMat::from_i64(&[vec![0, 0, 1], vec![1, 0, 3], vec![0, 1, 0]]);
        assert_eq!(a.det(), rat(1));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), QMat::identity(3));
        let s = QMat::from_i64(&[vec![1, 2], vec![2, 4]]);
        assert!(s.inverse().is_none());
        assert_eq!(s.det(), rat(0));
    }

    #[test]
    fn charpoly_of_companion() {
        let a = QMat::from_i64(&[vec![0, 0, 1], vec![1, 0, 3], vec![0, 1, 0]]);
        assert_eq!(a.charpoly(), vec![rat(-1), rat(-3), rat(0), rat(1)]);
    }

    #[test]
    fn nullspace_is_annihilated() {
        let a = QMat::from_i64(&[vec![1, 2, 3], vec![2, 4, 6]]);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(a.mul_vec(&v).iter().all(|x| *x == 0u32));
        }
    }

    #[test]
    fn ln_of_big_natural() {
        let n = Natural::from(10u32).pow_ref(400);
        assert!((ln_natural(&n) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    trait PowRef {
        fn pow_ref(&self, e: u64) -> Natural;
    }
    impl PowRef for Natural {
        fn pow_ref(&self, e: u64) -> Natural {
            use malachite_base::num::arithmetic::traits::Pow;
            self.clone().pow(e)
        }
    }
}
