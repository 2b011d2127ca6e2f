use std::fmt;
use std::ops::{Mul, Neg};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Square integer matrix with arbitrary-precision entries, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix<const N: usize> {
    rows: [[BigInt; N]; N],
}

pub type IntMatrix2 = IntMatrix<2>;
pub type IntMatrix3 = IntMatrix<3>;

impl<const N: usize> IntMatrix<N> {
    pub fn from_rows(rows: [[BigInt; N]; N]) -> Self {
        Self { rows }
    }

    pub fn from_i64(rows: [[i64; N]; N]) -> Self {
        Self {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| BigInt::from(rows[i][j]))),
        }
    }

    pub fn identity() -> Self {
        Self {
            rows: std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { BigInt::one() } else { BigInt::zero() })
            }),
        }
    }

    pub fn zero() -> Self {
        Self {
            rows: std::array::from_fn(|_| std::array::from_fn(|_| BigInt::zero())),
        }
    }

    pub fn scalar(c: i64) -> Self {
        let mut m = Self::identity();
        for i in 0..N {
            m.rows[i][i] = BigInt::from(c);
        }
        m
    }

    pub fn rows(&self) -> &[[BigInt; N]; N] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.rows[i][j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| self.rows[j][i].clone())),
        }
    }

    pub fn trace(&self) -> BigInt {
        (0..N).map(|i| self.rows[i][i].clone()).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            rows: std::array::from_fn(|i| {
                std::array::from_fn(|j| &self.rows[i][j] + &other.rows[i][j])
            }),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            rows: std::array::from_fn(|i| {
                std::array::from_fn(|j| &self.rows[i][j] - &other.rows[i][j])
            }),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let rows: Vec<Vec<BigInt>> = self.rows.iter().map(|r| r.to_vec()).collect();
        bareiss_det(rows)
    }

    /// Adjugate matrix; `self * adj = det * I`.
    pub fn adjugate(&self) -> Self {
        if N == 1 {
            return Self::identity();
        }
        let mut adj = Self::zero();
        for i in 0..N {
            for j in 0..N {
                let minor: Vec<Vec<BigInt>> = (0..N)
                    .filter(|&r| r != j)
                    .map(|r| {
                        (0..N)
                            .filter(|&c| c != i)
                            .map(|c| self.rows[r][c].clone())
                            .collect()
                    })
                    .collect();
                let d = bareiss_det(minor);
                adj.rows[i][j] = if (i + j) % 2 == 0 { d } else { -d };
            }
        }
        adj
    }

    pub fn mul_vec(&self, v: &[BigInt; N]) -> [BigInt; N] {
        std::array::from_fn(|i| (0..N).map(|j| &self.rows[i][j] * &v[j]).sum())
    }

    /// Non-negative integer power by repeated squaring.
    pub fn pow_u(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_f64(&self) -> [[f64; N]; N] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| self.rows[i][j].to_f64().unwrap_or(f64::NAN))
        })
    }

    /// Entries as `i64` when they all fit.
    pub fn to_i64(&self) -> Option<[[i64; N]; N]> {
        let mut out = [[0i64; N]; N];
        for i in 0..N {
            for j in 0..N {
                out[i][j] = self.rows[i][j].to_i64()?;
            }
        }
        Some(out)
    }

    pub fn max_abs_entry(&self) -> BigInt {
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .map(|x| x.abs())
            .max()
            .unwrap_or_default()
    }

    /// Entrywise reduction into `[0, q)`.
    pub fn mod_reduce(&self, q: &BigInt) -> Self {
        Self {
            rows: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let r = &self.rows[i][j] % q;
                    if r.is_negative() {
                        r + q
                    } else {
                        r
                    }
                })
            }),
        }
    }
}

pub(crate) fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

impl<const N: usize> Mul for &IntMatrix<N> {
    type Output = IntMatrix<N>;
    fn mul(self, rhs: &IntMatrix<N>) -> IntMatrix<N> {
        IntMatrix {
            rows: std::array::from_fn(|i| {
                std::array::from_fn(|j| (0..N).map(|k| &self.rows[i][k] * &rhs.rows[k][j]).sum())
            }),
        }
    }
}

impl<const N: usize> Mul for IntMatrix<N> {
    type Output = IntMatrix<N>;
    fn mul(self, rhs: IntMatrix<N>) -> IntMatrix<N> {
        &self * &rhs
    }
}

impl<const N: usize> Neg for &IntMatrix<N> {
    type Output = IntMatrix<N>;
    fn neg(self) -> IntMatrix<N> {
        IntMatrix {
            rows: std::array::from_fn(|i| std::array::from_fn(|j| -&self.rows[i][j])),
        }
    }
}

impl<const N: usize> Neg for IntMatrix<N> {
    type Output = IntMatrix<N>;
    fn neg(self) -> IntMatrix<N> {
        -&self
    }
}

impl<const N: usize> fmt::Debug for IntMatrix<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<const N: usize> fmt::Display for IntMatrix<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in r.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Integer matrix with determinant ±1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Unimodular<const N: usize>(IntMatrix<N>);

pub type UnimodularMatrix2 = Unimodular<2>;
pub type UnimodularMatrix3 = Unimodular<3>;

impl<const N: usize> Unimodular<N> {
    pub fn new(m: IntMatrix<N>) -> Result<Self> {
        let det = m.det();
        if det.abs().is_one() {
            Ok(Self(m))
        } else {
            Err(Error::NotUnimodular {
                det: det.to_string(),
            })
        }
    }

    pub fn from_i64(rows: [[i64; N]; N]) -> Result<Self> {
        Self::new(IntMatrix::from_i64(rows))
    }

    pub fn identity() -> Self {
        Self(IntMatrix::identity())
    }

    pub fn matrix(&self) -> &IntMatrix<N> {
        &self.0
    }

    pub fn into_matrix(self) -> IntMatrix<N> {
        self.0
    }

    /// Determinant as ±1.
    pub fn det(&self) -> i64 {
        if self.0.det().is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn trace(&self) -> BigInt {
        self.0.trace()
    }

    pub fn inverse(&self) -> Self {
        let adj = self.0.adjugate();
        if self.det() == 1 {
            Self(adj)
        } else {
            Self(-adj)
        }
    }

    /// Integer power, negative exponents through the exact inverse.
    pub fn pow(&self, e: i64) -> Self {
        if e >= 0 {
            Self(self.0.pow_u(e as u64))
        } else {
            Self(self.inverse().0.pow_u(e.unsigned_abs()))
        }
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn to_f64(&self) -> [[f64; N]; N] {
        self.0.to_f64()
    }

    pub fn mul_vec(&self, v: &[BigInt; N]) -> [BigInt; N] {
        self.0.mul_vec(v)
    }
}

impl<const N: usize> Mul for &Unimodular<N> {
    type Output = Unimodular<N>;
    fn mul(self, rhs: &Unimodular<N>) -> Unimodular<N> {
        Unimodular(&self.0 * &rhs.0)
    }
}

impl<const N: usize> Neg for &Unimodular<N> {
    type Output = Unimodular<N>;
    fn neg(self) -> Unimodular<N> {
        Unimodular(-&self.0)
    }
}

impl<const N: usize> fmt::Debug for Unimodular<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const N: usize> fmt::Display for Unimodular<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// JSON: nested arrays, row-major. Entries that fit in i64 are numbers,
// larger ones decimal strings.

pub(crate) fn bigint_to_json(x: &BigInt) -> serde_json::Value {
    match x.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(x.to_string()),
    }
}

pub(crate) fn bigint_from_json(v: &serde_json::Value) -> std::result::Result<BigInt, String> {
    match v {
        serde_json::Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| format!("not an integer: {n}")),
        serde_json::Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|e| format!("bad integer {s:?}: {e}")),
        other => Err(format!("expected integer, got {other}")),
    }
}

impl<const N: usize> Serialize for IntMatrix<N> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(bigint_to_json).collect())
            .collect();
        v.serialize(s)
    }
}

impl<'de, const N: usize> Deserialize<'de> for IntMatrix<N> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v: Vec<Vec<serde_json::Value>> = Vec::deserialize(d)?;
        if v.len() != N || v.iter().any(|r| r.len() != N) {
            return Err(D::Error::custom(format!("expected a {N}x{N} matrix")));
        }
        let mut m = IntMatrix::zero();
        for (i, r) in v.iter().enumerate() {
            for (j, x) in r.iter().enumerate() {
                m.rows[i][j] = bigint_from_json(x).map_err(D::Error::custom)?;
            }
        }
        Ok(m)
    }
}

impl<const N: usize> Serialize for Unimodular<N> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de, const N: usize> Deserialize<'de> for Unimodular<N> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let m = IntMatrix::<N>::deserialize(d)?;
        Unimodular::new(m).map_err(D::Error::custom)
    }
}

impl std::str::FromStr for IntMatrix2 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl std::str::FromStr for IntMatrix3 {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl<const N: usize> std::str::FromStr for Unimodular<N>
where
    IntMatrix<N>: std::str::FromStr<Err = Error>,
{
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Unimodular::new(s.parse()?)
    }
}

/// Direct sum of a 2×2 block and a 1×1 block.
pub fn block_sum(a: &IntMatrix2, c: i64) -> IntMatrix3 {
    let mut m = IntMatrix3::zero();
    for i in 0..2 {
        for j in 0..2 {
            m.set(i, j, a.get(i, j).clone());
        }
    }
    m.set(2, 2, BigInt::from(c));
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse() {
        let a = Unimodular::from_i64([[2, 1], [1, 1]]).unwrap();
        assert_eq!(a.det(), 1);
        let inv = a.inverse();
        assert!((&a * &inv).matrix().is_identity());
        assert_eq!(inv.matrix().to_i64().unwrap(), [[1, -1], [-1, 2]]);

        let m = Unimodular::from_i64([[5, 2, 3], [2, 1, 1], [0, 0, 1]]).unwrap();
        assert!((&m * &m.inverse()).matrix().is_identity());
        assert_eq!(m.pow(-3).matrix(), m.inverse().pow(3).matrix());
    }

    #[test]
    fn rejects_non_unimodular() {
        assert!(matches!(
            Unimodular::from_i64([[2, 0], [0, 1]]),
            Err(Error::NotUnimodular { .. })
        ));
    }

    #[test]
    fn json_round_trip_with_large_entries() {
        let a = Unimodular::from_i64([[2, 1], [1, 1]]).unwrap().pow(60);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains('"'));
        let b: UnimodularMatrix2 = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        let c: UnimodularMatrix2 = "[[2,1],[1,1]]".parse().unwrap();
        assert_eq!(c.trace(), BigInt::from(3));
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let m = IntMatrix3::from_i64([[0, 2, 1], [3, 0, 4], [1, 5, 0]]);
        // 0*(0-20) - 2*(0-4) + 1*(15-0)
        assert_eq!(m.det(), BigInt::from(23));
    }
}
