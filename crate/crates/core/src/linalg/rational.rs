use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

use super::int_matrix::IntMatrix;

pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |e: &dyn fmt::Display| Error::Parse(format!("bad rational {s:?}: {e}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|e| bad(&e))?;
            let q: BigInt = q.trim().parse().map_err(|e| bad(&e))?;
            if q.is_zero() {
                return Err(bad(&"zero denominator"));
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|e| bad(&e))?)),
    }
}

pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational vector; `BigRational` keeps fractions reduced with
/// positive denominators.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalVector(Vec<BigRational>);

impl RationalVector {
    pub fn new(components: Vec<BigRational>) -> Self {
        Self(components)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![BigRational::zero(); n])
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Self(v.iter().map(|&x| rat(x, 1)).collect())
    }

    pub fn from_bigints(v: &[BigInt]) -> Self {
        Self(v.iter().map(rat_int).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[BigRational] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &BigRational {
        &self.0[i]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|x| x.denom().is_one())
    }

    /// Least common multiple of the denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self(self.0.iter().map(|a| a * c).collect())
    }

    /// Integer vector when every component is integral.
    pub fn to_integers(&self) -> Option<Vec<BigInt>> {
        self.0
            .iter()
            .map(|x| x.denom().is_one().then(|| x.numer().clone()))
            .collect()
    }

    /// Components reduced into `[0, 1)`.
    pub fn frac(&self) -> Self {
        Self(self.0.iter().map(|x| x - x.floor()).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rat_to_f64).collect()
    }
}

impl fmt::Debug for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(format_rational).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v: Vec<serde_json::Value> = Vec::deserialize(d)?;
        v.iter()
            .map(|x| match x {
                serde_json::Value::String(s) => parse_rational(s).map_err(D::Error::custom),
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(|i| rat(i, 1))
                    .ok_or_else(|| D::Error::custom("rational components must be integers or \"p/q\"")),
                _ => Err(D::Error::custom("expected \"p/q\" string")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(RationalVector)
    }
}

/// Dense rational matrix (row-major, any shape).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalMatrix {
    rows: Vec<Vec<BigRational>>,
}

impl RationalMatrix {
    pub fn new(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let n = first.len();
            if let Some(bad) = rows.iter().find(|r| r.len() != n) {
                return Err(Error::Dimension {
                    expected: n,
                    got: bad.len(),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_int<const N: usize>(m: &IntMatrix<N>) -> Self {
        Self {
            rows: m
                .rows()
                .iter()
                .map(|r| r.iter().map(rat_int).collect())
                .collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.rows[i][j]
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn mul_vec(&self, v: &RationalVector) -> Result<RationalVector> {
        if v.dim() != self.ncols() {
            return Err(Error::Dimension {
                expected: self.ncols(),
                got: v.dim(),
            });
        }
        Ok(RationalVector::new(
            self.rows
                .iter()
                .map(|r| r.iter().zip(v.components()).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }
}

/// Result of an exact linear solve.
#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Unique(RationalVector),
    /// Consistent singular system: `particular + span(nullspace)`.
    Affine {
        particular: RationalVector,
        nullspace: Vec<RationalVector>,
    },
}

impl Solution {
    pub fn unique(self) -> Option<RationalVector> {
        match self {
            Solution::Unique(x) => Some(x),
            Solution::Affine { .. } => None,
        }
    }
}

/// Solves `M x = b` exactly by fraction-free elimination.
///
/// Rows are scaled to integers and reduced by integer row combinations
/// (content removed after each step); the pivots are divided out at the end.
pub fn solve_rational(m: &RationalMatrix, b: &RationalVector) -> Result<Solution> {
    let n = m.nrows();
    let cols = m.ncols();
    if b.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.dim(),
        });
    }
    // integer augmented matrix
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let l = m.rows[i]
                .iter()
                .chain(std::iter::once(b.get(i)))
                .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            m.rows[i]
                .iter()
                .chain(std::iter::once(b.get(i)))
                .map(|x| (x * rat_int(&l)).to_integer())
                .collect()
        })
        .collect();

    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == n {
            break;
        }
        let Some(p) = (row..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let pivot_row = a[row].clone();
        for (i, r) in a.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for j in 0..=cols {
                r[j] = &r[j] * &pivot_row[col] - &factor * &pivot_row[j];
            }
            remove_content(r);
        }
        pivots.push(col);
        row += 1;
    }
    // consistency: zero rows need zero right-hand side
    if a[row..].iter().any(|r| !r[cols].is_zero()) {
        return Err(Error::SingularMatrix);
    }
    let mut particular = vec![BigRational::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = BigRational::new(a[r][cols].clone(), a[r][c].clone());
    }
    if pivots.len() == cols {
        return Ok(Solution::Unique(RationalVector::new(particular)));
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let nullspace = free
        .iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -BigRational::new(a[r][f].clone(), a[r][c].clone());
            }
            RationalVector::new(v)
        })
        .collect();
    Ok(Solution::Affine {
        particular: RationalVector::new(particular),
        nullspace,
    })
}

fn remove_content(r: &mut [BigInt]) {
    let g = r.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in r.iter_mut() {
            *x = &*x / &g;
        }
    }
}
