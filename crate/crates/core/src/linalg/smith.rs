use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

use super::int_matrix::IntMatrix3;

type Mat = Vec<Vec<BigInt>>;

/// `u * m * v = d` with `u`, `v` unimodular and `d` diagonal, each
/// diagonal entry dividing the next.
#[derive(Clone, Debug, PartialEq)]
pub struct SmithForm {
    pub u: Mat,
    pub v: Mat,
    pub d: Mat,
}

impl SmithForm {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.len().min(self.d.first().map_or(0, Vec::len)))
            .map(|i| self.d[i][i].clone())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|x| !x.is_zero()).count()
    }
}

fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    for r in m.iter_mut() {
        r.swap(a, b);
    }
}

/// row_a -= q * row_b
fn row_axpy(m: &mut Mat, a: usize, b: usize, q: &BigInt) {
    let rb = m[b].clone();
    for (x, y) in m[a].iter_mut().zip(rb) {
        *x -= q * y;
    }
}

/// col_a -= q * col_b
fn col_axpy(m: &mut Mat, a: usize, b: usize, q: &BigInt) {
    for r in m.iter_mut() {
        let y = r[b].clone();
        r[a] -= q * y;
    }
}

pub fn smith_normal_form(m: &[Vec<BigInt>]) -> SmithForm {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut d: Mat = m.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);

    for k in 0..rows.min(cols) {
        loop {
            // smallest nonzero entry of the trailing block
            let pivot = (k..rows)
                .flat_map(|i| (k..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| !d[i][j].is_zero())
                .min_by(|&(i1, j1), &(i2, j2)| d[i1][j1].abs().cmp(&d[i2][j2].abs()));
            let Some((pi, pj)) = pivot else {
                return finish(u, v, d);
            };
            d.swap(k, pi);
            u.swap(k, pi);
            swap_cols(&mut d, k, pj);
            swap_cols(&mut v, k, pj);

            let mut clean = true;
            for i in k + 1..rows {
                let q = d[i][k].div_floor(&d[k][k]);
                if !q.is_zero() {
                    row_axpy(&mut d, i, k, &q);
                    row_axpy(&mut u, i, k, &q);
                }
                if !d[i][k].is_zero() {
                    clean = false;
                }
            }
            for j in k + 1..cols {
                let q = d[k][j].div_floor(&d[k][k]);
                if !q.is_zero() {
                    col_axpy(&mut d, j, k, &q);
                    col_axpy(&mut v, j, k, &q);
                }
                if !d[k][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility of the trailing block by the pivot
            let bad = (k + 1..rows)
                .flat_map(|i| (k + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !d[i][j].is_multiple_of(&d[k][k]));
            match bad {
                Some((i, _)) => {
                    // row_k += row_i, then re-reduce
                    let minus_one = -BigInt::one();
                    row_axpy(&mut d, k, i, &minus_one);
                    row_axpy(&mut u, k, i, &minus_one);
                }
                None => break,
            }
        }
        if d[k][k].is_negative() {
            for x in d[k].iter_mut() {
                *x = -&*x;
            }
            for x in u[k].iter_mut() {
                *x = -&*x;
            }
        }
    }
    finish(u, v, d)
}

fn finish(u: Mat, v: Mat, d: Mat) -> SmithForm {
    SmithForm { u, v, d }
}

/// Unimodular matrix whose first column is the primitive vector `v`.
pub fn complete_to_basis(v: &[BigInt; 3]) -> Result<IntMatrix3> {
    let col: Mat = v.iter().map(|x| vec![x.clone()]).collect();
    let s = smith_normal_form(&col);
    if !s.d[0][0].is_one() {
        return Err(Error::InvalidParameter(format!(
            "vector ({}, {}, {}) is not primitive",
            v[0], v[1], v[2]
        )));
    }
    // u v w = e1 with w = ±1, so v = w u⁻¹ e1
    let u = IntMatrix3::from_rows(std::array::from_fn(|i| {
        std::array::from_fn(|j| s.u[i][j].clone())
    }));
    let inv = u.adjugate();
    let sign = &s.v[0][0] * u.det();
    Ok(IntMatrix3::from_rows(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            if j == 0 {
                inv.get(i, 0) * &sign
            } else {
                inv.get(i, j) * u.det()
            }
        })
    })))
}

#[cfg(test)]
fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Mat {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let inner = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..inner).map(|k| &a[i][k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::int_matrix::bareiss_det;
    use proptest::prelude::*;

    fn big(rows: &[&[i64]]) -> Mat {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    fn check(m: &Mat) -> SmithForm {
        let s = smith_normal_form(m);
        assert_eq!(mat_mul(&mat_mul(&s.u, m), &s.v), s.d);
        assert!(bareiss_det(s.u.clone()).abs().is_one());
        assert!(bareiss_det(s.v.clone()).abs().is_one());
        let diag = s.diagonal();
        for i in 0..s.d.len() {
            for j in 0..s.d[0].len() {
                if i != j {
                    assert!(s.d[i][j].is_zero());
                }
            }
        }
        for w in diag.windows(2) {
            if !w[1].is_zero() {
                assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        assert!(diag.iter().all(|x| !x.is_negative()));
        s
    }

    #[test]
    fn diagonal_example() {
        let s = check(&big(&[&[2, 0, 0], &[0, 2, 0], &[0, 0, 0]]));
        assert_eq!(s.diagonal(), big(&[&[2, 2, 0]])[0]);
        let s = check(&big(&[&[2, 4, 4], &[-6, 6, 12], &[10, -4, -16]]));
        assert_eq!(s.diagonal(), big(&[&[2, 6, 12]])[0]);
    }

    #[test]
    fn primitive_column_vector() {
        let s = check(&big(&[&[1], &[1], &[-2]]));
        assert_eq!(s.diagonal(), vec![BigInt::one()]);
    }

    #[test]
    fn basis_completion() {
        for v in [[1i64, 1, -2], [0, 0, 1], [3, 5, 7], [-4, 6, 9]] {
            let v = v.map(BigInt::from);
            let b = complete_to_basis(&v).unwrap();
            assert!(b.det().abs().is_one());
            for i in 0..3 {
                assert_eq!(b.get(i, 0), &v[i]);
            }
        }
        assert!(complete_to_basis(&[2, 4, 6].map(BigInt::from)).is_err());
    }

    proptest! {
        #[test]
        fn smith_invariants(entries in proptest::collection::vec(-9i64..=9, 9)) {
            let m: Mat = entries.chunks(3)
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect();
            let s = check(&m);
            let det: BigInt = s.diagonal().iter().product();
            prop_assert_eq!(det.abs(), bareiss_det(m).abs());
        }
    }
}
