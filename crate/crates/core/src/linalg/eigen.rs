use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::int_matrix::{UnimodularMatrix2, UnimodularMatrix3};

/// No eigenvalue on the unit circle.
///
/// With det = +1 the eigenvalues solve x² − τx + 1 and lie on the unit
/// circle iff |τ| ≤ 2. With det = −1 they solve x² − τx − 1, are real with
/// product −1, and have modulus one iff τ = 0.
pub fn is_hyperbolic(m: &UnimodularMatrix2) -> bool {
    let tr = m.trace();
    if m.det() == 1 {
        tr.abs() > BigInt::from(2)
    } else {
        !tr.is_zero()
    }
}

/// Unstable/stable eigen-data of a hyperbolic 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenFrame {
    pub lambda: f64,
    pub sign_u: i8,
    pub sign_s: i8,
    pub e_u: [f64; 2],
    pub e_s: [f64; 2],
}

impl EigenFrame {
    pub fn lambda_inv(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn log_lambda(&self) -> f64 {
        self.lambda.ln()
    }

    pub fn mu_u(&self) -> f64 {
        self.sign_u as f64 * self.lambda
    }

    pub fn mu_s(&self) -> f64 {
        self.sign_s as f64 / self.lambda
    }

    /// Coordinates (u, s) of `v` in the basis {e_u, e_s}.
    pub fn to_eigen(&self, v: [f64; 2]) -> [f64; 2] {
        let det = self.e_u[0] * self.e_s[1] - self.e_u[1] * self.e_s[0];
        [
            (v[0] * self.e_s[1] - v[1] * self.e_s[0]) / det,
            (self.e_u[0] * v[1] - self.e_u[1] * v[0]) / det,
        ]
    }

    pub fn from_eigen(&self, us: [f64; 2]) -> [f64; 2] {
        [
            us[0] * self.e_u[0] + us[1] * self.e_s[0],
            us[0] * self.e_u[1] + us[1] * self.e_s[1],
        ]
    }

    /// sign_u λ P_u + sign_s λ⁻¹ P_s with the oblique spectral projectors.
    pub fn reconstruct(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (j, basis) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
            let [u, s] = self.to_eigen(basis);
            let img = self.from_eigen([self.mu_u() * u, self.mu_s() * s]);
            out[0][j] = img[0];
            out[1][j] = img[1];
        }
        out
    }
}

fn normalize_direction(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    let mut e = [v[0] / n, v[1] / n];
    let first = if e[0] != 0.0 { e[0] } else { e[1] };
    if first < 0.0 {
        e = [-e[0], -e[1]];
    }
    e
}

fn eigenvector(m: &[[f64; 2]; 2], mu: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = *m;
    // two null-vector candidates of M − μI; keep the better conditioned
    let v1 = [b, mu - a];
    let v2 = [mu - d, c];
    if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
        normalize_direction(v1)
    } else {
        normalize_direction(v2)
    }
}

/// Eigen-frame from the characteristic-polynomial roots in closed form.
pub fn eigen_frame(m: &UnimodularMatrix2) -> Result<EigenFrame> {
    if !is_hyperbolic(m) {
        return Err(Error::NotHyperbolic);
    }
    let tr = m.trace().to_f64().ok_or(Error::NotHyperbolic)?;
    let det = m.det() as f64;
    let disc = tr * tr - 4.0 * det;
    let lambda = (tr.abs() + disc.sqrt()) / 2.0;
    let sign_u: i8 = if tr > 0.0 { 1 } else { -1 };
    let sign_s: i8 = if det > 0.0 { sign_u } else { -sign_u };
    let mf = m.to_f64();
    let mu_u = sign_u as f64 * lambda;
    let mu_s = sign_s as f64 / lambda;
    Ok(EigenFrame {
        lambda,
        sign_u,
        sign_s,
        e_u: eigenvector(&mf, mu_u),
        e_s: eigenvector(&mf, mu_s),
    })
}

/// Spectral radius of a 2×2 unimodular matrix (from trace and determinant).
pub fn spectral_radius2(m: &UnimodularMatrix2) -> f64 {
    let tr = m.trace().to_f64().unwrap_or(f64::INFINITY).abs();
    let det = m.det() as f64;
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        1.0
    } else {
        (tr + disc.sqrt()) / 2.0
    }
}

/// Integer coefficients (c2, c1, c0) of det(xI − M) = x³ + c2 x² + c1 x + c0.
pub fn charpoly3(m: &UnimodularMatrix3) -> [BigInt; 3] {
    let a = m.matrix();
    let tr = a.trace();
    let minors: BigInt = (0..3)
        .map(|k| {
            let (i, j) = match k {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            a.get(i, i) * a.get(j, j) - a.get(i, j) * a.get(j, i)
        })
        .sum();
    [-tr, minors, -a.det()]
}

/// Exact value of the characteristic polynomial at an integer point.
pub fn charpoly3_at(m: &UnimodularMatrix3, x: i64) -> BigInt {
    let [c2, c1, c0] = charpoly3(m);
    let x = BigInt::from(x);
    &x * &x * &x + c2 * &x * &x + c1 * &x + c0
}

/// Eigenvalue of a real 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue3 {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue3 {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Eigenvalues of an integer 3×3 matrix, sorted by modulus.
///
/// The real root is bracketed and bisected to machine precision (a real
/// cubic always has one), the remaining quadratic is solved in
/// closed form after deflation. Exact roots ±1 are detected first from
/// the integer characteristic polynomial and returned exactly.
pub fn eigenvalues3(m: &UnimodularMatrix3) -> [Eigenvalue3; 3] {
    let [c2, c1, c0] = charpoly3(m).map(|c| c.to_f64().unwrap_or(f64::NAN));
    let exact = [1i64, -1]
        .into_iter()
        .find(|&x| charpoly3_at(m, x).is_zero());
    let r = match exact {
        Some(x) => x as f64,
        None => {
            let p = |x: f64| ((x + c2) * x + c1) * x + c0;
            let bound = 1.0 + c2.abs().max(c1.abs()).max(c0.abs());
            let (mut lo, mut hi) = (-bound, bound);
            // p(-bound) < 0 < p(bound) for a monic cubic
            for _ in 0..400 {
                let mid = 0.5 * (lo + hi);
                if p(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    };
    // x³ + c2 x² + c1 x + c0 = (x − r)(x² + b x + c)
    let b = c2 + r;
    let c = c1 + r * b;
    let disc = b * b - 4.0 * c;
    let (e1, e2) = if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let (x1, x2) = if q != 0.0 { (q, c / q) } else { (0.0, -b) };
        (
            Eigenvalue3 { re: x1, im: 0.0 },
            Eigenvalue3 { re: x2, im: 0.0 },
        )
    } else {
        let im = (-disc).sqrt() / 2.0;
        (
            Eigenvalue3 { re: -b / 2.0, im },
            Eigenvalue3 { re: -b / 2.0, im: -im },
        )
    };
    let mut out = [Eigenvalue3 { re: r, im: 0.0 }, e1, e2];
    out.sort_by(|a, b| a.modulus().total_cmp(&b.modulus()));
    out
}

/// Whether any eigenvalue of an integer 3×3 unimodular matrix lies on the
/// unit circle.
///
/// The product of the moduli is 1, so a real cubic has a unit-modulus root
/// iff ±1 is a root or a complex pair has modulus 1 (then the real root
/// is ±1 as well). Both reduce to exact evaluation at ±1.
pub fn has_unit_eigenvalue3(m: &UnimodularMatrix3) -> bool {
    charpoly3_at(m, 1).is_zero() || charpoly3_at(m, -1).is_zero()
}
