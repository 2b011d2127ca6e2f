//! Centralizer of a hyperbolic matrix in GL(2, Z).
//!
//! Every integer matrix commuting with a non-scalar A = [[a, b], [c, d]] is
//! x·I + y·N with x, y ∈ Z and N = (A − aI)/g, g = gcd(b, c, d − a). The
//! unimodular ones form {±A₀ᵏ}; A₀ is the one of least spectral radius
//! above 1, which bounds the search window for (x, y).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::eigen::{is_hyperbolic, spectral_radius2};
use super::int_matrix::{IntMatrix2, Unimodular, UnimodularMatrix2};

/// `B = sign · A₀^power`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub sign: i8,
    pub power: i64,
}

pub fn commutes(a: &UnimodularMatrix2, b: &UnimodularMatrix2) -> bool {
    (a * b) == (b * a)
}

/// Primitive generator A₀ of the centralizer of `a`.
///
/// Among ±A₀^{±1} the canonical choice has A as a positive power up to
/// sign and positive trace.
pub fn commutant_generator(a: &UnimodularMatrix2) -> Result<UnimodularMatrix2> {
    if !is_hyperbolic(a) {
        return Err(Error::NotHyperbolic);
    }
    let m = a.matrix();
    let (ea, eb, ec, ed) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let g = eb.gcd(ec).gcd(&(ed - ea));
    let n = IntMatrix2::from_rows([
        [BigInt::zero(), eb / &g],
        [ec / &g, (ed - ea) / &g],
    ]);

    // eigenvalues of N: ((d−a) ± √disc) / (2g), disc = tr(A)² − 4 det(A)
    let tr = a.trace().to_f64().ok_or(Error::NotHyperbolic)?;
    let disc = tr * tr - 4.0 * a.det() as f64;
    let gf = g.to_f64().ok_or(Error::NotHyperbolic)?;
    let dma = (ed - ea).to_f64().ok_or(Error::NotHyperbolic)?;
    let nu_hi = (dma + disc.sqrt()) / (2.0 * gf);
    let nu_lo = (dma - disc.sqrt()) / (2.0 * gf);
    let rho_a = spectral_radius2(a);
    let y_max = (2.0 * rho_a / (nu_hi - nu_lo)).ceil() as i64 + 1;
    let nu_abs = nu_hi.abs().max(nu_lo.abs());

    let mut best: Vec<UnimodularMatrix2> = Vec::new();
    let mut best_rho = f64::INFINITY;
    for y in -y_max..=y_max {
        if y == 0 {
            continue;
        }
        let x_max = (rho_a + y.unsigned_abs() as f64 * nu_abs).ceil() as i64 + 1;
        for x in -x_max..=x_max {
            let cand = IntMatrix2::scalar(x).add(&scale(&n, y));
            let Ok(cand) = Unimodular::new(cand) else {
                continue;
            };
            let rho = spectral_radius2(&cand);
            if rho <= 1.0 + 1e-12 || rho > rho_a * (1.0 + 1e-12) {
                continue;
            }
            if rho < best_rho * (1.0 - 1e-12) {
                best_rho = rho;
                best.clear();
                best.push(cand);
            } else if rho <= best_rho * (1.0 + 1e-12) {
                best.push(cand);
            }
        }
    }
    best.into_iter()
        .filter(|c| c.trace().is_positive())
        .find(|c| matches!(power_of(c, a), Some(d) if d.power > 0))
        .ok_or(Error::NotHyperbolic)
}

fn scale(m: &IntMatrix2, c: i64) -> IntMatrix2 {
    let c = BigInt::from(c);
    IntMatrix2::from_rows(std::array::from_fn(|i| {
        std::array::from_fn(|j| m.get(i, j) * &c)
    }))
}

/// Writes `b = ±base^k` when possible (`base` hyperbolic).
fn power_of(base: &UnimodularMatrix2, b: &UnimodularMatrix2) -> Option<Decomposition> {
    if !commutes(base, b) {
        return None;
    }
    let rb = spectral_radius2(b);
    let r0 = spectral_radius2(base);
    let k = (rb.ln() / r0.ln()).round() as i64;
    for power in [k, -k] {
        let p = base.pow(power);
        if p == *b {
            return Some(Decomposition { sign: 1, power });
        }
        if -&p == *b {
            return Some(Decomposition { sign: -1, power });
        }
        if k == 0 {
            break;
        }
    }
    None
}

/// Decomposes `b = sign · a0^power`, or `None` when `b` is not of that form.
///
/// The exponent magnitude comes from the spectral radii, its sign and the
/// overall sign from exact comparison with the candidate powers.
pub fn decompose(b: &UnimodularMatrix2, a0: &UnimodularMatrix2) -> Option<Decomposition> {
    power_of(a0, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: [[i64; 2]; 2]) -> UnimodularMatrix2 {
        Unimodular::from_i64(rows).unwrap()
    }

    #[test]
    fn cat_map_generator_is_fibonacci() {
        let a0 = commutant_generator(&m([[2, 1], [1, 1]])).unwrap();
        assert_eq!(a0, m([[1, 1], [1, 0]]));
        assert_eq!(
            decompose(&m([[2, 1], [1, 1]]), &a0),
            Some(Decomposition { sign: 1, power: 2 })
        );
        assert_eq!(
            decompose(&m([[-1, 0], [0, -1]]), &a0),
            Some(Decomposition { sign: -1, power: 0 })
        );
        assert_eq!(
            decompose(&m([[0, 1], [1, -1]]), &a0),
            Some(Decomposition { sign: 1, power: -1 })
        );
        assert_eq!(decompose(&m([[1, 1], [0, 1]]), &a0), None);
    }

    #[test]
    fn primitive_matrix_generates_itself() {
        let a = m([[3, 1], [2, 1]]);
        let a0 = commutant_generator(&a).unwrap();
        assert_eq!(decompose(&a, &a0).map(|d| d.power), Some(1));
    }

    #[test]
    fn negative_trace_input() {
        let a = m([[-2, -1], [-1, -1]]);
        let a0 = commutant_generator(&a).unwrap();
        assert!(a0.trace().is_positive());
        let d = decompose(&a, &a0).unwrap();
        assert_eq!((d.sign, d.power), (-1, 2));
    }

    #[test]
    fn rejects_elliptic() {
        assert_eq!(commutant_generator(&m([[0, -1], [1, 0]])), Err(Error::NotHyperbolic));
    }
}
