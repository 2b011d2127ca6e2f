use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{charpoly3, eigen_frame, eigenvalues3, UnimodularMatrix2, UnimodularMatrix3};
use crate::pi1::AffineModel;

use super::certificate::{PHCertificate, Rates};

/// Discriminant of the monic cubic x³ + b x² + c x + d.
fn cubic_discriminant(b: &BigInt, c: &BigInt, d: &BigInt) -> BigInt {
    BigInt::from(18) * b * c * d - BigInt::from(4) * b * b * b * d + b * b * c * c
        - BigInt::from(4) * c * c * c
        - BigInt::from(27) * d * d
}

/// Exact test of |λ₁| < |λ₂| < |λ₃| and |λ₁| < 1 < |λ₃|.
///
/// Distinct moduli need three distinct real roots (discriminant > 0) and no
/// pair ±r, which would force d = b·c. With product of moduli 1 and distinct
/// moduli the outer inequalities follow.
pub fn has_dominated_spectrum(m: &UnimodularMatrix3) -> bool {
    let [b, c, d] = charpoly3(m);
    let disc = cubic_discriminant(&b, &c, &d);
    if !disc.is_positive() {
        return false;
    }
    let pm_pair = c.is_negative() && d == &b * &c;
    !pm_pair
}

pub fn certify_linear_t3(m: &UnimodularMatrix3) -> PHCertificate {
    let ev = eigenvalues3(m);
    let rates = Rates {
        s_lower: ev[0].modulus(),
        s_upper: ev[0].modulus(),
        c_lower: ev[1].modulus(),
        c_upper: ev[1].modulus(),
        u_lower: ev[2].modulus(),
    };
    PHCertificate::from_rates(1, rates, has_dominated_spectrum(m))
}

/// The time-k map (v, t) ↦ (Bv + w, t + k) in the sol metric.
pub fn certify_model_sol(a: &UnimodularMatrix2, model: &AffineModel, k: i64) -> Result<PHCertificate> {
    if model.e != 1 {
        return Err(Error::InvalidParameter("model must preserve orientation of the flow (e = +1)".into()));
    }
    let frame = eigen_frame(a)?;
    let b = model.b.to_f64();
    let image = |e: [f64; 2]| [b[0][0] * e[0] + b[0][1] * e[1], b[1][0] * e[0] + b[1][1] * e[1]];
    let beta_u = frame.to_eigen(image(frame.e_u))[0].abs();
    let beta_s = frame.to_eigen(image(frame.e_s))[1].abs();
    let lk = frame.lambda.powi(k as i32);
    let u = beta_u * lk;
    let s = beta_s / lk;
    let rates = Rates {
        s_lower: s,
        s_upper: s,
        c_lower: 1.0,
        c_upper: 1.0,
        u_lower: u,
    };
    Ok(PHCertificate::from_rates(1, rates, rates.is_dominated()))
}

/// Topological entropy of the hyperbolic toral automorphism: log λ.
pub fn htop(a: &UnimodularMatrix2) -> Result<f64> {
    Ok(eigen_frame(a)?.log_lambda())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionVerdict {
    pub htop: f64,
    pub gamma2_log: f64,
    pub incompatible: bool,
    /// htop − gamma2_log; incompatibility iff this is ≥ 0.
    pub margin: f64,
    pub inequality: String,
}

/// An absolute center bound log γ₂ ≤ h_top(A) is impossible for a map with
/// an invariant cs-torus over A.
pub fn cs_torus_obstruction(a: &UnimodularMatrix2, gamma2_log: f64) -> Result<ObstructionVerdict> {
    let h = htop(a)?;
    let incompatible = gamma2_log <= h;
    let inequality = if incompatible {
        format!("log gamma2 = {gamma2_log} <= htop(A) = {h}")
    } else {
        format!("log gamma2 = {gamma2_log} > htop(A) = {h}")
    };
    Ok(ObstructionVerdict {
        htop: h,
        gamma2_log,
        incompatible,
        margin: h - gamma2_log,
        inequality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::Flavor;
    use crate::linalg::{block_sum, IntMatrix2, Unimodular};
    use crate::pi1::{build_model, AutomorphismData};

    fn m3(rows: [[i64; 3]; 3]) -> UnimodularMatrix3 {
        Unimodular::from_i64(rows).unwrap()
    }

    fn cat() -> UnimodularMatrix2 {
        Unimodular::from_i64([[2, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn linear_examples() {
        let c = certify_linear_t3(&m3([[2, 1, 0], [1, 1, 0], [0, 0, 1]]));
        assert_eq!(c.flavor, Flavor::Absolute);
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((c.rates.s_upper - 1.0 / l).abs() < 1e-12);
        assert!((c.rates.c_lower - 1.0).abs() < 1e-15);
        assert!((c.rates.u_lower - l).abs() < 1e-12);
        assert_eq!(certify_linear_t3(&Unimodular::identity()).flavor, Flavor::None);
        for m in [
            [[3, 1, 0], [2, 1, 0], [0, 0, 1]],
            [[5, 2, 3], [2, 1, 1], [0, 0, 1]],
        ] {
            assert_eq!(certify_linear_t3(&m3(m)).flavor, Flavor::Absolute);
        }
    }

    #[test]
    fn exact_spectrum_test_matches_brute_force() {
        // moduli from numeric roots agree with the exact decision away from ties
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                for c in -2i64..=2 {
                    for d in -1i64..=1 {
                        let rows = [[a, b, 1], [c, d, 0], [1, 0, 0]];
                        let Ok(m) = Unimodular::from_i64(rows) else { continue };
                        let ev = eigenvalues3(&m);
                        let complex = ev.iter().any(|e| e.im.abs() > 1e-9);
                        let mods: Vec<f64> = ev.iter().map(|e| e.modulus()).collect();
                        let gap = (mods[1] - mods[0]).min(mods[2] - mods[1]);
                        if gap.abs() < 1e-6 && !complex {
                            assert!(!has_dominated_spectrum(&m), "{rows:?}");
                            continue;
                        }
                        let numeric = !complex && gap > 0.0 && mods[0] < 1.0 && mods[2] > 1.0;
                        assert_eq!(has_dominated_spectrum(&m), numeric, "{rows:?} {ev:?}");
                    }
                }
            }
        }
        let pm = Unimodular::new(block_sum(&IntMatrix2::from_i64([[2, 1], [1, 1]]), -1)).unwrap();
        assert!(has_dominated_spectrum(&pm));
        assert!(!has_dominated_spectrum(&m3([[0, 1, 0], [1, 0, 0], [0, 0, 1]])));
    }

    #[test]
    fn sol_model_rates() {
        let a = cat();
        let l = (3.0 + 5f64.sqrt()) / 2.0;
        let id = build_model(&a, &AutomorphismData::new(Unimodular::identity(), [0, 0], 1)).unwrap();
        let c1 = certify_model_sol(&a, &id, 1).unwrap();
        assert_eq!(c1.flavor, Flavor::Absolute);
        assert!((c1.rates.s_upper - 1.0 / l).abs() < 1e-12 && (c1.rates.u_lower - l).abs() < 1e-12);
        assert_eq!(certify_model_sol(&a, &id, 0).unwrap().flavor, Flavor::None);
        let c2 = certify_model_sol(&a, &id, 2).unwrap();
        assert!((c2.rates.u_lower - c1.rates.u_lower.powi(2)).abs() < 1e-12);
        assert!((c2.rates.s_upper - c1.rates.s_upper.powi(2)).abs() < 1e-12);
        let neg = build_model(&a, &AutomorphismData::new(-&Unimodular::identity(), [0, 0], 1)).unwrap();
        assert_eq!(certify_model_sol(&a, &neg, 0).unwrap().flavor, Flavor::None);
        // B = A⁻¹ cancels the unit height shift
        let inv = build_model(&a, &AutomorphismData::new(a.inverse(), [0, 0], 1)).unwrap();
        assert_eq!(certify_model_sol(&a, &inv, 1).unwrap().flavor, Flavor::None);
    }

    #[test]
    fn entropy_and_obstruction() {
        let a = cat();
        let h = htop(&a).unwrap();
        assert!((h - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert!((h - 0.9624).abs() < 1e-4);
        let g = Unimodular::from_i64([[1, 1], [1, 0]]).unwrap();
        assert!((htop(&g).unwrap() - 0.4812).abs() < 1e-4);
        assert!((htop(&(&a * &a)).unwrap() - 2.0 * h).abs() < 1e-12);
        assert!(cs_torus_obstruction(&a, 0.5).unwrap().incompatible);
        assert!(!cs_torus_obstruction(&a, h + 1.0).unwrap().incompatible);
        let tie = cs_torus_obstruction(&a, h).unwrap();
        assert!(tie.incompatible && tie.margin == 0.0);
        let ell = Unimodular::from_i64([[0, -1], [1, 0]]).unwrap();
        assert_eq!(htop(&ell), Err(Error::NotHyperbolic));
    }
}
