use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::rational::{rat_int, rat_to_f64};
use crate::linalg::{
    commutant_generator, decompose, solve_rational, IntMatrix2, RationalMatrix, RationalVector,
    UnimodularMatrix2,
};
use crate::sol::{CoverPoint, LeafKind, ModelLeaf, SolSpace};

use super::automorphism::{validate_automorphism, AutomorphismData};
use super::group::{bigint_pair, GroupElement};

/// Φ(x, t) = (Bx + w, e t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineModel {
    #[serde(rename = "B")]
    pub b: UnimodularMatrix2,
    pub w: RationalVector,
    pub e: i8,
}

/// Φⁿ(x, t) = (A^m x + z, t).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterateNormalForm {
    pub n: u64,
    pub m: i64,
    #[serde(with = "bigint_pair")]
    pub z: [BigInt; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoliationAction {
    Preserves,
    Swaps,
}

/// Exact point of the cover with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoint {
    pub v: [BigRational; 2],
    pub t: BigRational,
}

fn mat_rat(m: &IntMatrix2, v: &[BigRational; 2]) -> [BigRational; 2] {
    std::array::from_fn(|i| rat_int(m.get(i, 0)) * &v[0] + rat_int(m.get(i, 1)) * &v[1])
}

fn w_pair(w: &RationalVector) -> [BigRational; 2] {
    [w.get(0).clone(), w.get(1).clone()]
}

pub fn deck_apply_exact(a: &UnimodularMatrix2, g: &GroupElement, p: &RationalPoint) -> RationalPoint {
    let v = mat_rat(a.pow(-g.n).matrix(), &p.v);
    RationalPoint {
        v: [&v[0] + rat_int(&g.z[0]), &v[1] + rat_int(&g.z[1])],
        t: &p.t + BigRational::from_integer(BigInt::from(g.n)),
    }
}

impl AffineModel {
    pub fn apply_exact(&self, p: &RationalPoint) -> RationalPoint {
        let bx = mat_rat(self.b.matrix(), &p.v);
        let w = w_pair(&self.w);
        RationalPoint {
            v: [&bx[0] + &w[0], &bx[1] + &w[1]],
            t: &p.t * BigRational::from_integer(BigInt::from(self.e)),
        }
    }

    pub fn apply(&self, p: CoverPoint) -> CoverPoint {
        let b = self.b.to_f64();
        let w = self.w.to_f64();
        CoverPoint::new(
            [
                b[0][0] * p.v[0] + b[0][1] * p.v[1] + w[0],
                b[1][0] * p.v[0] + b[1][1] * p.v[1] + w[1],
            ],
            self.e as f64 * p.t,
        )
    }
}

/// Solves A^{−e} w + v = w and packages Φ.
pub fn build_model(a: &UnimodularMatrix2, data: &AutomorphismData) -> Result<AffineModel> {
    if !validate_automorphism(a, data) {
        return Err(Error::InvalidAutomorphism(format!(
            "A^e B != B A for B = {}, e = {}",
            data.b, data.e
        )));
    }
    let m = RationalMatrix::identity(2).sub(&RationalMatrix::from_int(a.pow(-(data.e as i64)).matrix()));
    let w = solve_rational(&m, &RationalVector::from_bigints(&data.v))?
        .unique()
        .ok_or(Error::SingularMatrix)?;
    Ok(AffineModel {
        b: data.b.clone(),
        w,
        e: data.e,
    })
}

/// Exact check of Φ∘γ = φ(γ)∘Φ at the given points for the given elements.
pub fn verify_conjugation(
    a: &UnimodularMatrix2,
    data: &AutomorphismData,
    model: &AffineModel,
    elements: &[GroupElement],
    points: &[RationalPoint],
) -> Result<bool> {
    for g in elements {
        let phi_g = super::aut_apply(a, data, g)?;
        for p in points {
            let lhs = model.apply_exact(&deck_apply_exact(a, g, p));
            let rhs = deck_apply_exact(a, &phi_g, &model.apply_exact(p));
            if lhs != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Least n with Φⁿ(x, t) = (A^m x + z, t), z integral.
pub fn normalize_iterate(a: &UnimodularMatrix2, model: &AffineModel) -> Result<IterateNormalForm> {
    let a0 = commutant_generator(a)?;
    let da = decompose(a, &a0).ok_or(Error::NotHyperbolic)?;
    let q = model.w.denominator_lcm();
    let bound: BigInt = BigInt::from(48) * &q * &q;
    let bound: u64 = bound.try_into().unwrap_or(u64::MAX);

    // Φⁿ = (Bⁿ x + cₙ, eⁿ t), c_{n+1} = B cₙ + w
    let w = w_pair(&model.w);
    let mut bn = model.b.clone();
    let mut c = w.clone();
    for n in 1..=bound {
        let e_n = if n % 2 == 0 { 1 } else { model.e };
        if e_n == 1 && c.iter().all(BigRational::is_integer) {
            if let Some(d) = decompose(&bn, &a0) {
                if d.power.is_multiple_of(&da.power) {
                    let m = d.power / da.power;
                    let sign_am = if m % 2 == 0 { 1 } else { da.sign };
                    if sign_am == d.sign {
                        return Ok(IterateNormalForm {
                            n,
                            m,
                            z: [c[0].to_integer(), c[1].to_integer()],
                        });
                    }
                }
            }
        }
        let bc = mat_rat(model.b.matrix(), &c);
        c = [&bc[0] + &w[0], &bc[1] + &w[1]];
        bn = &bn * &model.b;
    }
    Err(Error::NotFound { bound })
}

/// Whether Φ maps cs-leaves to cs-leaves or to cu-leaves; the claim is
/// checked on sampled leaves.
pub fn foliation_action(space: &SolSpace, model: &AffineModel) -> Result<FoliationAction> {
    let action = if model.e == 1 {
        FoliationAction::Preserves
    } else {
        FoliationAction::Swaps
    };
    let target = match action {
        FoliationAction::Preserves => LeafKind::Cs,
        FoliationAction::Swaps => LeafKind::Cu,
    };
    for u0 in [-0.7, 0.0, 1.3] {
        let pts: Vec<CoverPoint> = (0..5)
            .map(|i| {
                space.from_leaf(crate::sol::LeafCoordinates {
                    u: u0,
                    s: 0.4 * i as f64 - 1.0,
                    t: 0.3 * i as f64 - 0.5,
                })
            })
            .collect();
        let images: Vec<CoverPoint> = pts.iter().map(|&p| model.apply(p)).collect();
        let leaf: ModelLeaf = space.leaf_through(target, images[0]);
        if images.iter().any(|&p| !leaf.contains(space.to_leaf(p), 1e-9)) {
            return Err(Error::InvalidAutomorphism(format!(
                "model does not map cs-leaves to {}-leaves",
                target.name()
            )));
        }
    }
    Ok(action)
}

impl RationalPoint {
    pub fn from_ints(v: [(i64, i64); 2], t: (i64, i64)) -> Self {
        let r = |(p, q): (i64, i64)| BigRational::new(BigInt::from(p), BigInt::from(q));
        RationalPoint {
            v: [r(v[0]), r(v[1])],
            t: r(t),
        }
    }

    pub fn to_f64(&self) -> CoverPoint {
        CoverPoint::new([rat_to_f64(&self.v[0]), rat_to_f64(&self.v[1])], rat_to_f64(&self.t))
    }

    pub fn origin() -> Self {
        RationalPoint {
            v: [BigRational::zero(), BigRational::zero()],
            t: BigRational::zero(),
        }
    }
}

impl AffineModel {
    /// Exact n-fold composition.
    pub fn iterate_exact(&self, n: u64, p: &RationalPoint) -> RationalPoint {
        let mut q = p.clone();
        for _ in 0..n {
            q = self.apply_exact(&q);
        }
        q
    }

    pub fn is_identity_translation(&self) -> bool {
        self.b.matrix().is_identity() && self.w.is_zero() && self.e == 1
    }
}

impl IterateNormalForm {
    pub fn apply_exact(&self, a: &UnimodularMatrix2, p: &RationalPoint) -> RationalPoint {
        let am = mat_rat(a.pow(self.m).matrix(), &p.v);
        RationalPoint {
            v: [&am[0] + rat_int(&self.z[0]), &am[1] + rat_int(&self.z[1])],
            t: p.t.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat;
    use crate::linalg::Unimodular;
    use crate::pi1::find_orientation_swapping;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: [[i64; 2]; 2]) -> UnimodularMatrix2 {
        Unimodular::from_i64(rows).unwrap()
    }

    fn cat() -> UnimodularMatrix2 {
        m([[2, 1], [1, 1]])
    }

    fn random_point(rng: &mut ChaCha8Rng) -> RationalPoint {
        let mut r = || (rng.gen_range(-20..20), rng.gen_range(1..9));
        RationalPoint::from_ints([r(), r()], r())
    }

    fn random_word(a: &UnimodularMatrix2, rng: &mut ChaCha8Rng) -> GroupElement {
        let gens = [GroupElement::gamma1(), GroupElement::gamma2(), GroupElement::gamma3()];
        let mut g = GroupElement::identity();
        for _ in 0..rng.gen_range(1..8) {
            let s = &gens[rng.gen_range(0..3)];
            let s = if rng.gen_bool(0.5) { s.clone() } else { crate::pi1::group_inv(a, s) };
            g = crate::pi1::group_mul(a, &g, &s);
        }
        g
    }

    #[test]
    fn cat_model() {
        let a = cat();
        let data = AutomorphismData::new(a.clone(), [1, 0], 1);
        let model = build_model(&a, &data).unwrap();
        assert_eq!(model.w, RationalVector::from_ints(&[1, 1]));
        // A⁻¹w + v = w
        let ainv = a.inverse();
        let check = mat_rat(ainv.matrix(), &[rat(1, 1), rat(1, 1)]);
        assert_eq!([&check[0] + rat(1, 1), check[1].clone()], [rat(1, 1), rat(1, 1)]);
        let nf = normalize_iterate(&a, &model).unwrap();
        assert_eq!(nf, IterateNormalForm { n: 1, m: 1, z: [BigInt::from(1), BigInt::from(1)] });
    }

    #[test]
    fn zero_translation_and_minus_identity() {
        let a = cat();
        let data = AutomorphismData::new(m([[-1, 0], [0, -1]]), [0, 0], 1);
        let model = build_model(&a, &data).unwrap();
        assert!(model.w.is_zero());
        let nf = normalize_iterate(&a, &model).unwrap();
        assert_eq!(nf, IterateNormalForm { n: 2, m: 0, z: [BigInt::zero(), BigInt::zero()] });
    }

    #[test]
    fn orientation_swapping_model() {
        let a = cat();
        let b = find_orientation_swapping(&a, 8).unwrap();
        let data = AutomorphismData::new(b, [1, 0], -1);
        let model = build_model(&a, &data).unwrap();
        let space = SolSpace::new(a.clone()).unwrap();
        assert_eq!(foliation_action(&space, &model).unwrap(), FoliationAction::Swaps);
        let nf = normalize_iterate(&a, &model).unwrap();
        assert_eq!(nf.n % 2, 0);
    }

    #[test]
    fn conjugation_on_random_words() {
        let a = cat();
        let swap = find_orientation_swapping(&a, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for data in [
            AutomorphismData::new(a.clone(), [1, 0], 1),
            AutomorphismData::new(m([[1, 1], [1, 0]]), [0, 1], 1),
            AutomorphismData::new(m([[0, 1], [1, -1]]), [3, -2], 1),
            AutomorphismData::new(swap, [1, 2], -1),
        ] {
            let model = build_model(&a, &data).unwrap();
            let gens = [GroupElement::gamma1(), GroupElement::gamma2(), GroupElement::gamma3()];
            let pts: Vec<RationalPoint> = (0..10).map(|_| random_point(&mut rng)).collect();
            assert!(verify_conjugation(&a, &data, &model, &gens, &pts).unwrap());
            let words: Vec<GroupElement> = (0..100).map(|_| random_word(&a, &mut rng)).collect();
            assert!(verify_conjugation(&a, &data, &model, &words, &pts[..3]).unwrap());
        }
    }

    #[test]
    fn normal_form_is_consistent() {
        let a = cat();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for data in [
            AutomorphismData::new(m([[1, 1], [1, 0]]), [1, 0], 1),
            AutomorphismData::new(m([[-1, 0], [0, -1]]), [1, 1], 1),
            AutomorphismData::new(m([[0, -1], [-1, 1]]), [2, 1], 1),
        ] {
            let model = build_model(&a, &data).unwrap();
            let nf = normalize_iterate(&a, &model).unwrap();
            for _ in 0..20 {
                let p = random_point(&mut rng);
                let direct = model.iterate_exact(nf.n, &p);
                assert_eq!(direct, nf.apply_exact(&a, &p));
                assert_eq!(direct.t, p.t);
                let twice = nf.apply_exact(&a, &nf.apply_exact(&a, &p));
                assert_eq!(twice, model.iterate_exact(2 * nf.n, &p));
            }
        }
    }

    #[test]
    fn preserves_for_positive_e() {
        let a = cat();
        let space = SolSpace::new(a.clone()).unwrap();
        for b in [a.clone(), m([[1, 0], [0, 1]]), m([[1, 1], [1, 0]])] {
            let model = build_model(&a, &AutomorphismData::new(b, [1, 0], 1)).unwrap();
            assert_eq!(foliation_action(&space, &model).unwrap(), FoliationAction::Preserves);
        }
    }

    #[test]
    fn json_shape() {
        let a = cat();
        let model = build_model(&a, &AutomorphismData::new(m([[1, 1], [1, 0]]), [1, 0], 1)).unwrap();
        let s = serde_json::to_string(&model).unwrap();
        assert!(s.starts_with(r#"{"B":[[1,1],[1,0]],"w":["#));
        assert_eq!(serde_json::from_str::<AffineModel>(&s).unwrap(), model);
    }
}
