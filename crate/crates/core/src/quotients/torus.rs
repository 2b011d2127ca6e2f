use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::rational::rat_int;
use crate::certify::has_dominated_spectrum;
use crate::linalg::{
    det_i_minus, has_unit_eigenvalue3, smith_normal_form, IntMatrix3, RationalVector, Unimodular,
    UnimodularMatrix3,
};

const GROUP_ORDER_BOUND: usize = 64;

/// x ↦ L x + b on R³/Z³, with b reduced to [0, 1)³.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineTorusMap {
    #[serde(rename = "L")]
    pub l: UnimodularMatrix3,
    pub b: RationalVector,
}

fn mat_rat(m: &IntMatrix3, v: &RationalVector) -> RationalVector {
    RationalVector::new(
        (0..3)
            .map(|i| (0..3).map(|j| rat_int(m.get(i, j)) * v.get(j)).sum())
            .collect(),
    )
}

impl AffineTorusMap {
    pub fn new(l: UnimodularMatrix3, b: RationalVector) -> Self {
        AffineTorusMap { l, b: b.frac() }
    }

    pub fn identity() -> Self {
        Self::new(Unimodular::identity(), RationalVector::zeros(3))
    }

    pub fn translation(b: RationalVector) -> Self {
        Self::new(Unimodular::identity(), b)
    }

    pub fn is_identity(&self) -> bool {
        self.l.matrix().is_identity() && self.b.is_zero()
    }

    pub fn is_translation(&self) -> bool {
        self.l.matrix().is_identity()
    }

    /// self ∘ other
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(&self.l * &other.l, mat_rat(self.l.matrix(), &other.b).add(&self.b))
    }

    /// f ∘ self ∘ f⁻¹ for the linear map f.
    pub fn conjugate_by(&self, f: &UnimodularMatrix3) -> Self {
        Self::new(&(f * &self.l) * &f.inverse(), mat_rat(f.matrix(), &self.b))
    }

    /// φ ∘ self ∘ φ⁻¹ for φ(x) = P x + c.
    pub fn conjugate_affine(&self, p: &UnimodularMatrix3, c: &RationalVector) -> Self {
        let l = &(p * &self.l) * &p.inverse();
        let b = mat_rat(p.matrix(), &self.b)
            .add(c)
            .sub(&mat_rat(l.matrix(), c));
        Self::new(l, b)
    }
}

pub fn lefschetz(l: &UnimodularMatrix3) -> BigInt {
    det_i_minus(l)
}

/// Whether (I − L)x ≡ b (mod Z³) has a real solution.
///
/// With U(I − L)V = D in Smith form, solvability reduces to (U b)ᵢ ∈ Z for
/// every zero diagonal entry dᵢ.
pub fn has_fixed_point(m: &AffineTorusMap) -> bool {
    let i_minus = IntMatrix3::identity().sub(m.l.matrix());
    let rows: Vec<Vec<BigInt>> = i_minus.rows().iter().map(|r| r.to_vec()).collect();
    let snf = smith_normal_form(&rows);
    let diag = snf.diagonal();
    (0..3).filter(|&i| diag[i].is_zero()).all(|i| {
        let ub: BigRational = (0..3).map(|j| rat_int(&snf.u[i][j]) * m.b.get(j)).sum();
        ub.is_integer()
    })
}

/// The finite group generated by `gens`, or `None` past the order bound.
pub fn group_closure(gens: &[AffineTorusMap]) -> Option<Vec<AffineTorusMap>> {
    let mut elems = vec![AffineTorusMap::identity()];
    let mut frontier = vec![AffineTorusMap::identity()];
    while let Some(g) = frontier.pop() {
        for s in gens {
            let h = s.compose(&g);
            if !elems.contains(&h) {
                if elems.len() >= GROUP_ORDER_BOUND {
                    return None;
                }
                elems.push(h.clone());
                frontier.push(h);
            }
        }
    }
    Some(elems)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Torus,
    FlatDoubleCover,
    NilDoubleCover,
    Nilmanifold,
    Invalid,
}

/// B/c block data of a non-translation element: Lv = c v on the fixed line
/// of f_*, and L = B·Id on the quotient plane.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTag {
    pub element: AffineTorusMap,
    #[serde(rename = "B")]
    pub b: i8,
    pub c: i8,
    pub case: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientVerdict {
    pub classification: Classification,
    pub group_order: usize,
    pub translations: usize,
    pub details: Vec<CaseTag>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

impl QuotientVerdict {
    fn invalid(reason: impl Into<String>) -> Self {
        QuotientVerdict {
            classification: Classification::Invalid,
            group_order: 0,
            translations: 0,
            details: Vec::new(),
            reason: Some(reason.into()),
        }
    }
}

/// Primitive integer generator of ker(M − I) when it has rank one.
fn fixed_line(m: &UnimodularMatrix3) -> Option<[BigInt; 3]> {
    let k = IntMatrix3::identity().sub(m.matrix());
    let rows: Vec<Vec<BigInt>> = k.rows().iter().map(|r| r.to_vec()).collect();
    let snf = smith_normal_form(&rows);
    let diag = snf.diagonal();
    let zeros: Vec<usize> = (0..3).filter(|&i| diag[i].is_zero()).collect();
    if zeros.len() != 1 {
        return None;
    }
    let j = zeros[0];
    Some(std::array::from_fn(|i| snf.v[i][j].clone()))
}

fn block_tag(l: &UnimodularMatrix3, v: &[BigInt; 3]) -> Option<(i8, i8)> {
    let lv = l.mul_vec(v);
    let c = if lv == *v {
        1
    } else if lv.iter().zip(v).all(|(a, b)| *a == -b) {
        -1
    } else {
        return None;
    };
    // L − B·Id must map R³ into the line R v for B = ±1
    for b in [1i64, -1] {
        let r = l.matrix().sub(&IntMatrix3::scalar(b));
        let in_line = (0..3).all(|j| {
            let col: [BigInt; 3] = std::array::from_fn(|i| r.get(i, j).clone());
            cross_is_zero(&col, v)
        });
        if in_line {
            return Some((b as i8, c));
        }
    }
    None
}

fn cross_is_zero(a: &[BigInt; 3], b: &[BigInt; 3]) -> bool {
    (&a[1] * &b[2] - &a[2] * &b[1]).is_zero()
        && (&a[2] * &b[0] - &a[0] * &b[2]).is_zero()
        && (&a[0] * &b[1] - &a[1] * &b[0]).is_zero()
}

/// Classifies T³/Γ for a finite group Γ of affine maps normalized by f_*.
pub fn classify_t3_quotient(gens: &[AffineTorusMap], f_star: &UnimodularMatrix3) -> Result<QuotientVerdict> {
    let Some(group) = group_closure(gens) else {
        return Ok(QuotientVerdict::invalid(format!(
            "generators do not close to a group of order at most {GROUP_ORDER_BOUND}"
        )));
    };
    if let Some(g) = group.iter().find(|g| !g.is_identity() && has_fixed_point(g)) {
        return Ok(QuotientVerdict::invalid(format!(
            "element L = {}, b = {:?} has a fixed point",
            g.l, g.b
        )));
    }
    if let Some(g) = group.iter().find(|g| !group.contains(&g.conjugate_by(f_star))) {
        return Ok(QuotientVerdict::invalid(format!(
            "f_star does not normalize the group (conjugate of L = {} leaves it)",
            g.l
        )));
    }
    let translations = group.iter().filter(|g| g.is_translation()).count();
    let non_translations: Vec<&AffineTorusMap> = group.iter().filter(|g| !g.is_translation()).collect();
    let base = |classification| QuotientVerdict {
        classification,
        group_order: group.len(),
        translations,
        details: Vec::new(),
        reason: None,
    };

    if !has_unit_eigenvalue3(f_star) {
        if non_translations.is_empty() {
            return Ok(base(Classification::Torus));
        }
        return Ok(QuotientVerdict::invalid(
            "f_star is hyperbolic, so every element must be a translation",
        ));
    }
    if !has_dominated_spectrum(f_star) {
        return Ok(QuotientVerdict::invalid(
            "eigenvalues of f_star are neither hyperbolic nor |l1| < |l2| = 1 < |l3|",
        ));
    }
    if non_translations.is_empty() {
        return Ok(base(Classification::Torus));
    }
    // f² has eigenvalue +1; its fixed line is the v of the block form
    let f2 = f_star * f_star;
    let Some(v) = fixed_line(&f2) else {
        return Ok(QuotientVerdict::invalid("f_star² has no rank-one fixed lattice"));
    };
    let mut details = Vec::new();
    for g in &non_translations {
        let Some((b, c)) = block_tag(&g.l, &v) else {
            return Ok(QuotientVerdict::invalid(format!(
                "linear part {} is not of the form (±Id, ±1) in the block basis",
                g.l
            )));
        };
        let case = match (b, c) {
            (1, 1) => 1,
            (-1, -1) => 2,
            (1, -1) => 3,
            _ => 4,
        };
        if case <= 2 {
            return Ok(QuotientVerdict::invalid(format!(
                "element with B = {b}Id, c = {c} is excluded (case {case})"
            )));
        }
        details.push(CaseTag {
            element: (*g).clone(),
            b,
            c,
            case,
        });
    }
    // Γ/Γ₀ is generated by the linear parts; a double cover needs exactly
    // one non-identity linear part
    let distinct = non_translations.iter().fold(Vec::<&UnimodularMatrix3>::new(), |mut acc, g| {
        if !acc.contains(&&g.l) {
            acc.push(&g.l);
        }
        acc
    });
    if distinct.len() != 1 {
        return Ok(QuotientVerdict::invalid(
            "more than one non-trivial linear part: products fall into an excluded case",
        ));
    }
    let mut verdict = base(Classification::FlatDoubleCover);
    verdict.details = details;
    Ok(verdict)
}

impl AffineTorusMap {
    pub fn from_ints(l: [[i64; 3]; 3], b: [(i64, i64); 3]) -> Result<Self> {
        let b = RationalVector::new(
            b.iter()
                .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
                .collect(),
        );
        Ok(Self::new(Unimodular::from_i64(l)?, b))
    }
}
