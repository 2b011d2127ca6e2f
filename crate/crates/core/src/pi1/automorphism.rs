use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commutant_generator, decompose, Unimodular, UnimodularMatrix2};

use super::group::{bigint_pair, group_mul, group_pow, GroupElement};

/// φ(α_z) = α_{Bz}, φ(γ₃) = α_v γ₃ᵉ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismData {
    #[serde(rename = "B")]
    pub b: UnimodularMatrix2,
    #[serde(with = "bigint_pair")]
    pub v: [BigInt; 2],
    pub e: i8,
}

impl AutomorphismData {
    pub fn new(b: UnimodularMatrix2, v: [i64; 2], e: i8) -> Self {
        AutomorphismData {
            b,
            v: v.map(BigInt::from),
            e,
        }
    }

    pub fn image_of_gamma3(&self) -> GroupElement {
        GroupElement {
            z: self.v.clone(),
            n: self.e as i64,
        }
    }
}

/// `B^j = sign · A^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerRelation {
    pub j: u32,
    pub sign: i8,
    pub k: i64,
}

/// True iff e = ±1 and Aᵉ B = B A.
pub fn validate_automorphism(a: &UnimodularMatrix2, data: &AutomorphismData) -> bool {
    if data.e != 1 && data.e != -1 {
        return false;
    }
    &a.pow(data.e as i64) * &data.b == &data.b * a
}

fn require_valid(a: &UnimodularMatrix2, data: &AutomorphismData) -> Result<()> {
    if data.e != 1 && data.e != -1 {
        return Err(Error::InvalidAutomorphism(format!("e must be ±1, got {}", data.e)));
    }
    if !validate_automorphism(a, data) {
        return Err(Error::InvalidAutomorphism(format!(
            "A^e B != B A for B = {}, e = {}",
            data.b, data.e
        )));
    }
    Ok(())
}

pub fn aut_apply(
    a: &UnimodularMatrix2,
    data: &AutomorphismData,
    g: &GroupElement,
) -> Result<GroupElement> {
    require_valid(a, data)?;
    let bz = GroupElement::translation(data.b.mul_vec(&g.z));
    let tail = group_pow(a, &data.image_of_gamma3(), g.n);
    Ok(group_mul(a, &bz, &tail))
}

/// Smallest `1 ≤ j ≤ max_j` with `B^j = ±A^k`.
pub fn power_relation(
    a: &UnimodularMatrix2,
    b: &UnimodularMatrix2,
    max_j: u32,
) -> Result<Option<PowerRelation>> {
    let a0 = commutant_generator(a)?;
    let Some(da) = decompose(a, &a0) else {
        return Ok(None);
    };
    let mut bj = b.clone();
    for j in 1..=max_j {
        if let Some(d) = decompose(&bj, &a0) {
            if d.power % da.power == 0 {
                let k = d.power / da.power;
                // A^k = da.sign^k A₀^{k·p}
                let ak_sign = if k % 2 == 0 { 1 } else { da.sign };
                return Ok(Some(PowerRelation {
                    j,
                    sign: d.sign * ak_sign,
                    k,
                }));
            }
        }
        bj = &bj * b;
    }
    Ok(None)
}

/// The values of e admitting some B with entries in [−bound, bound].
pub fn valid_e_set(a: &UnimodularMatrix2, bound: i64) -> Vec<i8> {
    let mut out = vec![1];
    if find_orientation_swapping(a, bound).is_some() {
        out.push(-1);
    }
    out
}

/// A unimodular B with A⁻¹B = BA, searched over small entries.
pub fn find_orientation_swapping(a: &UnimodularMatrix2, bound: i64) -> Option<UnimodularMatrix2> {
    let a_inv = a.inverse();
    let r = -bound..=bound;
    for p in r.clone() {
        for q in r.clone() {
            for s in r.clone() {
                for t in r.clone() {
                    let Ok(b) = Unimodular::from_i64([[p, q], [s, t]]) else {
                        continue;
                    };
                    if &a_inv * &b == &b * a {
                        return Some(b);
                    }
                }
            }
        }
    }
    None
}
