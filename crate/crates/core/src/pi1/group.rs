use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::linalg::UnimodularMatrix2;

/// α_z γ₃ⁿ, acting on the cover by (v, t) ↦ (A⁻ⁿv + z, t + n).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    #[serde(with = "bigint_pair")]
    pub z: [BigInt; 2],
    pub n: i64,
}

impl GroupElement {
    pub fn new(z: [i64; 2], n: i64) -> Self {
        GroupElement {
            z: z.map(BigInt::from),
            n,
        }
    }

    pub fn identity() -> Self {
        Self::new([0, 0], 0)
    }

    pub fn translation(z: [BigInt; 2]) -> Self {
        GroupElement { z, n: 0 }
    }

    pub fn gamma1() -> Self {
        Self::new([1, 0], 0)
    }

    pub fn gamma2() -> Self {
        Self::new([0, 1], 0)
    }

    pub fn gamma3() -> Self {
        Self::new([0, 0], 1)
    }

    pub fn is_identity(&self) -> bool {
        self.n == 0 && self.z.iter().all(Zero::is_zero)
    }

    pub fn z_f64(&self) -> [f64; 2] {
        use num_traits::ToPrimitive;
        self.z.clone().map(|x| x.to_f64().unwrap_or(f64::NAN))
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(({}, {}), {})", self.z[0], self.z[1], self.n)
    }
}

/// (z₁, n₁)(z₂, n₂) = (z₁ + A^{−n₁} z₂, n₁ + n₂)
pub fn group_mul(a: &UnimodularMatrix2, x: &GroupElement, y: &GroupElement) -> GroupElement {
    let shifted = a.pow(-x.n).mul_vec(&y.z);
    GroupElement {
        z: [&x.z[0] + &shifted[0], &x.z[1] + &shifted[1]],
        n: x.n + y.n,
    }
}

/// (z, n)⁻¹ = (−Aⁿz, −n)
pub fn group_inv(a: &UnimodularMatrix2, x: &GroupElement) -> GroupElement {
    let az = a.pow(x.n).mul_vec(&x.z);
    GroupElement {
        z: [-&az[0], -&az[1]],
        n: -x.n,
    }
}

pub fn group_pow(a: &UnimodularMatrix2, x: &GroupElement, k: i64) -> GroupElement {
    let base = if k < 0 { group_inv(a, x) } else { x.clone() };
    let mut out = GroupElement::identity();
    for _ in 0..k.unsigned_abs() {
        out = group_mul(a, &out, &base);
    }
    out
}

pub(crate) mod bigint_pair {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::linalg::int_matrix::{bigint_from_json, bigint_to_json};

    pub fn serialize<S: Serializer>(z: &[BigInt; 2], s: S) -> Result<S::Ok, S::Error> {
        use serde::Serialize;
        [bigint_to_json(&z[0]), bigint_to_json(&z[1])].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[BigInt; 2], D::Error> {
        let v = <[serde_json::Value; 2]>::deserialize(d)?;
        Ok([
            bigint_from_json(&v[0]).map_err(D::Error::custom)?,
            bigint_from_json(&v[1]).map_err(D::Error::custom)?,
        ])
    }
}
