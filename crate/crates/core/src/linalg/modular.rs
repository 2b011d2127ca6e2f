use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

use super::int_matrix::{IntMatrix, UnimodularMatrix2, UnimodularMatrix3};

/// Least `l >= 1` with `m^l = I (mod q)`.
pub fn matrix_order_mod(m: &UnimodularMatrix2, q: &BigInt) -> Result<u64> {
    if q.is_zero() {
        return Err(Error::ZeroModulus);
    }
    if q.is_negative() {
        return Err(Error::InvalidParameter(format!("modulus {q} is negative")));
    }
    if q.is_one() {
        return Ok(1);
    }
    let base = m.matrix().mod_reduce(q);
    let id = IntMatrix::<2>::identity();
    let mut p = base.clone();
    let mut l = 1u64;
    while p != id {
        p = (&p * &base).mod_reduce(q);
        l += 1;
    }
    Ok(l)
}

/// Exact `det(I - m)`.
pub fn det_i_minus(m: &UnimodularMatrix3) -> BigInt {
    IntMatrix::<3>::identity().sub(m.matrix()).det()
}
