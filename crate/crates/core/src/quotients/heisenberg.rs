use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::rational::{format_rational, parse_rational};
use crate::linalg::{IntMatrix2, IntMatrix3, Unimodular, UnimodularMatrix2};

use super::torus::Classification;

/// The upper-triangular matrix [[1, x, z], [0, 1, y], [0, 0, 1]].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeisenbergElement {
    pub x: BigRational,
    pub y: BigRational,
    pub z: BigRational,
}

impl Serialize for HeisenbergElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.x, &self.y, &self.z].map(format_rational).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HeisenbergElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let [x, y, z] = <[String; 3]>::deserialize(d)?;
        let p = |s: &str| parse_rational(s).map_err(D::Error::custom);
        Ok(HeisenbergElement { x: p(&x)?, y: p(&y)?, z: p(&z)? })
    }
}

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

impl HeisenbergElement {
    pub fn new(x: BigRational, y: BigRational, z: BigRational) -> Self {
        HeisenbergElement { x, y, z }
    }

    pub fn from_ints(x: (i64, i64), y: (i64, i64), z: (i64, i64)) -> Self {
        Self::new(r(x.0, x.1), r(y.0, y.1), r(z.0, z.1))
    }

    pub fn identity() -> Self {
        Self::new(BigRational::zero(), BigRational::zero(), BigRational::zero())
    }

    pub fn x_gen() -> Self {
        Self::from_ints((1, 1), (0, 1), (0, 1))
    }

    pub fn y_gen() -> Self {
        Self::from_ints((0, 1), (1, 1), (0, 1))
    }

    /// (0, 0, z)
    pub fn central(z: BigRational) -> Self {
        Self::new(BigRational::zero(), BigRational::zero(), z)
    }

    pub fn inverse(&self) -> Self {
        Self::new(-&self.x, -&self.y, &self.x * &self.y - &self.z)
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.y.is_zero() && self.z.is_zero()
    }
}

/// (x₁, y₁, z₁)(x₂, y₂, z₂) = (x₁ + x₂, y₁ + y₂, z₁ + z₂ + x₁y₂)
pub fn heis_mul(a: &HeisenbergElement, b: &HeisenbergElement) -> HeisenbergElement {
    HeisenbergElement::new(&a.x + &b.x, &a.y + &b.y, &a.z + &b.z + &a.x * &b.y)
}

pub fn commutator(a: &HeisenbergElement, b: &HeisenbergElement) -> HeisenbergElement {
    heis_mul(&heis_mul(&heis_mul(a, b), &a.inverse()), &b.inverse())
}

/// Membership in Γ_k: x, y ∈ Z and z ∈ (1/k)Z.
pub fn in_lattice(g: &HeisenbergElement, k: u64) -> bool {
    g.x.is_integer() && g.y.is_integer() && (&g.z * BigRational::from_integer(BigInt::from(k))).is_integer()
}

/// τ_k(x, y, z) = (−x, −y, z + 1/(2k)), defined for even k.
pub fn tau_k(g: &HeisenbergElement, k: u64) -> Result<HeisenbergElement> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::OddLevel(k));
    }
    Ok(flip_times(g, &HeisenbergElement::central(r(1, 2 * k as i64))))
}

/// h ↦ ι(h)·c with ι(x, y, z) = (−x, −y, z), an automorphism.
pub fn flip_times(h: &HeisenbergElement, c: &HeisenbergElement) -> HeisenbergElement {
    heis_mul(&HeisenbergElement::new(-&h.x, -&h.y, h.z.clone()), c)
}

/// The partially hyperbolic example map, read entry by entry from its
/// matrix form: (x, y, z) ↦ (5x + 2y, 2y + z, z + 5x² + y² + 4xy).
pub fn heis_example_map(g: &HeisenbergElement) -> HeisenbergElement {
    let (x, y, z) = (&g.x, &g.y, &g.z);
    let c = |n: i64| BigRational::from_integer(BigInt::from(n));
    HeisenbergElement::new(
        c(5) * x + c(2) * y,
        c(2) * y + z,
        z + c(5) * x * x + y * y + c(4) * x * y,
    )
}

/// The automorphism with abelianization block [[5, 2], [2, 1]] and the
/// same quadratic correction: (x, y, z) ↦ (5x + 2y, 2x + y, z + 5x² + y² + 4xy).
pub fn heis_example_automorphism(g: &HeisenbergElement) -> HeisenbergElement {
    let (x, y, z) = (&g.x, &g.y, &g.z);
    let c = |n: i64| BigRational::from_integer(BigInt::from(n));
    HeisenbergElement::new(
        c(5) * x + c(2) * y,
        c(2) * x + y,
        z + c(5) * x * x + y * y + c(4) * x * y,
    )
}

/// Whether `f(ab) = f(a) f(b)` on all pairs from `samples`.
pub fn is_homomorphism_on(f: impl Fn(&HeisenbergElement) -> HeisenbergElement, samples: &[HeisenbergElement]) -> bool {
    samples.iter().all(|a| {
        samples
            .iter()
            .all(|b| f(&heis_mul(a, b)) == heis_mul(&f(a), &f(b)))
    })
}

/// Whether `f` maps Γ_k into Γ_k on the given samples.
pub fn preserves_lattice_on(
    f: impl Fn(&HeisenbergElement) -> HeisenbergElement,
    k: u64,
    samples: &[HeisenbergElement],
) -> bool {
    samples.iter().filter(|g| in_lattice(g, k)).all(|g| in_lattice(&f(g), k))
}

/// Lie-algebra automorphism matrix [[A, 0], [*, *, m]] ↦ (A, det A).
pub fn induced_h1_block(m: &IntMatrix3) -> Result<(UnimodularMatrix2, i64)> {
    if !m.get(0, 2).is_zero() || !m.get(1, 2).is_zero() {
        return Err(Error::CenterNotPreserved);
    }
    let a = Unimodular::new(IntMatrix2::from_rows([
        [m.get(0, 0).clone(), m.get(0, 1).clone()],
        [m.get(1, 0).clone(), m.get(1, 1).clone()],
    ]))?;
    let det = a.det();
    if *m.get(2, 2) != BigInt::from(det) {
        return Err(Error::InvalidAutomorphism(format!(
            "center multiplier {} differs from det A = {det}",
            m.get(2, 2)
        )));
    }
    Ok((a, det))
}

/// Linear part of a polynomial map of degree at most two that fixes the
/// identity, in the coordinates (x, y, z).
pub fn linear_part(f: impl Fn(&HeisenbergElement) -> HeisenbergElement) -> IntMatrix3 {
    let cols = [
        HeisenbergElement::x_gen(),
        HeisenbergElement::y_gen(),
        HeisenbergElement::central(BigRational::one()),
    ]
    .map(|e| {
        // the quadratic terms cancel in (f(e) − f(−e)) / 2
        let p = f(&e);
        let q = f(&HeisenbergElement::new(-&e.x, -&e.y, -&e.z));
        [
            (&p.x - &q.x) / r(2, 1),
            (&p.y - &q.y) / r(2, 1),
            (&p.z - &q.z) / r(2, 1),
        ]
    });
    IntMatrix3::from_rows(std::array::from_fn(|i| {
        std::array::from_fn(|j| cols[j][i].to_integer())
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NilVerdict {
    pub classification: Classification,
    pub k: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

/// Whether h ↦ ι(h)·c has a fixed point on H/Γ_k, i.e. ι(h)c = hγ for
/// some h ∈ H, γ ∈ Γ_k.
///
/// Writing γ = (a, b, w) forces x = (c₁ − a)/2, y = (c₂ − b)/2 and
/// w = c₃ − 2xc₂ + 2xy; k·w mod 1 is periodic in (a, b), so a finite
/// search decides it.
pub fn flip_has_fixed_point(c: &HeisenbergElement, k: u64) -> bool {
    let den = c.x.denom().lcm(c.y.denom()).lcm(c.z.denom());
    let period: i64 = (BigInt::from(4 * k) * den * BigInt::from(2)).try_into().unwrap_or(i64::MAX).min(4096);
    let two = r(2, 1);
    for a in 0..period {
        for b in 0..period {
            let x = (&c.x - r(a, 1)) / &two;
            let y = (&c.y - r(b, 1)) / &two;
            let w = &c.z - &two * &x * &c.y + &two * &x * &y;
            if (w * BigRational::from_integer(BigInt::from(k))).is_integer() {
                return true;
            }
        }
    }
    false
}

/// Classifies H/⟨Γ_k, flips⟩ where each flip acts by h ↦ ι(h)·c.
pub fn classify_nil_quotient(k: u64, flips: &[HeisenbergElement]) -> NilVerdict {
    let verdict = |classification, reason: Option<String>| NilVerdict { classification, k, reason };
    if k == 0 {
        return verdict(Classification::Invalid, Some("k must be positive".into()));
    }
    if flips.is_empty() {
        return verdict(Classification::Nilmanifold, None);
    }
    for c in flips {
        if flip_has_fixed_point(c, k) {
            return verdict(Classification::Invalid, Some(format!("flip by {c:?} has a fixed point")));
        }
    }
    // f_c(hγ) = f_c(h)·c⁻¹ι(γ)c, so c⁻¹ι(γ)c must stay in Γ_k
    let gens = [
        HeisenbergElement::x_gen(),
        HeisenbergElement::y_gen(),
        HeisenbergElement::central(r(1, k as i64)),
    ];
    for c in flips {
        for g in &gens {
            let conj = heis_mul(&c.inverse(), &flip_times(g, c));
            if !in_lattice(&conj, k) {
                return verdict(
                    Classification::Invalid,
                    Some(format!("flip by {c:?} does not normalize the lattice")),
                );
            }
        }
    }
    // f_c ∘ f_d (h) = h ι(d) c must lie in Γ_k for Γ/Γ_k to have order two
    for c in flips {
        for d in flips {
            let prod = heis_mul(&flip_times(&HeisenbergElement::identity(), d), c);
            if !in_lattice(&prod, k) {
                return verdict(
                    Classification::Invalid,
                    Some(format!("product of flips {d:?}, {c:?} is not in the lattice")),
                );
            }
        }
    }
    verdict(Classification::NilDoubleCover, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h(x: (i64, i64), y: (i64, i64), z: (i64, i64)) -> HeisenbergElement {
        HeisenbergElement::from_ints(x, y, z)
    }

    fn random(rng: &mut ChaCha8Rng) -> HeisenbergElement {
        let mut q = || (rng.gen_range(-9..10), rng.gen_range(1..6));
        h(q(), q(), q())
    }

    /// Matrix product of the upper-triangular representatives.
    fn matrix_mul(a: &HeisenbergElement, b: &HeisenbergElement) -> HeisenbergElement {
        let m = |g: &HeisenbergElement| {
            [
                [BigRational::one(), g.x.clone(), g.z.clone()],
                [BigRational::zero(), BigRational::one(), g.y.clone()],
                [BigRational::zero(), BigRational::zero(), BigRational::one()],
            ]
        };
        let (p, q) = (m(a), m(b));
        let e = |i: usize, j: usize| -> BigRational { (0..3).map(|l| &p[i][l] * &q[l][j]).sum() };
        HeisenbergElement::new(e(0, 1), e(1, 2), e(0, 2))
    }

    #[test]
    fn law_matches_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let (a, b, c) = (random(&mut rng), random(&mut rng), random(&mut rng));
            assert_eq!(heis_mul(&a, &b), matrix_mul(&a, &b));
            assert_eq!(heis_mul(&heis_mul(&a, &b), &c), heis_mul(&a, &heis_mul(&b, &c)));
            assert!(heis_mul(&a, &a.inverse()).is_identity());
        }
    }

    #[test]
    fn commutator_is_central_generator() {
        let c = commutator(&HeisenbergElement::x_gen(), &HeisenbergElement::y_gen());
        assert_eq!(c, h((0, 1), (0, 1), (1, 1)));
        let e = HeisenbergElement::identity();
        let g = h((3, 2), (-1, 3), (5, 7));
        assert_eq!(heis_mul(&e, &g), g);
        let z = HeisenbergElement::central(r(4, 9));
        assert_eq!(heis_mul(&z, &g), heis_mul(&g, &z));
    }

    #[test]
    fn lattice() {
        for k in 1..6u64 {
            assert!(in_lattice(&h((1, 1), (0, 1), (1, k as i64)), k));
        }
        assert!(!in_lattice(&h((1, 2), (0, 1), (0, 1)), 3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = 6u64;
        for _ in 0..500 {
            let mut g = || h((rng.gen_range(-5..5), 1), (rng.gen_range(-5..5), 1), (rng.gen_range(-9..9), k as i64));
            let (a, b) = (g(), g());
            assert!(in_lattice(&heis_mul(&a, &b), k));
            assert!(in_lattice(&a.inverse(), k));
        }
    }

    #[test]
    fn tau() {
        let k = 4u64;
        let e = HeisenbergElement::identity();
        assert_eq!(tau_k(&e, k).unwrap(), h((0, 1), (0, 1), (1, 8)));
        let twice = tau_k(&tau_k(&e, k).unwrap(), k).unwrap();
        assert_eq!(twice, h((0, 1), (0, 1), (1, 4)));
        assert!(in_lattice(&twice, k));
        assert_eq!(tau_k(&HeisenbergElement::x_gen(), k).unwrap(), h((-1, 1), (0, 1), (1, 8)));
        assert_eq!(tau_k(&e, 3), Err(Error::OddLevel(3)));
        // τ_k² is right multiplication by the central 1/k element everywhere
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let g = random(&mut rng);
            let t2 = tau_k(&tau_k(&g, k).unwrap(), k).unwrap();
            assert_eq!(t2, heis_mul(&g, &HeisenbergElement::central(r(1, k as i64))));
        }
    }

    #[test]
    fn tau_normalizes_lattice() {
        let k = 2u64;
        let gens = [
            HeisenbergElement::x_gen(),
            HeisenbergElement::y_gen(),
            HeisenbergElement::central(r(1, k as i64)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for g in &gens {
            let mut seen = None;
            for _ in 0..20 {
                let p = random(&mut rng);
                let tp = tau_k(&p, k).unwrap();
                let tpg = tau_k(&heis_mul(&p, g), k).unwrap();
                let gp = heis_mul(&tp.inverse(), &tpg);
                assert!(in_lattice(&gp, k));
                assert!(seen.as_ref().is_none_or(|s| *s == gp));
                seen = Some(gp);
            }
        }
    }

    #[test]
    fn example_map_values() {
        assert!(heis_example_map(&HeisenbergElement::identity()).is_identity());
        assert_eq!(heis_example_map(&HeisenbergElement::x_gen()), h((5, 1), (0, 1), (5, 1)));
        assert_eq!(heis_example_map(&HeisenbergElement::y_gen()), h((2, 1), (2, 1), (1, 1)));
    }

    #[test]
    fn example_map_automorphism_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let samples: Vec<HeisenbergElement> = (0..12).map(|_| random(&mut rng)).collect();
        assert!(!is_homomorphism_on(heis_example_map, &samples));
        assert!(is_homomorphism_on(heis_example_automorphism, &samples));
        assert!(preserves_lattice_on(heis_example_automorphism, 3, &samples));
        let lin = linear_part(heis_example_automorphism);
        assert_eq!(lin, IntMatrix3::from_i64([[5, 2, 0], [2, 1, 0], [0, 0, 1]]));
        let (a, det) = induced_h1_block(&lin).unwrap();
        assert_eq!(a, Unimodular::from_i64([[5, 2], [2, 1]]).unwrap());
        assert_eq!(det, 1);
        assert_eq!(induced_h1_block(&linear_part(heis_example_map)), Err(Error::CenterNotPreserved));
    }

    #[test]
    fn h1_blocks() {
        let (a, d) = induced_h1_block(&IntMatrix3::identity()).unwrap();
        assert!(a.matrix().is_identity() && d == 1);
        let (_, d) = induced_h1_block(&IntMatrix3::from_i64([[2, 1, 0], [1, 1, 0], [3, -1, 1]])).unwrap();
        assert_eq!(d, 1);
        let (_, d) = induced_h1_block(&IntMatrix3::from_i64([[1, 1, 0], [1, 0, 0], [0, 0, -1]])).unwrap();
        assert_eq!(d, -1);
        assert!(induced_h1_block(&IntMatrix3::from_i64([[1, 1, 0], [1, 0, 0], [0, 0, 1]])).is_err());
    }

    #[test]
    fn nil_quotients() {
        assert_eq!(classify_nil_quotient(3, &[]).classification, Classification::Nilmanifold);
        for k in [2u64, 4, 6] {
            let tau = HeisenbergElement::central(r(1, 2 * k as i64));
            assert!(!flip_has_fixed_point(&tau, k));
            assert_eq!(classify_nil_quotient(k, &[tau]).classification, Classification::NilDoubleCover);
        }
        // the same formula for odd k has a fixed point
        for k in [1u64, 3, 5] {
            let tau = HeisenbergElement::central(r(1, 2 * k as i64));
            assert!(flip_has_fixed_point(&tau, k));
            assert_eq!(classify_nil_quotient(k, &[tau]).classification, Classification::Invalid);
        }
        let v = classify_nil_quotient(2, &[h((1, 3), (0, 1), (1, 4))]);
        assert_eq!(v.classification, Classification::Invalid);
        assert!(v.reason.unwrap().contains("normalize"));
    }
}
