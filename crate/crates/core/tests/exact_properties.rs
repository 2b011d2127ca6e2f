use num_rational::BigRational;
use proptest::prelude::*;

use solvdyn::linalg::{commutant_generator, commutes, decompose, det_i_minus, is_hyperbolic, solve_rational, RationalMatrix, RationalVector, Unimodular};
use solvdyn::pi1::{build_model, group_inv, group_mul, normalize_iterate, AutomorphismData, GroupElement, RationalPoint};
use solvdyn::presets;
use solvdyn::quotients::{heis_mul, lefschetz, HeisenbergElement};

fn hyperbolic() -> impl Strategy<Value = [[i64; 2]; 2]> {
    prop::array::uniform2(prop::array::uniform2(-6i64..=6))
        .prop_filter("unimodular hyperbolic", |m| {
            Unimodular::from_i64(*m).map(|u| is_hyperbolic(&u)).unwrap_or(false)
        })
}

fn element() -> impl Strategy<Value = GroupElement> {
    (-9i64..=9, -9i64..=9, -4i64..=4).prop_map(|(a, b, n)| GroupElement::new([a, b], n))
}

fn heis() -> impl Strategy<Value = HeisenbergElement> {
    let q = || (-30i64..=30, 1i64..=12);
    (q(), q(), q()).prop_map(|(x, y, z)| HeisenbergElement::from_ints(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn commutant_powers_decompose(a in hyperbolic(), k in -4i64..=4, neg in any::<bool>()) {
        let a = Unimodular::from_i64(a).unwrap();
        let a0 = commutant_generator(&a).unwrap();
        prop_assert!(commutes(&a, &a0));
        let p = a0.pow(k);
        let b = if neg { -&p } else { p };
        let d = decompose(&b, &a0).unwrap();
        prop_assert_eq!((d.sign, d.power), (if neg { -1 } else { 1 }, k));
    }

    #[test]
    fn generator_has_positive_trace_and_divides_a(a in hyperbolic()) {
        let a = Unimodular::from_i64(a).unwrap();
        let a0 = commutant_generator(&a).unwrap();
        prop_assert!(a0.trace() > 0.into());
        prop_assert!(decompose(&a, &a0).is_some());
    }

    #[test]
    fn group_is_associative(x in element(), y in element(), z in element()) {
        let a = presets::cat();
        let l = group_mul(&a, &group_mul(&a, &x, &y), &z);
        let r = group_mul(&a, &x, &group_mul(&a, &y, &z));
        prop_assert_eq!(l, r);
        prop_assert!(group_mul(&a, &x, &group_inv(&a, &x)).is_identity());
    }

    #[test]
    fn heisenberg_is_associative(x in heis(), y in heis(), z in heis()) {
        prop_assert_eq!(heis_mul(&heis_mul(&x, &y), &z), heis_mul(&x, &heis_mul(&y, &z)));
        prop_assert!(heis_mul(&x, &x.inverse()).is_identity());
    }

    #[test]
    fn model_translation_solves_fixed_equation(v0 in -5i64..=5, v1 in -5i64..=5, k in -2i64..=2, neg in any::<bool>()) {
        let a = presets::cat();
        let a0 = commutant_generator(&a).unwrap();
        let p = a0.pow(k);
        let b = if neg { -&p } else { p };
        let data = AutomorphismData::new(b, [v0, v1], 1);
        let model = build_model(&a, &data).unwrap();
        // A⁻¹w + v = w
        let ainv = a.inverse();
        let w = [model.w.get(0).clone(), model.w.get(1).clone()];
        for i in 0..2 {
            let aw = BigRational::from_integer(ainv.matrix().get(i, 0).clone()) * &w[0]
                + BigRational::from_integer(ainv.matrix().get(i, 1).clone()) * &w[1];
            prop_assert_eq!(aw + BigRational::from_integer([v0, v1][i].into()), w[i].clone());
        }
        // the normal form composes to itself
        let nf = normalize_iterate(&a, &model).unwrap();
        let pt = RationalPoint::from_ints([(v1, 3), (v0, 7)], (k, 5));
        let twice = nf.apply_exact(&a, &nf.apply_exact(&a, &pt));
        prop_assert_eq!(model.iterate_exact(2 * nf.n, &pt), twice);
    }

    #[test]
    fn rational_solve_round_trips(m in prop::array::uniform3(prop::array::uniform3(-5i64..=5)), b in prop::array::uniform3(-9i64..=9)) {
        let rows: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect();
        let mat = RationalMatrix::new(rows.clone()).unwrap();
        let rhs = RationalVector::new(b.iter().map(|&x| BigRational::from_integer(x.into())).collect());
        if let Some(x) = solve_rational(&mat, &rhs).ok().and_then(|s| s.unique()) {
            for i in 0..3 {
                let lhs: BigRational = (0..3).map(|j| &rows[i][j] * x.get(j)).sum();
                prop_assert_eq!(&lhs, rhs.get(i));
            }
        }
    }

    #[test]
    fn lefschetz_is_det_i_minus(m in prop::array::uniform3(prop::array::uniform3(-3i64..=3))) {
        if let Ok(u) = Unimodular::from_i64(m) {
            prop_assert_eq!(lefschetz(&u), det_i_minus(&u));
        }
    }
}
