//! Criterion benchmarks for solvdyn; see `benches/`.

use solvdyn::linalg::Unimodular;
use solvdyn::numdyn::{PerturbedMap, Perturbation};
use solvdyn::sol::SolSpace;

/// Cat-map suspension perturbed with the default random field.
pub fn cat_map(eps: f64) -> PerturbedMap {
    let space = SolSpace::new(Unimodular::from_i64([[2, 1], [1, 1]]).expect("unimodular")).expect("hyperbolic");
    let pert = if eps == 0.0 { Perturbation::zero() } else { Perturbation::random(eps, 1) };
    PerturbedMap::homotopic_to_identity(space, 1, pert).expect("valid map")
}
