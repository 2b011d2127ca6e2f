//! Finite quotients of the 3-torus and of Heisenberg nilmanifolds.

mod heisenberg;
mod torus;

pub use heisenberg::{
    classify_nil_quotient, commutator, flip_has_fixed_point, flip_times, heis_example_automorphism,
    heis_example_map, heis_mul, in_lattice, induced_h1_block, is_homomorphism_on, linear_part,
    preserves_lattice_on, tau_k, HeisenbergElement, NilVerdict,
};
pub use torus::{
    classify_t3_quotient, group_closure, has_fixed_point, lefschetz, AffineTorusMap, CaseTag,
    Classification, QuotientVerdict,
};
