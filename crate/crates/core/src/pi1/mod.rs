//! The group Z² ⋊_A Z, its automorphisms and their affine models.

mod automorphism;
mod group;
mod model;

pub use automorphism::{
    aut_apply, find_orientation_swapping, power_relation, valid_e_set, validate_automorphism,
    AutomorphismData, PowerRelation,
};
pub use group::{group_inv, group_mul, group_pow, GroupElement};
pub use model::{
    build_model, deck_apply_exact, foliation_action, normalize_iterate, verify_conjugation,
    AffineModel, FoliationAction, IterateNormalForm, RationalPoint,
};
