//! Dynamics on solvmanifolds: exact algebra for Sol and nil quotients,
//! partial hyperbolicity certificates and numerical conjugacy experiments.

// `!(x > 0.0)` is the NaN-rejecting form used by every parameter check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod certify;
pub mod linalg;
pub mod numdyn;
pub mod pi1;
pub mod presets;
pub mod quotients;
pub mod sol;

pub use error::{Error, Result};
