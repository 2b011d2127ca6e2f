//! Exact integer and rational linear algebra in dimensions 2 and 3.

pub mod commutant;
pub mod eigen;
pub mod int_matrix;
pub mod modular;
pub mod rational;
pub mod smith;

pub use commutant::{commutant_generator, commutes, decompose, Decomposition};
pub use eigen::{
    charpoly3, eigen_frame, eigenvalues3, has_unit_eigenvalue3, is_hyperbolic, spectral_radius2,
    EigenFrame, Eigenvalue3,
};
pub use int_matrix::{block_sum, IntMatrix, IntMatrix2, IntMatrix3, Unimodular, UnimodularMatrix2, UnimodularMatrix3};
pub use modular::{det_i_minus, matrix_order_mod};
pub use rational::{
    format_rational, parse_rational, rat, solve_rational, RationalMatrix, RationalVector, Solution,
};
pub use smith::{complete_to_basis, smith_normal_form, SmithForm};
