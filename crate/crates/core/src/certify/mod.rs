//! Partial hyperbolicity certificates and the entropy obstruction.

mod certificate;
mod cone;
mod linear;

pub use certificate::{ConeMargins, ConeOpenings, ConeReport, Flavor, PHCertificate, RateMargins, Rates};
pub use cone::{cone_certify, SampledCocycle};
pub use linear::{
    certify_linear_t3, certify_model_sol, cs_torus_obstruction, has_dominated_spectrum, htop,
    ObstructionVerdict,
};
