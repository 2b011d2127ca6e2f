//! Numerical dynamics of perturbed suspension maps on the sol cover.

mod config;
mod fuller;
mod gps;
mod graph;
mod lyapunov;
mod perturbed;
mod section;

pub use config::{NumericConfig, HEIGHT_NMAX, HEIGHT_SAMPLES};
pub use fuller::{default_window, fuller_pc, height_progress, FullerProfile, HeightReport, LeafProfile};
pub use gps::{crossings, gps_check, intersections, strong_curve, Clause, ClauseReport, GpsConfig, GpsReport};
pub use graph::{graph_transform, CenterFoliation, GraphSection, GraphSummary, GridSpec, SectionKind};
pub use lyapunov::{lyapunov_exponents, LyapunovReport};
pub use perturbed::{Mode, PerturbedMap, Perturbation, DEFAULT_ADMISSIBLE_EPS};
pub use section::{
    expansivity_scan, section_map, section_return, semiconjugacy_to_linear, ExpansivityReport, ReturnMap, SectionMap,
    SemiconjugacyReport, SlowPair, HEIGHT_STEP,
};
