//! The universal cover of a Sol mapping torus, its model foliations and
//! metric estimates.

mod point;
mod space;

pub use point::{read_points_csv, write_points_csv, CoverPoint, LeafCoordinates, LeafKind, ModelLeaf};
pub use space::SolSpace;
