//! Named example data: the cat map, three torus matrices with their
//! involutions τ₁, τ₂, τ₃, and the Heisenberg example.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Unimodular, UnimodularMatrix2, UnimodularMatrix3};
use crate::quotients::AffineTorusMap;

pub const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

pub const PAPER_MATRICES: [[[i64; 3]; 3]; 3] = [
    [[2, 1, 0], [1, 1, 0], [0, 0, 1]],
    [[3, 1, 0], [2, 1, 0], [0, 0, 1]],
    [[5, 2, 3], [2, 1, 1], [0, 0, 1]],
];

pub const NAMES: [&str; 8] = [
    "cat",
    "paper-matrix-1",
    "paper-matrix-2",
    "paper-matrix-3",
    "tau1",
    "tau2",
    "tau3",
    "heis-example",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Cat,
    PaperMatrix(u8),
    Tau(u8),
    HeisExample,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Preset> {
        let p = match name {
            "cat" => Preset::Cat,
            "paper-matrix-1" => Preset::PaperMatrix(1),
            "paper-matrix-2" => Preset::PaperMatrix(2),
            "paper-matrix-3" => Preset::PaperMatrix(3),
            "tau1" => Preset::Tau(1),
            "tau2" => Preset::Tau(2),
            "tau3" => Preset::Tau(3),
            "heis-example" => Preset::HeisExample,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown preset {name:?}; expected one of {}",
                    NAMES.join(", ")
                )))
            }
        };
        Ok(p)
    }

    /// The torus matrix paired with a τ map, or the matrix itself.
    pub fn paired_matrix(self) -> Option<UnimodularMatrix3> {
        match self {
            Preset::PaperMatrix(i) | Preset::Tau(i) => Some(paper_matrix(i)),
            _ => None,
        }
    }
}

pub fn cat() -> UnimodularMatrix2 {
    Unimodular::from_i64(CAT).expect("unimodular")
}

/// Torus matrix number `i` in 1..=3.
pub fn paper_matrix(i: u8) -> UnimodularMatrix3 {
    Unimodular::from_i64(PAPER_MATRICES[(i - 1) as usize]).expect("unimodular")
}

/// Free involution τ_i in 1..=3.
pub fn tau(i: u8) -> AffineTorusMap {
    let (l, b) = match i {
        1 => ([[-1, 0, 0], [0, -1, 0], [0, 0, 1]], [(0, 1), (0, 1), (1, 2)]),
        2 => ([[1, 0, 0], [0, 1, 0], [0, 0, -1]], [(1, 2), (0, 1), (0, 1)]),
        _ => ([[1, 0, 1], [0, 1, 1], [0, 0, -1]], [(1, 2), (0, 1), (0, 1)]),
    };
    AffineTorusMap::from_ints(l, b).expect("unimodular")
}
