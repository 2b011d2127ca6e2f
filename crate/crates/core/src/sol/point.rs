use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (v, t) of the universal cover ℝ² × ℝ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub v: [f64; 2],
    pub t: f64,
}

impl CoverPoint {
    pub fn new(v: [f64; 2], t: f64) -> Self {
        CoverPoint { v, t }
    }

    pub fn is_finite(&self) -> bool {
        self.v[0].is_finite() && self.v[1].is_finite() && self.t.is_finite()
    }
}

/// Eigen-coordinates: v = u e_u + s e_s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafCoordinates {
    pub u: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafKind {
    Cs,
    Cu,
    C,
    S,
    U,
}

impl LeafKind {
    pub fn name(self) -> &'static str {
        match self {
            LeafKind::Cs => "cs",
            LeafKind::Cu => "cu",
            LeafKind::C => "c",
            LeafKind::S => "s",
            LeafKind::U => "u",
        }
    }
}

/// A leaf of one of the model foliations, labelled by its frozen
/// eigen-coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelLeaf {
    Cs { u: f64 },
    Cu { s: f64 },
    C { u: f64, s: f64 },
    S { u: f64, t: f64 },
    U { s: f64, t: f64 },
}

impl ModelLeaf {
    pub fn kind(&self) -> LeafKind {
        match self {
            ModelLeaf::Cs { .. } => LeafKind::Cs,
            ModelLeaf::Cu { .. } => LeafKind::Cu,
            ModelLeaf::C { .. } => LeafKind::C,
            ModelLeaf::S { .. } => LeafKind::S,
            ModelLeaf::U { .. } => LeafKind::U,
        }
    }

    /// The leaf of the given kind through a point.
    pub fn through(kind: LeafKind, c: LeafCoordinates) -> Self {
        match kind {
            LeafKind::Cs => ModelLeaf::Cs { u: c.u },
            LeafKind::Cu => ModelLeaf::Cu { s: c.s },
            LeafKind::C => ModelLeaf::C { u: c.u, s: c.s },
            LeafKind::S => ModelLeaf::S { u: c.u, t: c.t },
            LeafKind::U => ModelLeaf::U { s: c.s, t: c.t },
        }
    }

    pub fn contains(&self, c: LeafCoordinates, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + b.abs());
        match *self {
            ModelLeaf::Cs { u } => close(c.u, u),
            ModelLeaf::Cu { s } => close(c.s, s),
            ModelLeaf::C { u, s } => close(c.u, u) && close(c.s, s),
            ModelLeaf::S { u, t } => close(c.u, u) && close(c.t, t),
            ModelLeaf::U { s, t } => close(c.s, s) && close(c.t, t),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    v1: f64,
    v2: f64,
    t: f64,
}

/// Point cloud as CSV with header `v1,v2,t`.
pub fn write_points_csv<W: Write>(out: W, points: &[CoverPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(CsvRow {
            v1: p.v[0],
            v2: p.v[1],
            t: p.t,
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv<R: Read>(input: R) -> Result<Vec<CoverPoint>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            Ok(CoverPoint::new([row.v1, row.v2], row.t))
        })
        .collect()
}
