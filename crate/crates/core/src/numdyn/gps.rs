use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sol::{CoverPoint, LeafCoordinates};

use super::graph::CenterFoliation;
use super::perturbed::PerturbedMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpsConfig {
    pub samples: usize,
    pub seed: u64,
    /// Coordinate half-width of the seed segment pushed along the orbit.
    pub half_width: f64,
    /// Points per curve (odd, so the base point is a node).
    pub points: usize,
    pub pushes: usize,
}

impl Default for GpsConfig {
    fn default() -> Self {
        GpsConfig {
            samples: 500,
            seed: 7,
            half_width: 4.0,
            points: 101,
            pushes: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// F^cs(x) ∩ W^u(y)
    CsUnstable,
    /// F^cu(x) ∩ W^s(y)
    CuStable,
    /// F^c(x) ∩ W^s(y) for x ∈ F^cs(y)
    CenterStable,
    /// F^c(x) ∩ W^u(y) for x ∈ F^cu(y)
    CenterUnstable,
}

impl Clause {
    pub const ALL: [Clause; 4] = [Clause::CsUnstable, Clause::CuStable, Clause::CenterStable, Clause::CenterUnstable];

    fn unstable(self) -> bool {
        matches!(self, Clause::CsUnstable | Clause::CenterUnstable)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub clause: Clause,
    pub samples: usize,
    pub unique: usize,
    pub duplicates: usize,
    pub misses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpsReport {
    pub config: GpsConfig,
    pub clauses: Vec<ClauseReport>,
    pub all_unique: bool,
}

/// Strong unstable (or stable) curve through y: a coordinate segment at
/// f^{∓n}(y) pushed n times by f^{±1}.
pub fn strong_curve(f: &PerturbedMap, y: LeafCoordinates, unstable: bool, cfg: &GpsConfig) -> Result<Vec<LeafCoordinates>> {
    if !f.is_flow_like() {
        return Err(Error::InvalidParameter("strong curves need a base map homotopic to the identity".into()));
    }
    let m = cfg.points.max(3) | 1;
    let mut base = y;
    for _ in 0..cfg.pushes {
        base = if unstable { f.inverse_leaf(base)? } else { f.apply_leaf(base) };
    }
    let mut curve: Vec<LeafCoordinates> = (0..m)
        .map(|i| {
            let r = cfg.half_width * (2.0 * i as f64 / (m - 1) as f64 - 1.0);
            if unstable {
                LeafCoordinates { u: base.u + r, ..base }
            } else {
                LeafCoordinates { s: base.s + r, ..base }
            }
        })
        .collect();
    for _ in 0..cfg.pushes {
        for c in curve.iter_mut() {
            *c = if unstable { f.apply_leaf(*c) } else { f.inverse_leaf(*c)? };
        }
    }
    // the base point returns to y up to the inverse tolerance
    curve[m / 2] = y;
    Ok(curve)
}

/// Zeros of `phi` along a polyline: nodes where it vanishes and linearly
/// interpolated sign changes.
pub fn crossings(curve: &[LeafCoordinates], phi: impl Fn(LeafCoordinates) -> Result<f64>) -> Result<Vec<LeafCoordinates>> {
    let vals: Vec<f64> = curve.iter().map(|&c| phi(c)).collect::<Result<_>>()?;
    let zero = |x: f64| x.abs() < 1e-14;
    let mut out = Vec::new();
    for i in 0..curve.len() {
        if zero(vals[i]) {
            out.push(curve[i]);
        } else if i + 1 < curve.len() && !zero(vals[i + 1]) && vals[i] * vals[i + 1] < 0.0 {
            let w = vals[i] / (vals[i] - vals[i + 1]);
            let (a, b) = (curve[i], curve[i + 1]);
            out.push(LeafCoordinates {
                u: a.u + w * (b.u - a.u),
                s: a.s + w * (b.s - a.s),
                t: a.t + w * (b.t - a.t),
            });
        }
    }
    Ok(out)
}

/// Intersections for one clause and one sample pair. For the center
/// clauses `x` must lie in the cs- (resp. cu-) leaf of `y`.
pub fn intersections(
    f: &PerturbedMap,
    fol: &CenterFoliation,
    clause: Clause,
    x: LeafCoordinates,
    y: LeafCoordinates,
    cfg: &GpsConfig,
) -> Result<Vec<LeafCoordinates>> {
    let curve = strong_curve(f, y, clause.unstable(), cfg)?;
    let lam = f.space().lambda();
    match clause {
        Clause::CsUnstable => {
            let label = fol.cs.label_of(x)?;
            crossings(&curve, |p| Ok(fol.cs.offset(label, p)))
        }
        Clause::CuStable => {
            let label = fol.cu.label_of(x)?;
            crossings(&curve, |p| Ok(fol.cu.offset(label, p)))
        }
        Clause::CenterStable => {
            let labels = fol.labels_of(x)?;
            crossings(&curve, |p| {
                let c = fol.center_point(labels, p.t, None)?;
                Ok((p.s - c.s) / lam.powf(p.t))
            })
        }
        Clause::CenterUnstable => {
            let labels = fol.labels_of(x)?;
            crossings(&curve, |p| {
                let c = fol.center_point(labels, p.t, None)?;
                Ok((p.u - c.u) * lam.powf(p.t))
            })
        }
    }
}

fn sample_pair(fol: &CenterFoliation, clause: Clause, rng: &mut ChaCha8Rng) -> Result<(LeafCoordinates, LeafCoordinates)> {
    let space = fol.space();
    let point = |rng: &mut ChaCha8Rng| {
        space.to_leaf(CoverPoint::new([rng.gen::<f64>(), rng.gen::<f64>()], rng.gen::<f64>()))
    };
    let y = point(rng);
    let x = match clause {
        Clause::CsUnstable | Clause::CuStable => point(rng),
        Clause::CenterStable => {
            let (ds, dt) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            fol.cs.leaf_point(fol.cs.label_of(y)?, y.s + ds, y.t + dt)
        }
        Clause::CenterUnstable => {
            let (du, dt) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            fol.cu.leaf_point(fol.cu.label_of(y)?, y.u + du, y.t + dt)
        }
    };
    Ok((x, y))
}

/// Sampled global product structure: each clause should meet in exactly
/// one point for every sampled pair.
pub fn gps_check(f: &PerturbedMap, fol: &CenterFoliation, cfg: &GpsConfig) -> Result<GpsReport> {
    let mut clauses = Vec::new();
    for (ci, clause) in Clause::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(ci as u64));
        let pairs: Vec<_> = (0..cfg.samples).map(|_| sample_pair(fol, clause, &mut rng)).collect::<Result<_>>()?;
        let counts: Vec<usize> = pairs
            .par_iter()
            .map(|&(x, y)| intersections(f, fol, clause, x, y, cfg).map(|v| v.len()))
            .collect::<Result<_>>()?;
        clauses.push(ClauseReport {
            clause,
            samples: cfg.samples,
            unique: counts.iter().filter(|&&c| c == 1).count(),
            duplicates: counts.iter().filter(|&&c| c > 1).count(),
            misses: counts.iter().filter(|&&c| c == 0).count(),
        });
    }
    Ok(GpsReport {
        config: *cfg,
        all_unique: clauses.iter().all(|c| c.unique == c.samples),
        clauses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Unimodular;
    use crate::numdyn::{graph_transform, GridSpec, Perturbation, SectionKind};
    use crate::sol::SolSpace;

    fn setup(eps: f64) -> (PerturbedMap, CenterFoliation) {
        let space = SolSpace::new(Unimodular::from_i64([[2, 1], [1, 1]]).unwrap()).unwrap();
        let pert = if eps == 0.0 { Perturbation::zero() } else { Perturbation::random(eps, 1) };
        let f = PerturbedMap::homotopic_to_identity(space, 1, pert).unwrap();
        let grid = GridSpec { nv: 16, nt: 4 };
        let cs = graph_transform(&f, SectionKind::Cs, grid, 1e-10, 200).unwrap();
        let cu = graph_transform(&f, SectionKind::Cu, grid, 1e-10, 200).unwrap();
        (f, CenterFoliation::new(cs, cu).unwrap())
    }

    #[test]
    fn flat_model_is_unique() {
        let (f, fol) = setup(0.0);
        let cfg = GpsConfig {
            samples: 20,
            pushes: 3,
            ..Default::default()
        };
        let rep = gps_check(&f, &fol, &cfg).unwrap();
        assert!(rep.all_unique, "{rep:?}");
    }

    #[test]
    fn degenerate_pair_meets_at_itself() {
        let (f, fol) = setup(0.05);
        let cfg = GpsConfig {
            pushes: 6,
            ..Default::default()
        };
        let y = f.space().to_leaf(CoverPoint::new([0.3, 0.6], 0.4));
        for clause in Clause::ALL {
            let hits = intersections(&f, &fol, clause, y, y, &cfg).unwrap();
            assert_eq!(hits.len(), 1, "{clause:?}");
            let h = hits[0];
            assert!((h.u - y.u).abs() < 1e-8 && (h.s - y.s).abs() < 1e-8 && (h.t - y.t).abs() < 1e-8);
        }
    }

    #[test]
    fn strong_curves_pass_through_base() {
        let (f, _) = setup(0.05);
        let y = f.space().to_leaf(CoverPoint::new([0.1, 0.2], 0.3));
        let cfg = GpsConfig::default();
        let u = strong_curve(&f, y, true, &cfg).unwrap();
        let s = strong_curve(&f, y, false, &cfg).unwrap();
        assert_eq!(u.len(), 101);
        // the pushed curves stay within ε-height of y and spread along their axis
        for c in u.iter().chain(&s) {
            assert!((c.t - y.t).abs() < 0.2);
        }
        assert!(u[100].u - u[0].u > 2.0 && s[100].s - s[0].s > 2.0);
    }
}
