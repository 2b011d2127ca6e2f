//! Invariant center-stable and center-unstable foliations of a perturbed
//! map by graph transform.
//!
//! A cs-leaf with model label ℓ is the graph u = ℓ + λ^{−t} θ(ℓ, s, t) over
//! its model leaf; θ is the transverse offset in sol units. Deck
//! equivariance makes θ a (sign-twisted) function on the compact quotient,
//! so one grid over the fundamental domain describes every leaf at once.
//! The cu-side is symmetric with s = ℓ + λ^{t} θ(u, ℓ, t).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sol::{CoverPoint, LeafCoordinates, SolSpace};

use super::perturbed::{reduce_leaf, twist, PerturbedMap};

const GROWTH_PATIENCE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Cs,
    Cu,
}

impl SectionKind {
    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Cs => "cs",
            SectionKind::Cu => "cu",
        }
    }
}

/// Grid of nv × nv × nt nodes over [0,1)² × [0,1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nv: usize,
    pub nt: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nv: 32, nt: 8 }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nv * self.nv * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn node(&self, k: usize) -> CoverPoint {
        let i = k % self.nv;
        let j = (k / self.nv) % self.nv;
        let l = k / (self.nv * self.nv);
        CoverPoint::new([i as f64 / self.nv as f64, j as f64 / self.nv as f64], l as f64 / self.nt as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub kind: SectionKind,
    pub grid: GridSpec,
    pub iterations: usize,
    /// Sup change of θ in the last sweep.
    pub residual: f64,
    /// Sup transverse distance from f(section) to the section it should land on.
    pub invariance_residual: f64,
    /// Sup |θ|: a bound on the Hausdorff distance to the model leaves.
    pub hausdorff_estimate: f64,
    /// A posteriori bound d₁ / (1 − κ) on sup |θ|, κ the worst sweep ratio.
    pub r_estimate: f64,
    pub history: Vec<f64>,
}

/// The fixed point of the graph transform for one kind of foliation.
#[derive(Clone, Debug)]
pub struct GraphSection {
    space: SolSpace,
    a: [[f64; 2]; 2],
    sign: i8,
    pub theta: Vec<f64>,
    pub summary: GraphSummary,
}

impl GraphSection {
    fn zero(space: &SolSpace, kind: SectionKind, grid: GridSpec) -> Self {
        let frame = space.frame();
        GraphSection {
            space: space.clone(),
            a: space.matrix().to_f64(),
            sign: if kind == SectionKind::Cs { frame.sign_u } else { frame.sign_s },
            theta: vec![0.0; grid.len()],
            summary: GraphSummary {
                kind,
                grid,
                iterations: 0,
                residual: 0.0,
                invariance_residual: 0.0,
                hausdorff_estimate: 0.0,
                r_estimate: 0.0,
                history: Vec::new(),
            },
        }
    }

    pub fn kind(&self) -> SectionKind {
        self.summary.kind
    }

    fn layer(&self, l: usize, v: [f64; 2]) -> f64 {
        let GridSpec { nv, nt } = self.summary.grid;
        if l == nt {
            // (v, 1) = γ₃(Av, 0)
            let a = &self.a;
            let av = [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]];
            return twist(self.sign, 1) * self.layer(0, av.map(|x| x - x.floor()));
        }
        let x = v[0] * nv as f64;
        let y = v[1] * nv as f64;
        let (i, j) = (x.floor(), y.floor());
        let (fx, fy) = (x - i, y - j);
        let wrap = |z: f64| (z as i64).rem_euclid(nv as i64) as usize;
        let (i0, j0) = (wrap(i), wrap(j));
        let (i1, j1) = ((i0 + 1) % nv, (j0 + 1) % nv);
        let at = |i: usize, j: usize| self.theta[(l * nv + j) * nv + i];
        (1.0 - fy) * ((1.0 - fx) * at(i0, j0) + fx * at(i1, j0)) + fy * ((1.0 - fx) * at(i0, j1) + fx * at(i1, j1))
    }

    /// θ at the model-leaf base point `c`, by trilinear interpolation.
    pub fn eval(&self, c: LeafCoordinates) -> f64 {
        let r = reduce_leaf(&self.space, c);
        let nt = self.summary.grid.nt;
        let x = r.t * nt as f64;
        let l = (x.floor() as usize).min(nt - 1);
        let ft = x - l as f64;
        let val = (1.0 - ft) * self.layer(l, r.v) + ft * self.layer(l + 1, r.v);
        twist(self.sign, r.n) * val
    }

    /// Point of the leaf labelled `label` over the model coordinates
    /// (`coord`, t): coord is s for cs-leaves and u for cu-leaves.
    pub fn leaf_point(&self, label: f64, coord: f64, t: f64) -> LeafCoordinates {
        let l = self.space.lambda().powf(t);
        match self.kind() {
            SectionKind::Cs => LeafCoordinates {
                u: label + self.eval(LeafCoordinates { u: label, s: coord, t }) / l,
                s: coord,
                t,
            },
            SectionKind::Cu => LeafCoordinates {
                u: coord,
                s: label + l * self.eval(LeafCoordinates { u: coord, s: label, t }),
                t,
            },
        }
    }

    /// Signed transverse sol distance from `c` to the leaf labelled `label`,
    /// measured along the model transversal.
    pub fn offset(&self, label: f64, c: LeafCoordinates) -> f64 {
        let l = self.space.lambda().powf(c.t);
        match self.kind() {
            SectionKind::Cs => l * (c.u - label) - self.eval(LeafCoordinates { u: label, s: c.s, t: c.t }),
            SectionKind::Cu => (c.s - label) / l - self.eval(LeafCoordinates { u: c.u, s: label, t: c.t }),
        }
    }

    /// Label of the leaf through `c`.
    pub fn label_of(&self, c: LeafCoordinates) -> Result<f64> {
        let l = self.space.lambda().powf(c.t);
        let (coord, scale) = match self.kind() {
            SectionKind::Cs => (c.u, 1.0 / l),
            SectionKind::Cu => (c.s, l),
        };
        let g = |label: f64| self.offset(label, c) * scale;
        let x0 = coord - scale * self.eval(c);
        secant(g, x0, x0 + 1e-6 * (1.0 + x0.abs()), 1e-15 * (1.0 + coord.abs()), "leaf label")
    }

    /// Points of one leaf over a rectangle of model coordinates.
    pub fn sample_leaf(&self, label: f64, coord: [f64; 2], t: [f64; 2], n: usize) -> Vec<CoverPoint> {
        let n = n.max(2);
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let a = coord[0] + (coord[1] - coord[0]) * i as f64 / (n - 1) as f64;
                let b = t[0] + (t[1] - t[0]) * j as f64 / (n - 1) as f64;
                out.push(self.space.from_leaf(self.leaf_point(label, a, b)));
            }
        }
        out
    }
}

pub(crate) fn secant(g: impl Fn(f64) -> f64, x0: f64, x1: f64, tol: f64, what: &'static str) -> Result<f64> {
    let (mut a, mut b) = (x0, x1);
    let (mut fa, mut fb) = (g(a), g(b));
    if fa.abs() <= f64::EPSILON * 1e-2 {
        return Ok(a);
    }
    for _ in 0..60 {
        if fb == 0.0 {
            return Ok(b);
        }
        if fb == fa {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = c;
        fb = g(b);
        if (b - a).abs() <= tol {
            return Ok(b);
        }
    }
    if fb.abs() < 1e-12 {
        return Ok(b);
    }
    Err(Error::NotConverged {
        what,
        iterations: 60,
        residual: fb.abs(),
    })
}

/// Transverse offset of f(y) from the leaf `old` assigns to the image label,
/// where y sits at offset `theta` above the cs base point `c`.
fn cs_equation(f: &PerturbedMap, old: &GraphSection, c: LeafCoordinates, theta: f64) -> f64 {
    let l = f.space().lambda().powf(c.t);
    let target = f.base_leaf(c).u;
    let q = f.apply_leaf(LeafCoordinates { u: c.u + theta / l, ..c });
    old.offset(target, q)
}

/// New cu offset at `c`: the point z of the preimage leaf with f(z) over
/// (c.u, c.t), found by Newton's method from `guess` = (u, t) of z.
fn cu_node(f: &PerturbedMap, old: &GraphSection, c: LeafCoordinates, guess: [f64; 2]) -> Result<(f64, [f64; 2])> {
    let lam = f.space().lambda();
    let lc = lam.powf(c.t);
    let label = f.base_inverse_leaf(c).s;
    let image = |z: [f64; 2]| f.apply_leaf(old.leaf_point(label, z[0], z[1]));
    let residual = |y: LeafCoordinates| [(y.u - c.u) * lc, y.t - c.t];
    let mut z = guess;
    let mut y = image(z);
    let mut r = residual(y);
    for _ in 0..30 {
        if r[0].hypot(r[1]) < 1e-14 {
            return Ok(((y.s - c.s) / lc, z));
        }
        let h = 1e-6;
        let du = h / lam.powf(z[1]);
        let col = |dz: [f64; 2], step: f64| {
            let p = residual(image([z[0] + dz[0], z[1] + dz[1]]));
            let m = residual(image([z[0] - dz[0], z[1] - dz[1]]));
            [(p[0] - m[0]) / (2.0 * step), (p[1] - m[1]) / (2.0 * step)]
        };
        let j0 = col([du, 0.0], du);
        let j1 = col([0.0, h], h);
        let det = j0[0] * j1[1] - j1[0] * j0[1];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        z[0] -= (r[0] * j1[1] - j1[0] * r[1]) / det;
        z[1] -= (j0[0] * r[1] - r[0] * j0[1]) / det;
        y = image(z);
        r = residual(y);
    }
    if r[0].hypot(r[1]) < 1e-11 {
        return Ok(((y.s - c.s) / lc, z));
    }
    Err(Error::NotConverged {
        what: "graph transform node",
        iterations: 30,
        residual: r[0].hypot(r[1]),
    })
}

fn sweep(
    f: &PerturbedMap,
    old: &GraphSection,
    nodes: &[LeafCoordinates],
    guesses: &[[f64; 2]],
) -> Result<Vec<(f64, [f64; 2])>> {
    nodes
        .par_iter()
        .zip(old.theta.par_iter())
        .zip(guesses.par_iter())
        .map(|((&c, &th), &g)| match old.kind() {
            SectionKind::Cs => {
                secant(|x| cs_equation(f, old, c, x), th, th + 1e-4, 1e-15, "graph transform node").map(|x| (x, g))
            }
            SectionKind::Cu => cu_node(f, old, c, g),
        })
        .collect()
}

/// Iterates the graph transform (f⁻¹-pullback for cs, f-pushforward for cu)
/// from the model foliation until successive sections differ by less than
/// `tol` in sup norm.
pub fn graph_transform(
    f: &PerturbedMap,
    kind: SectionKind,
    grid: GridSpec,
    tol: f64,
    maxiter: usize,
) -> Result<GraphSection> {
    if grid.nv < 2 || grid.nt < 1 {
        return Err(Error::InvalidParameter("grid needs nv ≥ 2 and nt ≥ 1".into()));
    }
    if !(tol > 0.0) || maxiter == 0 {
        return Err(Error::InvalidParameter("need tol > 0 and maxiter ≥ 1".into()));
    }
    let space = f.space();
    let nodes: Vec<LeafCoordinates> = (0..grid.len()).map(|k| space.to_leaf(grid.node(k))).collect();
    let mut section = GraphSection::zero(space, kind, grid);
    let mut guesses: Vec<[f64; 2]> = nodes
        .iter()
        .map(|&c| {
            let z = f.base_inverse_leaf(c);
            [z.u, z.t]
        })
        .collect();
    let mut history: Vec<f64> = Vec::new();
    let mut growing = 0;
    let sup_change = |new: &[(f64, [f64; 2])], old: &[f64]| {
        new.iter()
            .zip(old)
            .map(|(a, b)| (a.0 - b).abs())
            .fold(0.0, f64::max)
    };
    loop {
        let new = sweep(f, &section, &nodes, &guesses)?;
        let change = sup_change(&new, &section.theta);
        if !change.is_finite() {
            return Err(Error::NoContraction {
                iteration: history.len() + 1,
                growth: f64::INFINITY,
            });
        }
        section.theta = new.iter().map(|x| x.0).collect();
        guesses = new.into_iter().map(|x| x.1).collect();
        if let Some(&prev) = history.last() {
            if change > prev {
                growing += 1;
                if growing >= GROWTH_PATIENCE {
                    return Err(Error::NoContraction {
                        iteration: history.len() + 1,
                        growth: change / prev,
                    });
                }
            } else {
                growing = 0;
            }
        }
        history.push(change);
        if change < tol {
            break;
        }
        if history.len() >= maxiter {
            return Err(Error::NotConverged {
                what: "graph transform",
                iterations: maxiter,
                residual: change,
            });
        }
    }
    let invariance = match kind {
        SectionKind::Cs => nodes
            .par_iter()
            .zip(section.theta.par_iter())
            .map(|(&c, &th)| cs_equation(f, &section, c, th).abs())
            .reduce(|| 0.0, f64::max),
        // the cu sweep is a pushforward, so its change is the offset of f(section)
        SectionKind::Cu => sup_change(&sweep(f, &section, &nodes, &guesses)?, &section.theta),
    };
    let kappa = history
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let first = history[0];
    let s = &mut section.summary;
    s.iterations = history.len();
    s.residual = *history.last().unwrap_or(&0.0);
    s.invariance_residual = invariance;
    s.hausdorff_estimate = section.theta.iter().map(|x| x.abs()).fold(0.0, f64::max);
    s.r_estimate = if first == 0.0 {
        0.0
    } else if kappa < 1.0 {
        first / (1.0 - kappa)
    } else {
        f64::INFINITY
    };
    s.history = history;
    Ok(section)
}

/// Center leaves as intersections of a cs- and a cu-section.
#[derive(Clone, Debug)]
pub struct CenterFoliation {
    pub cs: GraphSection,
    pub cu: GraphSection,
}

impl CenterFoliation {
    pub fn new(cs: GraphSection, cu: GraphSection) -> Result<Self> {
        if cs.kind() != SectionKind::Cs || cu.kind() != SectionKind::Cu {
            return Err(Error::WrongLeafKind {
                expected: "cs and cu",
                got: "mismatched sections",
            });
        }
        Ok(CenterFoliation { cs, cu })
    }

    pub fn space(&self) -> &SolSpace {
        &self.cs.space
    }

    /// Labels (ℓ_u, ℓ_s) of the center leaf through `c`.
    pub fn labels_of(&self, c: LeafCoordinates) -> Result<[f64; 2]> {
        Ok([self.cs.label_of(c)?, self.cu.label_of(c)?])
    }

    /// The point of the center leaf `labels` at height t, corrected from
    /// the predictor `guess` by alternating projection onto the two leaves.
    pub fn center_point(&self, labels: [f64; 2], t: f64, guess: Option<[f64; 2]>) -> Result<LeafCoordinates> {
        let l = self.space().lambda().powf(t);
        let [mut u, mut s] = guess.unwrap_or(labels);
        for _ in 0..200 {
            let u1 = self.cs.leaf_point(labels[0], s, t).u;
            let s1 = self.cu.leaf_point(labels[1], u1, t).s;
            let step = l * (u1 - u).abs() + (s1 - s).abs() / l;
            u = u1;
            s = s1;
            if step < 1e-12 {
                return Ok(LeafCoordinates { u, s, t });
            }
        }
        Err(Error::LeafFollowing { last: t })
    }

    /// `count` points of a center leaf at heights t₀ + i·h.
    pub fn center_curve(&self, labels: [f64; 2], t0: f64, h: f64, count: usize) -> Result<Vec<LeafCoordinates>> {
        let mut out: Vec<LeafCoordinates> = Vec::with_capacity(count);
        for i in 0..count {
            let guess = out.last().map(|p| [p.u, p.s]);
            out.push(self.center_point(labels, t0 + i as f64 * h, guess)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Unimodular;
    use crate::numdyn::Perturbation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cat() -> SolSpace {
        SolSpace::new(Unimodular::from_i64([[2, 1], [1, 1]]).unwrap()).unwrap()
    }

    fn small() -> GridSpec {
        GridSpec { nv: 16, nt: 4 }
    }

    #[test]
    fn unperturbed_sections_are_flat() {
        let f = PerturbedMap::homotopic_to_identity(cat(), 1, Perturbation::zero()).unwrap();
        for kind in [SectionKind::Cs, SectionKind::Cu] {
            let g = graph_transform(&f, kind, small(), 1e-8, 50).unwrap();
            assert_eq!(g.summary.iterations, 1);
            assert_eq!(g.summary.residual, 0.0);
            assert!(g.theta.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn interpolation_respects_deck_group() {
        let space = cat();
        let f = PerturbedMap::homotopic_to_identity(space.clone(), 1, Perturbation::random(0.05, 3)).unwrap();
        let g = graph_transform(&f, SectionKind::Cs, small(), 1e-8, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let c = space.to_leaf(CoverPoint::new([rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)], rng.gen_range(-2.0..2.0)));
            let a = g.eval(c);
            assert!((g.eval(space.gamma3_pow_leaf(1, c)) - a).abs() < 1e-9);
            let shifted = space.to_leaf(CoverPoint::new(
                {
                    let p = space.from_leaf(c);
                    [p.v[0] + 1.0, p.v[1] - 2.0]
                },
                c.t,
            ));
            assert!((g.eval(shifted) - a).abs() < 1e-9);
        }
        // continuity across the top face of the fundamental domain
        let c = space.to_leaf(CoverPoint::new([0.3, 0.6], 1.0 - 1e-12));
        let d = space.to_leaf(CoverPoint::new([0.3, 0.6], 1.0));
        assert!((g.eval(c) - g.eval(d)).abs() < 1e-9);
    }

    #[test]
    fn perturbed_sections_converge() {
        let space = cat();
        let f = PerturbedMap::homotopic_to_identity(space.clone(), 1, Perturbation::random(0.05, 3)).unwrap();
        for kind in [SectionKind::Cs, SectionKind::Cu] {
            let g = graph_transform(&f, kind, small(), 1e-8, 200).unwrap();
            let s = &g.summary;
            assert!(s.iterations < 200 && s.residual < 1e-8, "{s:?}");
            assert!(s.hausdorff_estimate < 0.5 && s.hausdorff_estimate > 0.0);
            assert!(s.hausdorff_estimate <= s.r_estimate + 1e-12);
            assert!(s.invariance_residual < 5e-8, "{s:?}");
        }
    }

    #[test]
    fn labels_round_trip_and_center_points() {
        let space = cat();
        let f = PerturbedMap::homotopic_to_identity(space.clone(), 1, Perturbation::random(0.05, 3)).unwrap();
        let cs = graph_transform(&f, SectionKind::Cs, small(), 1e-10, 200).unwrap();
        let cu = graph_transform(&f, SectionKind::Cu, small(), 1e-10, 200).unwrap();
        let fol = CenterFoliation::new(cs, cu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let labels = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let t = rng.gen_range(-1.0..2.0);
            let c = fol.center_point(labels, t, None).unwrap();
            let back = fol.labels_of(c).unwrap();
            assert!((back[0] - labels[0]).abs() < 1e-10 && (back[1] - labels[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn distinct_cs_leaves_separate_like_lambda() {
        let space = cat();
        let f = PerturbedMap::homotopic_to_identity(space.clone(), 1, Perturbation::random(0.05, 3)).unwrap();
        let cs = graph_transform(&f, SectionKind::Cs, small(), 1e-10, 200).unwrap();
        let lam = space.lambda();
        let (ts, logs): (Vec<f64>, Vec<f64>) = (0..=40)
            .map(|i| {
                let t = 2.0 + i as f64 * 0.2;
                let a = cs.leaf_point(0.1, 0.3, t);
                let b = cs.leaf_point(0.4, 0.3, t);
                (t, (lam.powf(t) * (b.u - a.u)).abs().ln())
            })
            .unzip();
        let n = ts.len() as f64;
        let (mt, ml) = (ts.iter().sum::<f64>() / n, logs.iter().sum::<f64>() / n);
        let slope = ts.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum::<f64>()
            / ts.iter().map(|t| (t - mt).powi(2)).sum::<f64>();
        assert!((slope / lam.ln() - 1.0).abs() < 0.05, "slope {slope}");
    }
}
