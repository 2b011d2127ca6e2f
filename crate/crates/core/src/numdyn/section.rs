use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sol::{CoverPoint, LeafCoordinates, SolSpace};

use super::fuller::LeafProfile;
use super::graph::CenterFoliation;
use super::perturbed::PerturbedMap;

/// Center leaves are sampled at heights in HEIGHT_STEP·ℤ, so p_c is one
/// function on all leaves and commutes exactly with the deck group.
pub const HEIGHT_STEP: f64 = 1.0 / 50.0;
const SECTION_TOL: f64 = 1e-6;

/// Section S = {p_c = 0} and its first return ψ(x) = γ₃⁻¹(y), where y is
/// the point of the center leaf of x with p_c(y) = 1.
pub struct ReturnMap<'a> {
    f: &'a PerturbedMap,
    fol: &'a CenterFoliation,
    window: f64,
}

fn translate(space: &SolSpace, c: LeafCoordinates, z: [f64; 2]) -> LeafCoordinates {
    let p = space.from_leaf(c);
    space.to_leaf(CoverPoint::new([p.v[0] + z[0], p.v[1] + z[1]], p.t))
}

/// Integer translate of `c` with v in [0,1)², and the translation used.
fn torus_reduce(space: &SolSpace, c: LeafCoordinates) -> (LeafCoordinates, [f64; 2]) {
    let p = space.from_leaf(c);
    let z = p.v.map(|x| -x.floor());
    (translate(space, c, z), z)
}

impl<'a> ReturnMap<'a> {
    pub fn new(f: &'a PerturbedMap, fol: &'a CenterFoliation, window: f64) -> Result<Self> {
        if !f.is_flow_like() {
            return Err(Error::InvalidParameter(
                "the return map needs a base map homotopic to the identity".into(),
            ));
        }
        if !(window > 0.0) {
            return Err(Error::InvalidParameter(format!("window T must be positive, got {window}")));
        }
        Ok(ReturnMap { f, fol, window })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn map(&self) -> &PerturbedMap {
        self.f
    }

    pub fn space(&self) -> &SolSpace {
        self.f.space()
    }

    /// Center leaf `labels` sampled on the height lattice covering [t_lo, t_hi].
    fn profile(&self, labels: [f64; 2], t_lo: f64, t_hi: f64) -> Result<(Vec<LeafCoordinates>, LeafProfile)> {
        let i0 = (t_lo / HEIGHT_STEP).floor() as i64;
        let i1 = (t_hi / HEIGHT_STEP).ceil() as i64;
        let mut pts: Vec<LeafCoordinates> = Vec::with_capacity((i1 - i0 + 1) as usize);
        for i in i0..=i1 {
            let guess = pts.last().map(|p| [p.u, p.s]);
            pts.push(self.fol.center_point(labels, i as f64 * HEIGHT_STEP, guess)?);
        }
        let prof = LeafProfile::new(self.space(), &pts)?;
        Ok((pts, prof))
    }

    fn span(&self, t: f64) -> (f64, f64) {
        (t - 1.5, t + 1.1 * self.window + 1.5)
    }

    /// p_c at `x`, through the center leaf of x.
    pub fn pc(&self, x: LeafCoordinates) -> Result<f64> {
        let labels = self.fol.labels_of(x)?;
        let (lo, hi) = self.span(x.t);
        let (_, prof) = self.profile(labels, lo, hi)?;
        prof.tau_at_height(x.t)
            .and_then(|tau| prof.pc_at(tau, self.window))
            .ok_or(Error::LeafFollowing { last: hi })
    }

    /// The point of the center leaf `labels` where p_c equals `level`.
    pub fn level_point(&self, labels: [f64; 2], level: f64) -> Result<LeafCoordinates> {
        let guess = level - 0.5 * self.window;
        let (lo, hi) = self.span(guess);
        let (pts, prof) = self.profile(labels, lo, hi)?;
        let g = |t: f64| {
            prof.tau_at_height(t)
                .and_then(|tau| prof.pc_at(tau, self.window))
                .map(|v| v - level)
        };
        let (mut a, mut b) = (guess - 1.0, guess + 1.0);
        let (ga, gb) = match (g(a), g(b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(Error::LeafFollowing { last: hi }),
        };
        if ga > 0.0 || gb < 0.0 {
            return Err(Error::LeafFollowing { last: if ga > 0.0 { a } else { b } });
        }
        while b - a > 1e-13 {
            let m = 0.5 * (a + b);
            match g(m) {
                Some(v) if v < 0.0 => a = m,
                Some(_) => b = m,
                None => return Err(Error::LeafFollowing { last: m }),
            }
        }
        let t = 0.5 * (a + b);
        let i = (((t - pts[0].t) / HEIGHT_STEP).floor() as usize).min(pts.len() - 1);
        self.fol.center_point(labels, t, Some([pts[i].u, pts[i].s]))
    }

    pub fn section_point(&self, labels: [f64; 2]) -> Result<LeafCoordinates> {
        self.level_point(labels, 0.0)
    }

    fn step(&self, x: LeafCoordinates) -> Result<LeafCoordinates> {
        let y = self.level_point(self.fol.labels_of(x)?, 1.0)?;
        Ok(self.space().gamma3_pow_leaf(-1, y))
    }

    fn step_back(&self, x: LeafCoordinates) -> Result<LeafCoordinates> {
        let up = self.space().gamma3_pow_leaf(1, x);
        self.level_point(self.fol.labels_of(up)?, 0.0)
    }

    fn check_on_section(&self, x: LeafCoordinates) -> Result<()> {
        let pc = self.pc(x)?;
        if pc.abs() > SECTION_TOL {
            return Err(Error::InvalidParameter(format!("point is off the zero section, p_c = {pc:e}")));
        }
        Ok(())
    }

    /// ψ(x) for x on the zero section.
    pub fn psi(&self, x: LeafCoordinates) -> Result<LeafCoordinates> {
        self.check_on_section(x)?;
        self.step(x)
    }

    pub fn psi_inverse(&self, x: LeafCoordinates) -> Result<LeafCoordinates> {
        self.check_on_section(x)?;
        self.step_back(x)
    }
}

pub fn section_return(rm: &ReturnMap, x: CoverPoint) -> Result<CoverPoint> {
    let space = rm.space();
    Ok(space.from_leaf(rm.psi(space.to_leaf(x))?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionMap {
    pub n: usize,
    pub window: f64,
    /// Section points over the nodes (i/n, j/n), i fastest.
    pub points: Vec<CoverPoint>,
    pub images: Vec<CoverPoint>,
    /// Rounded ψ(x + e_j) − ψ(x), column j.
    pub induced: [[i64; 2]; 2],
    /// sup |ψ(x+z) − ψ(x) − A z| over sampled nodes and shifts.
    pub relation_residual: f64,
    /// The same with A v in place of A z.
    pub printed_relation_residual: f64,
}

const SHIFTS: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-2.0, 1.0]];

fn matrix_i64(space: &SolSpace) -> [[i64; 2]; 2] {
    space.matrix().to_f64().map(|r| r.map(|x| x.round() as i64))
}

fn apply_i64(m: &[[i64; 2]; 2], z: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] as f64 * z[0] + m[0][1] as f64 * z[1],
        m[1][0] as f64 * z[0] + m[1][1] as f64 * z[1],
    ]
}

pub fn section_map(rm: &ReturnMap, n: usize) -> Result<SectionMap> {
    if n == 0 {
        return Err(Error::InvalidParameter("section grid needs n ≥ 1".into()));
    }
    let space = rm.space();
    let nodes: Vec<[f64; 2]> = (0..n * n).map(|k| [(k % n) as f64 / n as f64, (k / n) as f64 / n as f64]).collect();
    let pairs: Vec<(LeafCoordinates, LeafCoordinates)> = nodes
        .par_iter()
        .map(|&v| {
            let x = rm.section_point(rm.fol.labels_of(space.to_leaf(CoverPoint::new(v, 0.0)))?)?;
            Ok((x, rm.step(x)?))
        })
        .collect::<Result<_>>()?;

    let a = matrix_i64(space);
    let x0 = pairs[0].0;
    let y0 = space.from_leaf(pairs[0].1);
    let mut induced = [[0i64; 2]; 2];
    for (j, e) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
        let y = space.from_leaf(rm.psi(translate(space, x0, e))?);
        for i in 0..2 {
            induced[i][j] = (y.v[i] - y0.v[i]).round() as i64;
        }
    }

    let stride = (pairs.len() / 12).max(1);
    let checks: Vec<(f64, f64)> = pairs
        .par_iter()
        .step_by(stride)
        .map(|&(x, y)| {
            let (mut zr, mut pr) = (0.0f64, 0.0f64);
            let yv = space.from_leaf(y).v;
            let xv = space.from_leaf(x).v;
            for z in SHIFTS {
                let w = space.from_leaf(rm.psi(translate(space, x, z))?).v;
                let az = apply_i64(&a, z);
                let av = apply_i64(&a, xv);
                zr = zr.max(((w[0] - yv[0] - az[0]).powi(2) + (w[1] - yv[1] - az[1]).powi(2)).sqrt());
                pr = pr.max(((w[0] - yv[0] - av[0]).powi(2) + (w[1] - yv[1] - av[1]).powi(2)).sqrt());
            }
            Ok((zr, pr))
        })
        .collect::<Result<_>>()?;
    Ok(SectionMap {
        n,
        window: rm.window,
        points: pairs.iter().map(|p| space.from_leaf(p.0)).collect(),
        images: pairs.iter().map(|p| space.from_leaf(p.1)).collect(),
        induced,
        relation_residual: checks.iter().map(|c| c.0).fold(0.0, f64::max),
        printed_relation_residual: checks.iter().map(|c| c.1).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiconjugacyReport {
    pub n_terms: usize,
    pub points: Vec<CoverPoint>,
    /// H at each section point, in v-coordinates.
    pub h: Vec<[f64; 2]>,
    /// sup |H∘ψ − A∘H| over the grid.
    pub residual: f64,
    /// sup |H(x+z) − H(x) − z| over sampled nodes.
    pub equivariance_residual: f64,
    /// sup |H(x) − x|.
    pub max_displacement: f64,
}

struct Series {
    h: [f64; 2],
    h_image: [f64; 2],
    delta: [f64; 2],
}

/// h = H − id in eigen-coordinates at x, and at ψ(x), from the two-sided
/// sums h_u = Σ μ_u^{−(n+1)} δ_u(ψⁿx), h_s = −Σ μ_s^{n−1} δ_s(ψ⁻ⁿx).
fn series(rm: &ReturnMap, x: LeafCoordinates, n_terms: usize) -> Result<Series> {
    let space = rm.space();
    let (mu, ms) = (space.frame().mu_u(), space.frame().mu_s());
    let delta = |p: LeafCoordinates, q: LeafCoordinates| [q.u - mu * p.u, q.s - ms * p.s];
    // δ(x_n) for n = 0..=N
    let mut fwd = Vec::with_capacity(n_terms + 1);
    let mut p = x;
    for _ in 0..=n_terms {
        let q = rm.step(p)?;
        fwd.push(delta(p, q));
        p = torus_reduce(space, q).0;
    }
    // δ(y_m) for m = 1..=N, where y_m = ψ⁻¹ y_{m−1}
    let mut bwd = Vec::with_capacity(n_terms);
    let mut q = torus_reduce(space, x).0;
    for _ in 0..n_terms {
        let p = rm.step_back(q)?;
        bwd.push(delta(p, q));
        q = torus_reduce(space, p).0;
    }
    let hu = |d: &[[f64; 2]]| d.iter().enumerate().map(|(n, d)| mu.powi(-(n as i32 + 1)) * d[0]).sum::<f64>();
    let hs = |d: &[[f64; 2]]| -d.iter().enumerate().map(|(n, d)| ms.powi(n as i32) * d[1]).sum::<f64>();
    let shifted: Vec<[f64; 2]> = std::iter::once(fwd[0]).chain(bwd[..n_terms - 1].iter().copied()).collect();
    Ok(Series {
        h: [hu(&fwd[..n_terms]), hs(&bwd)],
        h_image: [hu(&fwd[1..]), hs(&shifted)],
        delta: fwd[0],
    })
}

pub fn semiconjugacy_to_linear(rm: &ReturnMap, map: &SectionMap, n_terms: usize) -> Result<SemiconjugacyReport> {
    let space = rm.space();
    let a = matrix_i64(space);
    if map.induced != a {
        return Err(Error::HomologyMismatch {
            expected: a,
            found: map.induced,
        });
    }
    if n_terms == 0 {
        return Err(Error::InvalidParameter("n_terms must be positive".into()));
    }
    let (mu, ms) = (space.frame().mu_u(), space.frame().mu_s());
    let fr = space.frame();
    let rows: Vec<([f64; 2], f64)> = map
        .points
        .par_iter()
        .map(|&p| {
            let x = space.to_leaf(p);
            let s = series(rm, x, n_terms)?;
            // δ(x) + h(ψx) − A h(x), eigen-coordinates
            let r = [
                s.delta[0] + s.h_image[0] - mu * s.h[0],
                s.delta[1] + s.h_image[1] - ms * s.h[1],
            ];
            let hv = fr.from_eigen(s.h);
            let rv = fr.from_eigen(r);
            Ok(([p.v[0] + hv[0], p.v[1] + hv[1]], rv[0].hypot(rv[1])))
        })
        .collect::<Result<_>>()?;

    let stride = (map.points.len() / 4).max(1);
    let equivariance = map
        .points
        .par_iter()
        .zip(&rows)
        .step_by(stride)
        .map(|(&p, row)| {
            let mut worst = 0.0f64;
            for z in [[1.0, 0.0], [0.0, 1.0]] {
                let x = translate(space, space.to_leaf(p), z);
                let s = series(rm, x, n_terms)?;
                let hv = fr.from_eigen(s.h);
                let xv = space.from_leaf(x).v;
                let d = [xv[0] + hv[0] - row.0[0] - z[0], xv[1] + hv[1] - row.0[1] - z[1]];
                worst = worst.max(d[0].hypot(d[1]));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    Ok(SemiconjugacyReport {
        n_terms,
        points: map.points.clone(),
        max_displacement: map
            .points
            .iter()
            .zip(&rows)
            .map(|(p, r)| (r.0[0] - p.v[0]).hypot(r.0[1] - p.v[1]))
            .fold(0.0, f64::max),
        h: rows.iter().map(|r| r.0).collect(),
        residual: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        equivariance_residual: equivariance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowPair {
    pub a: usize,
    pub b: usize,
    /// Integer shift applied to node b to bring it next to node a.
    pub shift: [i64; 2],
    pub initial_distance: f64,
    /// First step at which the pair is farther apart than epsilon.
    pub steps: Option<usize>,
    pub forward: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansivityReport {
    pub epsilon: f64,
    pub n_steps: usize,
    pub pairs: usize,
    pub expansive: bool,
    pub worst: Option<SlowPair>,
}

fn vdist(a: CoverPoint, b: CoverPoint) -> f64 {
    (a.v[0] - b.v[0]).hypot(a.v[1] - b.v[1])
}

/// Follows a pair of lifts under ψ^{±1}, translating both by the same
/// integer vector after every step.
fn separation(rm: &ReturnMap, p: LeafCoordinates, q: LeafCoordinates, eps: f64, n: usize) -> Result<Option<(usize, bool)>> {
    let space = rm.space();
    let (mut fp, mut fq, mut bp, mut bq) = (p, q, p, q);
    for m in 1..=n {
        let (np, nq) = (rm.step(fp)?, rm.step(fq)?);
        if vdist(space.from_leaf(np), space.from_leaf(nq)) > eps {
            return Ok(Some((m, true)));
        }
        let (rp, z) = torus_reduce(space, np);
        fp = rp;
        fq = translate(space, nq, z);
        let (np, nq) = (rm.step_back(bp)?, rm.step_back(bq)?);
        if vdist(space.from_leaf(np), space.from_leaf(nq)) > eps {
            return Ok(Some((m, false)));
        }
        let (rp, z) = torus_reduce(space, np);
        bp = rp;
        bq = translate(space, nq, z);
    }
    Ok(None)
}

/// Every pair of distinct section points closer than `epsilon` (with the
/// nearest integer translate of the second) must separate beyond epsilon
/// within `n` forward or backward steps.
pub fn expansivity_scan(rm: &ReturnMap, map: &SectionMap, epsilon: f64, n: usize) -> Result<ExpansivityReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let space = rm.space();
    let mut candidates = Vec::new();
    for i in 0..map.points.len() {
        for j in i + 1..map.points.len() {
            let (p, q) = (map.points[i], map.points[j]);
            let shift = [(p.v[0] - q.v[0]).round(), (p.v[1] - q.v[1]).round()];
            let qs = CoverPoint::new([q.v[0] + shift[0], q.v[1] + shift[1]], q.t);
            let d = vdist(p, qs);
            if d < epsilon && d > 0.0 {
                candidates.push((i, j, shift, d));
            }
        }
    }
    let results: Vec<SlowPair> = candidates
        .par_iter()
        .map(|&(i, j, shift, d)| {
            let p = space.to_leaf(map.points[i]);
            let q = translate(space, space.to_leaf(map.points[j]), shift);
            let sep = separation(rm, p, q, epsilon, n)?;
            Ok(SlowPair {
                a: i,
                b: j,
                shift: shift.map(|x| x as i64),
                initial_distance: d,
                steps: sep.map(|s| s.0),
                forward: sep.map_or(true, |s| s.1),
            })
        })
        .collect::<Result<_>>()?;
    let worst = results
        .iter()
        .max_by_key(|r| r.steps.unwrap_or(usize::MAX))
        .cloned();
    Ok(ExpansivityReport {
        epsilon,
        n_steps: n,
        pairs: results.len(),
        expansive: results.iter().all(|r| r.steps.is_some()),
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Unimodular;
    use crate::numdyn::{graph_transform, GridSpec, Perturbation, SectionKind};

    fn cat() -> SolSpace {
        SolSpace::new(Unimodular::from_i64([[2, 1], [1, 1]]).unwrap()).unwrap()
    }

    fn foliation(f: &PerturbedMap, grid: GridSpec) -> CenterFoliation {
        let cs = graph_transform(f, SectionKind::Cs, grid, 1e-10, 200).unwrap();
        let cu = graph_transform(f, SectionKind::Cu, grid, 1e-10, 200).unwrap();
        CenterFoliation::new(cs, cu).unwrap()
    }

    #[test]
    fn unperturbed_return_is_linear() {
        let f = PerturbedMap::homotopic_to_identity(cat(), 1, Perturbation::zero()).unwrap();
        let fol = foliation(&f, GridSpec { nv: 8, nt: 2 });
        let rm = ReturnMap::new(&f, &fol, 2.0).unwrap();
        let space = f.space();
        let x = rm.section_point([0.3, -0.2]).unwrap();
        assert!((x.t + 1.0).abs() < 1e-10 && x.u == 0.3 && x.s == -0.2);
        let y = section_return(&rm, space.from_leaf(x)).unwrap();
        let p = space.from_leaf(x);
        let expect = space.from_leaf(space.gamma3_pow_leaf(-1, space.to_leaf(space.flow(p, 1.0))));
        assert!(vdist(y, expect) < 1e-10 && (y.t - expect.t).abs() < 1e-10);
        assert!(rm.pc(space.to_leaf(y)).unwrap().abs() < 1e-10);
        let back = rm.psi_inverse(space.to_leaf(y)).unwrap();
        assert!(vdist(space.from_leaf(back), p) < 1e-10);
        let off = LeafCoordinates { t: x.t + 0.1, ..x };
        assert!(rm.psi(off).is_err());

        let map = section_map(&rm, 4).unwrap();
        assert_eq!(map.induced, [[2, 1], [1, 1]]);
        assert!(map.relation_residual < 1e-10);
        let semi = semiconjugacy_to_linear(&rm, &map, 5).unwrap();
        assert!(semi.residual < 1e-10 && semi.max_displacement < 1e-10 && semi.equivariance_residual < 1e-10);
    }

    #[test]
    fn unperturbed_expansivity_matches_linear_rate() {
        let f = PerturbedMap::homotopic_to_identity(cat(), 1, Perturbation::zero()).unwrap();
        let fol = foliation(&f, GridSpec { nv: 8, nt: 2 });
        let rm = ReturnMap::new(&f, &fol, 2.0).unwrap();
        let map = section_map(&rm, 10).unwrap();
        let eps = 0.15;
        let rep = expansivity_scan(&rm, &map, eps, 20).unwrap();
        assert!(rep.expansive);
        assert_eq!(rep.pairs, 400);
        // oracle: iterate A and A⁻¹ on the difference vector
        let a = [[2.0, 1.0], [1.0, 1.0]];
        let ai = [[1.0, -1.0], [-1.0, 2.0]];
        let steps = |d: [f64; 2]| {
            let (mut x, mut y) = (d, d);
            for m in 1.. {
                x = [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]];
                y = [ai[0][0] * y[0] + ai[0][1] * y[1], ai[1][0] * y[0] + ai[1][1] * y[1]];
                if x[0].hypot(x[1]) > eps || y[0].hypot(y[1]) > eps {
                    return m;
                }
            }
            unreachable!()
        };
        let expect = [[0.1, 0.0], [0.0, 0.1], [0.1, 0.1], [0.1, -0.1]].map(steps).into_iter().max().unwrap();
        assert_eq!(rep.worst.unwrap().steps, Some(expect));
    }

    #[test]
    fn rejects_bad_window() {
        let f = PerturbedMap::homotopic_to_identity(cat(), 1, Perturbation::zero()).unwrap();
        let fol = foliation(&f, GridSpec { nv: 4, nt: 2 });
        assert!(ReturnMap::new(&f, &fol, 0.0).is_err());
    }
}
