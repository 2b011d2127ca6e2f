//! Cone-field certification of sampled derivative cocycles.
//!
//! Frame axes are ordered (u, s, c). The u- and s-cones are quadratic cones
//! around an axis, the cu- and cs-cones are quadratic cones around the
//! plane orthogonal to the s- and u-axis respectively. Invariance is
//! checked by maximizing the image opening over the boundary circle of
//! rays, which bounds the whole image cone for a linear map.

use std::io::{Read, Write};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sol::CoverPoint;

use super::certificate::{ConeMargins, ConeOpenings, ConeReport, PHCertificate, Rates};

const BOUNDARY_SAMPLES: usize = 96;
const REFINE_TOL: f64 = 1e-12;
const NARROW_MAX_ITER: usize = 500;
const NARROW_FLOOR: f64 = 1e-12;

/// Derivatives in the (u, s, c) frame over a grid of base points, with the
/// grid step map.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCocycle {
    pub points: Vec<CoverPoint>,
    pub matrices: Vec<Matrix3<f64>>,
    pub next: Vec<usize>,
    pub mesh: f64,
}

impl SampledCocycle {
    pub fn new(
        points: Vec<CoverPoint>,
        matrices: Vec<Matrix3<f64>>,
        next: Vec<usize>,
        mesh: f64,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        for len in [matrices.len(), next.len()] {
            if len != points.len() {
                return Err(Error::Dimension {
                    expected: points.len(),
                    got: len,
                });
            }
        }
        if let Some(bad) = next.iter().find(|&&j| j >= points.len()) {
            return Err(Error::InvalidParameter(format!("step index {bad} out of range")));
        }
        if let Some(i) = matrices.iter().position(|m| !m.iter().all(|x| x.is_finite()) || m.determinant().abs() < 1e-300) {
            return Err(Error::InvalidParameter(format!("singular derivative at grid point {i}")));
        }
        Ok(SampledCocycle {
            points,
            matrices,
            next,
            mesh,
        })
    }

    /// A single fixed point carrying the constant matrix.
    pub fn constant(m: Matrix3<f64>) -> Result<Self> {
        Self::new(vec![CoverPoint::new([0.0, 0.0], 0.0)], vec![m], vec![0], 1.0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// N-step products D(f^{N−1} x) ⋯ D(x) along the step map.
    pub fn products(&self, n: u32) -> Vec<Matrix3<f64>> {
        let mut prod = self.matrices.clone();
        for _ in 1..n {
            prod = (0..self.len())
                .into_par_iter()
                .map(|i| prod[self.next[i]] * self.matrices[i])
                .collect();
        }
        prod
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["v1".to_string(), "v2".into(), "t".into(), "next".into()];
        for i in 0..3 {
            for j in 0..3 {
                header.push(format!("m{i}{j}"));
            }
        }
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for k in 0..self.len() {
            let p = self.points[k];
            let mut rec = vec![p.v[0].to_string(), p.v[1].to_string(), p.t.to_string(), self.next[k].to_string()];
            for i in 0..3 {
                for j in 0..3 {
                    rec.push(self.matrices[k][(i, j)].to_string());
                }
            }
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, mesh: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let (mut points, mut matrices, mut next) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 13 {
                return Err(Error::Parse(format!("expected 13 columns, got {}", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i].trim().parse().map_err(|e| Error::Parse(format!("column {i}: {e}")))
            };
            points.push(CoverPoint::new([num(0)?, num(1)?], num(2)?));
            next.push(rec[3].trim().parse().map_err(|e| Error::Parse(format!("next: {e}")))?);
            let mut m = Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = num(4 + 3 * i + j)?;
                }
            }
            matrices.push(m);
        }
        Self::new(points, matrices, next, mesh)
    }
}

#[derive(Clone, Copy, Debug)]
enum Cone {
    /// |v_⊥| ≤ a |v_k|
    Axis(usize),
    /// |v_k| ≤ a |v_⊥|
    Plane(usize),
}

impl Cone {
    fn others(k: usize) -> (usize, usize) {
        ((k + 1) % 3, (k + 2) % 3)
    }

    fn opening(self, w: &Vector3<f64>) -> f64 {
        let (k, (p, q)) = match self {
            Cone::Axis(k) | Cone::Plane(k) => (k, Self::others(k)),
        };
        let along = w[k].abs();
        let across = w[p].hypot(w[q]);
        match self {
            Cone::Axis(_) => across / along,
            Cone::Plane(_) => along / across,
        }
    }

    fn boundary_ray(self, a: f64, theta: f64) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        let (c, s) = (theta.cos(), theta.sin());
        match self {
            Cone::Axis(k) => {
                let (p, q) = Self::others(k);
                v[k] = 1.0;
                v[p] = a * c;
                v[q] = a * s;
            }
            Cone::Plane(k) => {
                let (p, q) = Self::others(k);
                v[k] = a;
                v[p] = c;
                v[q] = s;
            }
        }
        v
    }

    fn contains(self, v: &Vector3<f64>, a: f64) -> bool {
        self.opening(v) <= a
    }
}

/// Maximum of a smooth 2π-periodic function: dense sampling, then
/// golden-section refinement around the best samples.
fn maximize_periodic(f: impl Fn(f64) -> f64) -> f64 {
    let h = std::f64::consts::TAU / BOUNDARY_SAMPLES as f64;
    let vals: Vec<f64> = (0..BOUNDARY_SAMPLES).map(|i| f(i as f64 * h)).collect();
    let mut order: Vec<usize> = (0..BOUNDARY_SAMPLES).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let mut best = vals[order[0]];
    if !best.is_finite() {
        return best;
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    for &i in order.iter().take(3) {
        let (mut lo, mut hi) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
        let mut x1 = hi - golden * (hi - lo);
        let mut x2 = lo + golden * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > REFINE_TOL {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - golden * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + golden * (hi - lo);
                f2 = f(x2);
            }
        }
        best = best.max(f1).max(f2);
    }
    best
}

/// Largest opening of the image of the cone of opening `a` under `d`.
fn image_opening(cone: Cone, a: f64, d: &Matrix3<f64>) -> f64 {
    maximize_periodic(|theta| {
        let w = d * cone.boundary_ray(a, theta);
        let o = cone.opening(&w);
        if o.is_nan() {
            f64::INFINITY
        } else {
            o
        }
    })
}

/// Extremes (min, max) of |d v| / |v| over the solid cone.
fn stretch_range(cone: Cone, a: f64, d: &Matrix3<f64>) -> (f64, f64) {
    let ratio = |v: Vector3<f64>| (d * v).norm() / v.norm();
    let hi_b = maximize_periodic(|th| ratio(cone.boundary_ray(a, th)));
    let lo_b = -maximize_periodic(|th| -ratio(cone.boundary_ray(a, th)));
    let (mut lo, mut hi) = (lo_b, hi_b);
    // interior critical points are eigenvectors of dᵀd
    let eig = SymmetricEigen::new(d.transpose() * d);
    for k in 0..3 {
        let v = eig.eigenvectors.column(k).into_owned();
        if cone.contains(&v, a) {
            let r = eig.eigenvalues[k].max(0.0).sqrt();
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

struct Family {
    cone: Cone,
    backward: bool,
}

const FAMILIES: [Family; 4] = [
    Family { cone: Cone::Axis(0), backward: false },
    Family { cone: Cone::Axis(1), backward: true },
    Family { cone: Cone::Plane(1), backward: false },
    Family { cone: Cone::Plane(0), backward: true },
];

fn worst_image(cone: Cone, a: f64, maps: &[Matrix3<f64>]) -> (usize, f64) {
    maps.par_iter()
        .enumerate()
        .map(|(i, d)| (i, image_opening(cone, a, d)))
        .reduce(|| (0, f64::NEG_INFINITY), |x, y| if y.1 > x.1 { y } else { x })
}

/// Iterates a ↦ max image opening until it stops shrinking.
fn narrow(cone: Cone, a0: f64, maps: &[Matrix3<f64>]) -> f64 {
    let mut a = a0;
    for _ in 0..NARROW_MAX_ITER {
        let (_, b) = worst_image(cone, a, maps);
        if !(b < a) {
            break;
        }
        if b <= NARROW_FLOOR || a - b <= 1e-9 * a {
            a = b;
            break;
        }
        a = b;
    }
    a
}

/// Certifies partial hyperbolicity of the N-step cocycle with cones of
/// the given opening (tangent of the half-angle).
pub fn cone_certify(cocycle: &SampledCocycle, opening: f64, n: u32) -> Result<PHCertificate> {
    if !(opening > 0.0 && opening < 1.0) {
        return Err(Error::InvalidParameter(format!("cone opening {opening} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    let forward = cocycle.products(n);
    let backward: Vec<Matrix3<f64>> = forward
        .iter()
        .map(|m| m.try_inverse().ok_or(Error::InvalidParameter("singular product".into())))
        .collect::<Result<_>>()?;

    let mut margins = [0.0; 4];
    let mut narrowed = [0.0; 4];
    for (k, fam) in FAMILIES.iter().enumerate() {
        let maps = if fam.backward { &backward } else { &forward };
        let (i, worst) = worst_image(fam.cone, opening, maps);
        if !(worst < opening) {
            return Err(Error::ConeNotInvariant(i));
        }
        margins[k] = (opening - worst) / opening;
        narrowed[k] = narrow(fam.cone, opening, maps);
    }
    let [a_u, a_s, a_cu, a_cs] = narrowed;
    let a_plane = a_cu.max(a_cs);
    // C_cs ∩ C_cu lies in the cone of this opening around the c-axis
    let a_c = a_plane * (2.0 / (1.0 - a_plane * a_plane)).sqrt();

    // upper rates come from the inverse on the cone at the image point;
    // the forward stretch of a thick cone would pick up leakage from u
    let per_point: Vec<Rates> = forward
        .par_iter()
        .zip(backward.par_iter())
        .map(|(d, inv)| {
            let (s_lower, _) = stretch_range(Cone::Axis(1), a_s, d);
            let s_upper = 1.0 / stretch_range(Cone::Axis(1), a_s, inv).0;
            let (c_lower, _) = stretch_range(Cone::Axis(2), a_c, d);
            // the two center bounds come from d and d⁻¹ separately and can
            // cross by rounding on a degenerate cone
            let c_upper = (1.0 / stretch_range(Cone::Axis(2), a_c, inv).0).max(c_lower);
            let (u_lower, _) = stretch_range(Cone::Axis(0), a_u, d);
            Rates {
                s_lower,
                s_upper,
                c_lower,
                c_upper,
                u_lower,
            }
        })
        .collect();
    let pointwise_failures = per_point.iter().filter(|r| !r.is_dominated()).count();
    let rates = per_point.iter().fold(
        Rates {
            s_lower: f64::INFINITY,
            s_upper: 0.0,
            c_lower: f64::INFINITY,
            c_upper: 0.0,
            u_lower: f64::INFINITY,
        },
        |acc, r| Rates {
            s_lower: acc.s_lower.min(r.s_lower),
            s_upper: acc.s_upper.max(r.s_upper),
            c_lower: acc.c_lower.min(r.c_lower),
            c_upper: acc.c_upper.max(r.c_upper),
            u_lower: acc.u_lower.min(r.u_lower),
        },
    );
    let mut cert = PHCertificate::from_rates(n, rates, pointwise_failures == 0);
    cert.cones = Some(ConeReport {
        opening,
        margins: ConeMargins {
            u: margins[0],
            s: margins[1],
            cu: margins[2],
            cs: margins[3],
        },
        narrowed: ConeOpenings {
            u: a_u,
            s: a_s,
            cu: a_cu,
            cs: a_cs,
            c: a_c,
        },
        points: cocycle.len(),
        pointwise_failures,
    });
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{certify_linear_t3, Flavor};

    fn diag(u: f64, s: f64, c: f64) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(u, s, c))
    }

    #[test]
    fn constant_diagonal() {
        let cert = cone_certify(&SampledCocycle::constant(diag(3.0, 0.3, 1.0)).unwrap(), 0.5, 1).unwrap();
        assert_eq!(cert.flavor, Flavor::Absolute);
        let r = cert.rates;
        for (x, y) in [(r.s_upper, 0.3), (r.s_lower, 0.3), (r.c_lower, 1.0), (r.c_upper, 1.0), (r.u_lower, 3.0)] {
            assert!((x - y).abs() < 1e-10, "{r:?}");
        }
        let m = cert.cones.unwrap().margins;
        assert!((m.u - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn identity_is_rejected() {
        let res = cone_certify(&SampledCocycle::constant(Matrix3::identity()).unwrap(), 0.3, 1);
        assert_eq!(res, Err(Error::ConeNotInvariant(0)));
    }

    #[test]
    fn bad_parameters() {
        let c = SampledCocycle::constant(diag(3.0, 0.3, 1.0)).unwrap();
        assert!(matches!(cone_certify(&c, 1.0, 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(cone_certify(&c, 0.5, 0), Err(Error::InvalidParameter(_))));
        assert!(SampledCocycle::constant(Matrix3::zeros()).is_err());
    }

    #[test]
    fn image_opening_of_shear() {
        // d = [[2, 0, 0], [1, 0.5, 0], [0, 0, 1]]: image of e_u + a(cos, sin) has
        // opening |(1 + 0.5 a cos, a sin)| / 2
        let mut d = diag(2.0, 0.5, 1.0);
        d[(1, 0)] = 1.0;
        let a = 0.4;
        let brute = (0..100_000)
            .map(|i| {
                let th = i as f64 * std::f64::consts::TAU / 100_000.0;
                (1.0 + 0.5 * a * th.cos()).hypot(a * th.sin()) / 2.0
            })
            .fold(0.0, f64::max);
        assert!((image_opening(Cone::Axis(0), a, &d) - brute).abs() < 1e-9);
    }

    #[test]
    fn stretch_range_brute_force() {
        let d = Matrix3::new(2.0, 0.3, -0.1, 0.2, 0.4, 0.05, 0.1, -0.2, 1.1);
        let a = 0.3;
        let (lo, hi) = stretch_range(Cone::Axis(0), a, &d);
        let (mut blo, mut bhi) = (f64::INFINITY, 0.0f64);
        for i in 0..=200 {
            for j in 0..400 {
                let r = a * i as f64 / 200.0;
                let th = j as f64 * std::f64::consts::TAU / 400.0;
                let v = Vector3::new(1.0, r * th.cos(), r * th.sin());
                let q = (d * v).norm() / v.norm();
                blo = blo.min(q);
                bhi = bhi.max(q);
            }
        }
        assert!(lo <= blo + 1e-12 && lo > blo - 1e-4, "{lo} {blo}");
        assert!(hi >= bhi - 1e-12 && hi < bhi + 1e-4, "{hi} {bhi}");
    }

    #[test]
    fn iterate_consistency() {
        let c = SampledCocycle::constant(diag(-2.618, 0.382, -1.0)).unwrap();
        let one = cone_certify(&c, 0.5, 1).unwrap().rates;
        let two = cone_certify(&c, 0.5, 2).unwrap().rates;
        let sq = one.powi(2);
        for (x, y) in [(two.s_upper, sq.s_upper), (two.c_lower, sq.c_lower), (two.u_lower, sq.u_lower)] {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_linear_certificate() {
        use crate::linalg::{eigenvalues3, Unimodular};
        let m = Unimodular::from_i64([[5, 2, 3], [2, 1, 1], [0, 0, 1]]).unwrap();
        let ev = eigenvalues3(&m);
        let c = SampledCocycle::constant(diag(ev[2].re, ev[0].re, ev[1].re)).unwrap();
        let cone = cone_certify(&c, 0.5, 1).unwrap();
        let lin = certify_linear_t3(&m);
        assert_eq!(cone.flavor, lin.flavor);
        assert!((cone.rates.u_lower - lin.rates.u_lower).abs() < 1e-8);
        assert!((cone.rates.s_upper - lin.rates.s_upper).abs() < 1e-8);
        assert!((cone.rates.c_lower - lin.rates.c_lower).abs() < 1e-8);
    }

    #[test]
    fn csv_round_trip() {
        let mut d = diag(3.0, 0.3, 1.0);
        d[(0, 2)] = 0.125;
        let c = SampledCocycle::new(
            vec![CoverPoint::new([0.0, 0.5], 0.25), CoverPoint::new([0.5, 0.5], 0.75)],
            vec![d, diag(2.0, 0.5, 1.0)],
            vec![1, 0],
            0.5,
        )
        .unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("v1,v2,t,next,m00,m01,m02,m10"));
        assert_eq!(SampledCocycle::read_csv(buf.as_slice(), 0.5).unwrap(), c);
    }
}
