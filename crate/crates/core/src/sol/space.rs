use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eigen_frame, EigenFrame, UnimodularMatrix2};
use crate::pi1::GroupElement;

use super::point::{CoverPoint, LeafCoordinates, ModelLeaf};

/// The universal cover of the mapping torus of a hyperbolic A with its sol
/// metric ds² = λ^{2t} du² + λ^{−2t} ds² + dt².
#[derive(Clone, Debug)]
pub struct SolSpace {
    a: UnimodularMatrix2,
    frame: EigenFrame,
}

const PATH_REL_TOL: f64 = 1e-8;
const PATH_MAX_DEPTH: u32 = 30;

impl SolSpace {
    pub fn new(a: UnimodularMatrix2) -> Result<Self> {
        let frame = eigen_frame(&a)?;
        Ok(SolSpace { a, frame })
    }

    pub fn matrix(&self) -> &UnimodularMatrix2 {
        &self.a
    }

    pub fn frame(&self) -> &EigenFrame {
        &self.frame
    }

    pub fn lambda(&self) -> f64 {
        self.frame.lambda
    }

    pub fn to_leaf(&self, p: CoverPoint) -> LeafCoordinates {
        let [u, s] = self.frame.to_eigen(p.v);
        LeafCoordinates { u, s, t: p.t }
    }

    pub fn from_leaf(&self, c: LeafCoordinates) -> CoverPoint {
        CoverPoint::new(self.frame.from_eigen([c.u, c.s]), c.t)
    }

    /// A^k as floating point; exact while the entries stay below 2⁵³.
    pub fn power_f64(&self, k: i64) -> [[f64; 2]; 2] {
        self.a.pow(k).to_f64()
    }

    pub fn deck_apply(&self, g: &GroupElement, p: CoverPoint) -> CoverPoint {
        let m = self.power_f64(-g.n);
        let z = g.z_f64();
        CoverPoint::new(
            [
                m[0][0] * p.v[0] + m[0][1] * p.v[1] + z[0],
                m[1][0] * p.v[0] + m[1][1] * p.v[1] + z[1],
            ],
            p.t + g.n as f64,
        )
    }

    /// γ₃ⁿ in eigen-coordinates: u ↦ (sign_u λ)⁻ⁿ u, s ↦ (sign_s λ⁻¹)⁻ⁿ s.
    pub fn gamma3_pow_leaf(&self, n: i64, c: LeafCoordinates) -> LeafCoordinates {
        let f = &self.frame;
        let n32 = n as i32;
        let su = if n % 2 == 0 { 1.0 } else { f.sign_u as f64 };
        let ss = if n % 2 == 0 { 1.0 } else { f.sign_s as f64 };
        LeafCoordinates {
            u: su * f.lambda.powi(-n32) * c.u,
            s: ss * f.lambda.powi(n32) * c.s,
            t: c.t + n as f64,
        }
    }

    pub fn height(&self, p: CoverPoint) -> f64 {
        p.t
    }

    pub fn flow(&self, p: CoverPoint, t: f64) -> CoverPoint {
        CoverPoint::new(p.v, p.t + t)
    }

    pub fn leaf_through(&self, kind: super::LeafKind, p: CoverPoint) -> ModelLeaf {
        ModelLeaf::through(kind, self.to_leaf(p))
    }

    pub fn contains(&self, leaf: &ModelLeaf, p: CoverPoint) -> bool {
        leaf.contains(self.to_leaf(p), 1e-10)
    }

    /// Unstable arclength from p to a cs-leaf: λ^t |u(p) − label|.
    pub fn dist_u(&self, p: CoverPoint, leaf: &ModelLeaf) -> Result<f64> {
        match *leaf {
            ModelLeaf::Cs { u } => Ok(self.lambda().powf(p.t) * (self.to_leaf(p).u - u).abs()),
            other => Err(Error::WrongLeafKind {
                expected: "cs",
                got: other.kind().name(),
            }),
        }
    }

    /// Stable arclength from p to a cu-leaf: λ^{−t} |s(p) − label|.
    pub fn dist_s(&self, p: CoverPoint, leaf: &ModelLeaf) -> Result<f64> {
        match *leaf {
            ModelLeaf::Cu { s } => Ok(self.lambda().powf(-p.t) * (self.to_leaf(p).s - s).abs()),
            other => Err(Error::WrongLeafKind {
                expected: "cu",
                got: other.kind().name(),
            }),
        }
    }

    /// The intersection of the unstable leaf of x with the cs-leaf of y.
    pub fn bracket(&self, x: CoverPoint, y: CoverPoint) -> CoverPoint {
        let cx = self.to_leaf(x);
        let cy = self.to_leaf(y);
        self.from_leaf(LeafCoordinates {
            u: cy.u,
            s: cx.s,
            t: cx.t,
        })
    }

    /// Orthonormal frame (E_u, E_s, E_c) at height t, as columns in (v, t).
    pub fn orthonormal_frame(&self, t: f64) -> [[f64; 3]; 3] {
        let f = &self.frame;
        let lu = self.lambda().powf(-t);
        let ls = self.lambda().powf(t);
        [
            [lu * f.e_u[0], ls * f.e_s[0], 0.0],
            [lu * f.e_u[1], ls * f.e_s[1], 0.0],
            [0.0, 0.0, 1.0],
        ]
    }

    /// Sol length of a tangent vector (dv, dt) based at height t.
    pub fn tangent_norm(&self, t: f64, dv: [f64; 2], dt: f64) -> f64 {
        let [du, ds] = self.frame.to_eigen(dv);
        let l = self.lambda().powf(t);
        ((l * du).powi(2) + (ds / l).powi(2) + dt * dt).sqrt()
    }

    fn segment_length(&self, x: CoverPoint, y: CoverPoint) -> f64 {
        let cx = self.to_leaf(x);
        let cy = self.to_leaf(y);
        let (du, ds, dt) = (cy.u - cx.u, cy.s - cx.s, cy.t - cx.t);
        let ln = self.frame.log_lambda();
        let speed = |sigma: f64| {
            let l = (ln * (cx.t + sigma * dt)).exp();
            ((l * du).powi(2) + (ds / l).powi(2) + dt * dt).sqrt()
        };
        integrate(&speed, 0.0, 1.0)
    }

    /// Length of the coordinate polyline; an upper bound for the distance
    /// between its endpoints.
    pub fn path_length(&self, points: &[CoverPoint]) -> Result<f64> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        Ok(points
            .windows(2)
            .map(|w| self.segment_length(w[0], w[1]))
            .sum())
    }

    pub fn distance_upper(&self, x: CoverPoint, y: CoverPoint) -> f64 {
        self.segment_length(x, y)
    }

    /// `(g, q)` with `p = g·q` and q in [0,1)² × [0,1); t is reduced first.
    pub fn reduce_to_fundamental(&self, p: CoverPoint) -> (GroupElement, CoverPoint) {
        let n = p.t.floor();
        let mut t = p.t - n;
        let mut n = n as i64;
        if t >= 1.0 {
            t = 0.0;
            n += 1;
        }
        let m = self.power_f64(n);
        let w = [
            m[0][0] * p.v[0] + m[0][1] * p.v[1],
            m[1][0] * p.v[0] + m[1][1] * p.v[1],
        ];
        let mut zp = [0i64; 2];
        let mut q = [0.0; 2];
        for i in 0..2 {
            let f = w[i].floor();
            zp[i] = f as i64;
            q[i] = w[i] - f;
            if q[i] >= 1.0 {
                q[i] = 0.0;
                zp[i] += 1;
            }
        }
        let z = self.a.pow(-n).mul_vec(&zp.map(BigInt::from));
        (GroupElement { z, n }, CoverPoint::new(q, t))
    }

    /// Symmetric max–min of coordinate-segment distances between samples.
    pub fn hausdorff_estimate(&self, a: &[CoverPoint], b: &[CoverPoint]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptySample);
        }
        let one_sided = |x: &[CoverPoint], y: &[CoverPoint]| {
            x.par_iter()
                .map(|&p| {
                    y.iter()
                        .map(|&q| self.distance_upper(p, q))
                        .fold(f64::INFINITY, f64::min)
                })
                .reduce(|| 0.0, f64::max)
        };
        Ok(one_sided(a, b).max(one_sided(b, a)))
    }
}

/// Adaptive midpoint rule with one Richardson step per panel.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (est, _) = panel(f, a, b);
    adapt(f, a, b, PATH_REL_TOL * est.abs(), PATH_MAX_DEPTH)
}

fn panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let h = b - a;
    let m1 = h * f(a + 0.5 * h);
    let m2 = 0.5 * h * (f(a + 0.25 * h) + f(a + 0.75 * h));
    ((4.0 * m2 - m1) / 3.0, (m2 - m1).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (est, err) = panel(f, a, b);
    if err <= tol || depth == 0 {
        return est;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth - 1) + adapt(f, mid, b, 0.5 * tol, depth - 1)
}
