use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::SampledCocycle;
use crate::error::{Error, Result};
use crate::pi1::{aut_apply, build_model, AffineModel, AutomorphismData, GroupElement};
use crate::sol::{CoverPoint, LeafCoordinates, SolSpace};

use crate::linalg::UnimodularMatrix2;

pub const DEFAULT_ADMISSIBLE_EPS: f64 = 0.1;
const FD_STEP: f64 = 1e-5;

/// One Fourier mode `amp · sin(2π p·v + phase)` of a displacement component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub component: usize,
    pub p: [i32; 2],
    pub amp: f64,
    pub phase: f64,
}

/// Displacement field δ = ε (a E_u + b E_s + c ∂_t) in the orthonormal frame.
///
/// Each component is F(v, t) = Σ_m σ^m g(A^m v) ρ(t − m) for a trigonometric
/// polynomial g on T² and a partition of unity ρ, so F(γ₃x) = σF(x) with σ
/// the sign of the matching eigenvalue; this is exactly what makes the
/// displaced map commute with the deck group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub eps: f64,
    pub modes: Vec<Mode>,
}

const MODE_VECTORS: [[i32; 2]; 4] = [[1, 0], [0, 1], [1, 1], [1, -1]];

impl Perturbation {
    pub fn zero() -> Self {
        Perturbation { eps: 0.0, modes: Vec::new() }
    }

    /// Seeded random field with sup-norm at most `eps`.
    pub fn random(eps: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for component in 0..3 {
            let raw: Vec<(f64, f64)> = MODE_VECTORS
                .iter()
                .map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            let total: f64 = raw.iter().map(|r| r.0).sum();
            for (p, (amp, phase)) in MODE_VECTORS.iter().zip(raw) {
                modes.push(Mode {
                    component,
                    p: *p,
                    amp: amp / total / 3f64.sqrt(),
                    phase,
                });
            }
        }
        Perturbation { eps, modes }
    }

    pub fn is_zero(&self) -> bool {
        self.eps == 0.0 || self.modes.is_empty()
    }

    fn g(&self, component: usize, v: [f64; 2]) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.component == component)
            .map(|m| {
                let arg = std::f64::consts::TAU * (m.p[0] as f64 * v[0] + m.p[1] as f64 * v[1]) + m.phase;
                m.amp * arg.sin()
            })
            .sum()
    }
}

/// cos²(π/2 · S(|t|)) with S(x) = 3x² − 2x³; ρ(t) + ρ(t − 1) = 1 on [0, 1].
fn rho(t: f64) -> f64 {
    let x = t.abs();
    if x >= 1.0 {
        return 0.0;
    }
    let s = x * x * (3.0 - 2.0 * x);
    (std::f64::consts::FRAC_PI_2 * s).cos().powi(2)
}

/// x = γ₃ⁿ(x₀ + z) with x₀ in [0,1)² × [0,1).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Reduced {
    pub n: i64,
    pub v: [f64; 2],
    pub t: f64,
}

pub(crate) fn reduce_leaf(space: &SolSpace, c: LeafCoordinates) -> Reduced {
    let mut n = c.t.floor();
    let mut t = c.t - n;
    if t >= 1.0 {
        t = 0.0;
        n += 1.0;
    }
    let n = n as i64;
    let c0 = space.gamma3_pow_leaf(-n, c);
    let w = space.frame().from_eigen([c0.u, c0.s]);
    let v = w.map(|x| {
        let f = x - x.floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    });
    Reduced { n, v, t }
}

pub(crate) fn twist(sign: i8, n: i64) -> f64 {
    if sign < 0 && n % 2 != 0 {
        -1.0
    } else {
        1.0
    }
}

/// Sol-frame components of `d` based at height `t`.
pub(crate) fn frame_components(lambda: f64, t: f64, d: [f64; 3]) -> Vector3<f64> {
    let l = lambda.powf(t);
    Vector3::new(l * d[0], d[1] / l, d[2])
}

/// f = Φ_k ∘ P on the universal cover, where Φ_k is the affine model of
/// an automorphism followed by the height shift t ↦ t + k and P is the
/// displacement by a [`Perturbation`].
#[derive(Clone, Debug)]
pub struct PerturbedMap {
    space: SolSpace,
    data: AutomorphismData,
    model: AffineModel,
    k: u32,
    perturbation: Perturbation,
    beta: [f64; 2],
    shift: [f64; 2],
    a_f64: [[f64; 2]; 2],
}

impl PerturbedMap {
    pub fn new(space: SolSpace, data: AutomorphismData, k: u32, perturbation: Perturbation) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("height shift k must be at least 1".into()));
        }
        if data.e != 1 {
            return Err(Error::InvalidParameter("the base model must preserve orientation of the flow (e = 1)".into()));
        }
        if !perturbation.eps.is_finite() || perturbation.eps < 0.0 {
            return Err(Error::InvalidParameter(format!("eps must be non-negative, got {}", perturbation.eps)));
        }
        let model = build_model(space.matrix(), &data)?;
        let b = model.b.to_f64();
        let frame = *space.frame();
        let mut beta = [0.0; 2];
        for (i, e) in [frame.e_u, frame.e_s].into_iter().enumerate() {
            let be = [b[0][0] * e[0] + b[0][1] * e[1], b[1][0] * e[0] + b[1][1] * e[1]];
            let c = frame.to_eigen(be);
            let (along, across) = if i == 0 { (c[0], c[1]) } else { (c[1], c[0]) };
            if across.abs() > 1e-9 * along.abs().max(1.0) {
                return Err(Error::InvalidParameter("B does not preserve the eigenlines of A".into()));
            }
            beta[i] = along;
        }
        let shift = frame.to_eigen([model.w.to_f64()[0], model.w.to_f64()[1]]);
        let a_f64 = space.matrix().to_f64();
        Ok(PerturbedMap {
            space,
            data,
            model,
            k,
            perturbation,
            beta,
            shift,
            a_f64,
        })
    }

    /// Time-k map of the suspension flow, displaced by `perturbation`.
    pub fn homotopic_to_identity(space: SolSpace, k: u32, perturbation: Perturbation) -> Result<Self> {
        let data = AutomorphismData::new(UnimodularMatrix2::identity(), [0, 0], 1);
        Self::new(space, data, k, perturbation)
    }

    pub fn space(&self) -> &SolSpace {
        &self.space
    }

    pub fn data(&self) -> &AutomorphismData {
        &self.data
    }

    pub fn model(&self) -> &AffineModel {
        &self.model
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.perturbation.eps
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.perturbation
    }

    pub fn is_admissible(&self, threshold: f64) -> bool {
        self.perturbation.eps <= threshold
    }

    /// Whether the base is the time-k flow, so that f fixes every center leaf
    /// of the model.
    pub fn is_flow_like(&self) -> bool {
        self.model.b.matrix().is_identity() && self.shift == [0.0, 0.0]
    }

    /// Frame components (a, b, c) of the displacement at `c`, before scaling by ε.
    pub fn displacement(&self, c: LeafCoordinates) -> [f64; 3] {
        if self.perturbation.is_zero() {
            return [0.0; 3];
        }
        let r = reduce_leaf(&self.space, c);
        let a = &self.a_f64;
        let av = [a[0][0] * r.v[0] + a[0][1] * r.v[1], a[1][0] * r.v[0] + a[1][1] * r.v[1]];
        let (r0, r1) = (rho(r.t), rho(r.t - 1.0));
        let frame = self.space.frame();
        let signs = [frame.sign_u, frame.sign_s, 1];
        std::array::from_fn(|i| {
            let sigma = signs[i] as f64;
            let local = r0 * self.perturbation.g(i, r.v) + sigma * r1 * self.perturbation.g(i, av);
            self.perturbation.eps * twist(signs[i], r.n) * local
        })
    }

    fn displace(&self, c: LeafCoordinates) -> LeafCoordinates {
        let [a, b, h] = self.displacement(c);
        let l = self.space.lambda().powf(c.t);
        LeafCoordinates {
            u: c.u + a / l,
            s: c.s + b * l,
            t: c.t + h,
        }
    }

    pub fn base_leaf(&self, c: LeafCoordinates) -> LeafCoordinates {
        LeafCoordinates {
            u: self.beta[0] * c.u + self.shift[0],
            s: self.beta[1] * c.s + self.shift[1],
            t: c.t + self.k as f64,
        }
    }

    pub fn base_inverse_leaf(&self, c: LeafCoordinates) -> LeafCoordinates {
        LeafCoordinates {
            u: (c.u - self.shift[0]) / self.beta[0],
            s: (c.s - self.shift[1]) / self.beta[1],
            t: c.t - self.k as f64,
        }
    }

    pub fn apply_leaf(&self, c: LeafCoordinates) -> LeafCoordinates {
        self.base_leaf(self.displace(c))
    }

    pub fn apply(&self, p: CoverPoint) -> CoverPoint {
        self.space.from_leaf(self.apply_leaf(self.space.to_leaf(p)))
    }

    /// f⁻¹ by Newton's method on the displacement, in frame-scaled
    /// coordinates around Φ_k⁻¹(y).
    pub fn inverse_leaf(&self, y: LeafCoordinates) -> Result<LeafCoordinates> {
        let z = self.base_inverse_leaf(y);
        if self.perturbation.is_zero() {
            return Ok(z);
        }
        let lam = self.space.lambda();
        let lz = lam.powf(z.t);
        let point = |xi: &Vector3<f64>| LeafCoordinates {
            u: z.u + xi[0] / lz,
            s: z.s + xi[1] * lz,
            t: z.t + xi[2],
        };
        let residual = |xi: &Vector3<f64>| {
            let d = self.displace(point(xi));
            Vector3::new(lz * (d.u - z.u), (d.s - z.s) / lz, d.t - z.t)
        };
        let jacobian = |xi: &Vector3<f64>| {
            let mut jac = Matrix3::zeros();
            for j in 0..3 {
                let mut e = Vector3::zeros();
                e[j] = FD_STEP;
                let col = (residual(&(xi + e)) - residual(&(xi - e))) / (2.0 * FD_STEP);
                jac.set_column(j, &col);
            }
            jac.lu()
        };
        // chord iteration, refreshing the Jacobian only when it stalls
        let mut xi = Vector3::zeros();
        let mut r = residual(&xi);
        let mut lu = jacobian(&xi);
        for _ in 0..50 {
            if r.norm() < 1e-13 {
                return Ok(point(&xi));
            }
            let step = lu.solve(&r).ok_or(Error::SingularMatrix)?;
            let next = xi - step;
            let rn = residual(&next);
            if rn.norm() > 0.5 * r.norm() {
                lu = jacobian(&next);
            }
            xi = next;
            r = rn;
        }
        if r.norm() < 1e-10 {
            return Ok(point(&xi));
        }
        Err(Error::NotConverged {
            what: "inverse map",
            iterations: 50,
            residual: r.norm(),
        })
    }

    pub fn inverse(&self, p: CoverPoint) -> Result<CoverPoint> {
        Ok(self.space.from_leaf(self.inverse_leaf(self.space.to_leaf(p))?))
    }

    /// Df(c) from the frame at c to the frame at f(c), axes (u, s, c).
    pub fn frame_derivative(&self, c: LeafCoordinates) -> Matrix3<f64> {
        let lam = self.space.lambda();
        let y = self.apply_leaf(c);
        let lc = lam.powf(c.t);
        let mut d = Matrix3::zeros();
        for j in 0..3 {
            let mut step = [0.0; 3];
            step[j] = FD_STEP;
            let shift = |sgn: f64| LeafCoordinates {
                u: c.u + sgn * step[0] / lc,
                s: c.s + sgn * step[1] * lc,
                t: c.t + sgn * step[2],
            };
            let (p, q) = (self.apply_leaf(shift(1.0)), self.apply_leaf(shift(-1.0)));
            let diff = [p.u - q.u, p.s - q.s, p.t - q.t].map(|x| x / (2.0 * FD_STEP));
            d.set_column(j, &frame_components(lam, y.t, diff));
        }
        d
    }

    /// Sol-frame operator norm of the displacement derivative, maximized
    /// over the samples.
    pub fn lipschitz_estimate(&self, samples: &[CoverPoint]) -> f64 {
        let lam = self.space.lambda();
        samples
            .iter()
            .map(|&p| {
                let c = self.space.to_leaf(p);
                let lc = lam.powf(c.t);
                let mut d = Matrix3::zeros();
                for j in 0..3 {
                    let mut step = [0.0; 3];
                    step[j] = FD_STEP;
                    let at = |sgn: f64| {
                        self.displacement(LeafCoordinates {
                            u: c.u + sgn * step[0] / lc,
                            s: c.s + sgn * step[1] * lc,
                            t: c.t + sgn * step[2],
                        })
                    };
                    let (a, b) = (at(1.0), at(-1.0));
                    d.set_column(j, &Vector3::from_fn(|i, _| (a[i] - b[i]) / (2.0 * FD_STEP)));
                }
                d.svd(false, false).singular_values.max()
            })
            .fold(0.0, f64::max)
    }

    /// Largest sol distance between f(γp) and φ(γ)f(p) over the pairs.
    pub fn equivariance_residual(&self, pairs: &[(GroupElement, CoverPoint)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (g, p) in pairs {
            let lhs = self.apply(self.space.deck_apply(g, *p));
            let img = aut_apply(self.space.matrix(), &self.data, g)?;
            let rhs = self.space.deck_apply(&img, self.apply(*p));
            worst = worst.max(self.space.distance_upper(lhs, rhs));
        }
        Ok(worst)
    }

    /// Derivative cocycle on an n_v × n_v × n_t grid of the fundamental
    /// domain, with each image snapped to the nearest grid node.
    pub fn sampled_cocycle(&self, nv: usize, nt: usize) -> Result<SampledCocycle> {
        if nv == 0 || nt == 0 {
            return Err(Error::InvalidParameter("grid dimensions must be positive".into()));
        }
        let frame = *self.space.frame();
        let index = |i: usize, j: usize, l: usize| (l * nv + j) * nv + i;
        let mut points = vec![CoverPoint::new([0.0; 2], 0.0); nv * nv * nt];
        let mut matrices = vec![Matrix3::zeros(); nv * nv * nt];
        let mut next = vec![0; nv * nv * nt];
        for l in 0..nt {
            for j in 0..nv {
                for i in 0..nv {
                    let p = CoverPoint::new([i as f64 / nv as f64, j as f64 / nv as f64], l as f64 / nt as f64);
                    let c = self.space.to_leaf(p);
                    let r = reduce_leaf(&self.space, self.apply_leaf(c));
                    let signs = Matrix3::from_diagonal(&Vector3::new(
                        twist(frame.sign_u, r.n),
                        twist(frame.sign_s, r.n),
                        1.0,
                    ));
                    let snap = |x: f64, n: usize| ((x * n as f64).round() as usize) % n;
                    let k = index(i, j, l);
                    points[k] = p;
                    matrices[k] = signs * self.frame_derivative(c);
                    next[k] = index(snap(r.v[0], nv), snap(r.v[1], nv), snap(r.t, nt));
                }
            }
        }
        let h = 1.0 / nv as f64;
        let side = [
            self.space.tangent_norm(1.0, [h, 0.0], 0.0).max(self.space.tangent_norm(0.0, [h, 0.0], 0.0)),
            self.space.tangent_norm(1.0, [0.0, h], 0.0).max(self.space.tangent_norm(0.0, [0.0, h], 0.0)),
            1.0 / nt as f64,
        ];
        let mesh = side.iter().map(|x| x * x).sum::<f64>().sqrt();
        SampledCocycle::new(points, matrices, next, mesh)
    }
}
