use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sol::{CoverPoint, LeafCoordinates, SolSpace};

use super::perturbed::PerturbedMap;

/// Height p₁ along a polyline, as a function of sol arclength.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafProfile {
    pub tau: Vec<f64>,
    pub height: Vec<f64>,
    cum: Vec<f64>,
}

impl LeafProfile {
    pub fn new(space: &SolSpace, points: &[LeafCoordinates]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        let lam = space.lambda();
        let mut tau = vec![0.0];
        let mut cum = vec![0.0];
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let l = lam.powf(0.5 * (a.t + b.t));
            let ds = ((l * (b.u - a.u)).powi(2) + ((b.s - a.s) / l).powi(2) + (b.t - a.t).powi(2)).sqrt();
            let last = *tau.last().unwrap_or(&0.0);
            tau.push(last + ds);
            let c = *cum.last().unwrap_or(&0.0);
            cum.push(c + 0.5 * ds * (a.t + b.t));
        }
        Ok(LeafProfile {
            tau,
            height: points.iter().map(|p| p.t).collect(),
            cum,
        })
    }

    pub fn length(&self) -> f64 {
        *self.tau.last().unwrap_or(&0.0)
    }

    fn segment(&self, tau: f64) -> usize {
        let i = self.tau.partition_point(|&x| x <= tau);
        i.saturating_sub(1).min(self.tau.len() - 2)
    }

    pub fn height_at(&self, tau: f64) -> f64 {
        let i = self.segment(tau);
        let w = (tau - self.tau[i]) / (self.tau[i + 1] - self.tau[i]);
        self.height[i] + w * (self.height[i + 1] - self.height[i])
    }

    /// ∫₀^τ p₁, exact for the piecewise linear profile.
    fn integral_to(&self, tau: f64) -> f64 {
        let i = self.segment(tau);
        let d = tau - self.tau[i];
        let h = self.height_at(tau);
        self.cum[i] + 0.5 * d * (self.height[i] + h)
    }

    /// (1/T) ∫_τ^{τ+T} p₁, or `None` outside [0, length − T].
    pub fn pc_at(&self, tau: f64, window: f64) -> Option<f64> {
        if tau < -1e-12 || tau + window > self.length() + 1e-12 {
            return None;
        }
        let tau = tau.max(0.0);
        let end = (tau + window).min(self.length());
        Some((self.integral_to(end) - self.integral_to(tau)) / window)
    }

    /// Arclength parameter of the node-interpolated point at height `t`,
    /// for profiles with increasing heights.
    pub fn tau_at_height(&self, t: f64) -> Option<f64> {
        let n = self.height.len();
        if t < self.height[0] || t > self.height[n - 1] {
            return None;
        }
        let i = self.height.partition_point(|&h| h <= t).saturating_sub(1).min(n - 2);
        let w = (t - self.height[i]) / (self.height[i + 1] - self.height[i]);
        Some(self.tau[i] + w * (self.tau[i + 1] - self.tau[i]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullerProfile {
    pub window: f64,
    pub arclength: Vec<f64>,
    pub values: Vec<f64>,
}

impl FullerProfile {
    /// Smallest discrete derivative of p_c with respect to arclength.
    pub fn min_slope(&self) -> f64 {
        self.arclength
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(a, _)| a[1] > a[0])
            .map(|(a, v)| (v[1] - v[0]) / (a[1] - a[0]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Fuller average p_c(α(τ)) = (1/T) ∫_τ^{τ+T} p₁(α(σ)) dσ along a center
/// curve, at every input point whose window fits inside the curve.
///
/// The curve is oriented so that the height increases towards its end.
pub fn fuller_pc(space: &SolSpace, curve: &[CoverPoint], window: f64) -> Result<FullerProfile> {
    if !(window > 0.0) {
        return Err(Error::InvalidParameter(format!("window T must be positive, got {window}")));
    }
    let mut pts: Vec<LeafCoordinates> = curve.iter().map(|&p| space.to_leaf(p)).collect();
    let reversed = pts.len() >= 2 && pts[pts.len() - 1].t < pts[0].t;
    if reversed {
        pts.reverse();
    }
    let profile = LeafProfile::new(space, &pts)?;
    if profile.length() <= window {
        return Err(Error::CurveTooShort {
            length: profile.length(),
            needed: window,
        });
    }
    let mut arclength = Vec::new();
    let mut values = Vec::new();
    for &tau in &profile.tau {
        match profile.pc_at(tau, window) {
            Some(v) => {
                arclength.push(tau);
                values.push(v);
            }
            None => break,
        }
    }
    Ok(FullerProfile {
        window,
        arclength,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightReport {
    pub k: u32,
    pub samples: usize,
    /// Least n₀ with p₁(fⁿx) > p₁(x) + 1 for all samples and n₀ < n ≤ n_max.
    pub n0: Option<usize>,
    /// min over samples of p₁(fⁿx) − p₁(x), for n = 1..=n_max.
    pub min_gain: Vec<f64>,
}

pub fn height_progress(f: &PerturbedMap, samples: &[CoverPoint], n_max: usize) -> Result<HeightReport> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be positive".into()));
    }
    let mut min_gain = vec![f64::INFINITY; n_max];
    for &p in samples {
        let mut c = f.space().to_leaf(p);
        for g in min_gain.iter_mut() {
            c = f.apply_leaf(c);
            *g = g.min(c.t - p.t);
        }
    }
    let n0 = match min_gain.iter().rposition(|&g| g <= 1.0) {
        None => Some(0),
        Some(i) if i + 1 < n_max => Some(i + 1),
        Some(_) => None,
    };
    Ok(HeightReport {
        k: f.k(),
        samples: samples.len(),
        n0,
        min_gain,
    })
}

/// Averaging window T = 2·k·max(n₀, 1).
pub fn default_window(k: u32, n0: usize) -> f64 {
    2.0 * k as f64 * n0.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Unimodular;
    use crate::numdyn::Perturbation;
    use crate::pi1::GroupElement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cat() -> SolSpace {
        SolSpace::new(Unimodular::from_i64([[2, 1], [1, 1]]).unwrap()).unwrap()
    }

    fn flow_line(v: [f64; 2], t0: f64, t1: f64, n: usize) -> Vec<CoverPoint> {
        (0..=n).map(|i| CoverPoint::new(v, t0 + (t1 - t0) * i as f64 / n as f64)).collect()
    }

    #[test]
    fn flow_line_closed_form() {
        let space = cat();
        let curve = flow_line([0.3, 0.1], -2.0, 5.0, 700);
        let prof = fuller_pc(&space, &curve, 2.0).unwrap();
        assert!(!prof.values.is_empty());
        for (tau, v) in prof.arclength.iter().zip(&prof.values) {
            let t = -2.0 + tau;
            assert!((v - (t + 1.0)).abs() < 1e-8);
        }
        assert!(prof.min_slope() > 0.5 - 1e-6);
    }

    #[test]
    fn constant_shift_and_orientation() {
        let space = cat();
        let curve = flow_line([0.0, 0.0], 0.0, 4.0, 400);
        let shifted: Vec<CoverPoint> = curve.iter().map(|p| CoverPoint::new(p.v, p.t + 1.5)).collect();
        let a = fuller_pc(&space, &curve, 1.0).unwrap();
        let b = fuller_pc(&space, &shifted, 1.0).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((y - x - 1.5).abs() < 1e-12);
        }
        let mut rev = curve.clone();
        rev.reverse();
        assert_eq!(fuller_pc(&space, &rev, 1.0).unwrap(), a);
    }

    #[test]
    fn short_curve() {
        let space = cat();
        let curve = flow_line([0.0, 0.0], 0.0, 1.0, 10);
        assert!(matches!(fuller_pc(&space, &curve, 2.0), Err(Error::CurveTooShort { .. })));
        assert!(fuller_pc(&space, &curve, 0.0).is_err());
    }

    #[test]
    fn deck_relation_on_wavy_curve() {
        let space = cat();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let curve: Vec<CoverPoint> = (0..=600)
            .map(|i| {
                let t = -1.0 + i as f64 * 0.01;
                CoverPoint::new([0.2 + 0.01 * (3.0 * t).sin(), 0.4 + 0.02 * (2.0 * t).cos()], t)
            })
            .collect();
        let base = fuller_pc(&space, &curve, 2.0).unwrap();
        for _ in 0..10 {
            let g = GroupElement::new([rng.gen_range(-3..4), rng.gen_range(-3..4)], rng.gen_range(-2..3));
            let moved: Vec<CoverPoint> = curve.iter().map(|&p| space.deck_apply(&g, p)).collect();
            let img = fuller_pc(&space, &moved, 2.0).unwrap();
            for (x, y) in base.values.iter().zip(&img.values) {
                assert!((y - x - g.n as f64).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn height_progress_unperturbed() {
        let space = cat();
        let samples: Vec<CoverPoint> = (0..20).map(|i| CoverPoint::new([0.05 * i as f64, 0.3], 0.04 * i as f64)).collect();
        let f1 = PerturbedMap::homotopic_to_identity(space.clone(), 1, Perturbation::zero()).unwrap();
        let r1 = height_progress(&f1, &samples, 6).unwrap();
        assert_eq!(r1.n0, Some(1));
        let f2 = PerturbedMap::homotopic_to_identity(space.clone(), 2, Perturbation::zero()).unwrap();
        assert_eq!(height_progress(&f2, &samples, 6).unwrap().n0, Some(0));
        let fp = PerturbedMap::homotopic_to_identity(space, 1, Perturbation::random(0.05, 1)).unwrap();
        let rp = height_progress(&fp, &samples, 6).unwrap();
        assert!(rp.n0.unwrap() <= 3);
        assert_eq!(default_window(1, 1), 2.0);
        assert_eq!(default_window(2, 0), 4.0);
    }
}
