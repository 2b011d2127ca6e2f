use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::UnimodularMatrix2;
use crate::presets;
use crate::sol::{CoverPoint, SolSpace};

use super::fuller::{default_window, height_progress, HeightReport};
use super::graph::{graph_transform, CenterFoliation, GridSpec, SectionKind};
use super::perturbed::{PerturbedMap, Perturbation};

/// Parameters shared by the numerical experiments. Unknown fields are
/// rejected and every omitted field takes its default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    #[serde(rename = "A")]
    pub a: UnimodularMatrix2,
    pub k: u32,
    pub eps: f64,
    pub seed: u64,
    pub grid: GridSpec,
    pub tol: f64,
    pub maxiter: usize,
    /// Fuller averaging window; derived from height progress when absent.
    #[serde(rename = "T")]
    pub window: Option<f64>,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            a: presets::cat(),
            k: 1,
            eps: 0.05,
            seed: 1,
            grid: GridSpec::default(),
            tol: 1e-8,
            maxiter: 200,
            window: None,
        }
    }
}

pub const HEIGHT_SAMPLES: usize = 64;
pub const HEIGHT_NMAX: usize = 8;

impl NumericConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be non-negative, got {}", self.eps)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.grid.nv < 2 || self.grid.nt < 1 {
            return Err(Error::InvalidParameter("grid needs nv ≥ 2 and nt ≥ 1".into()));
        }
        if let Some(t) = self.window {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("T must be positive, got {t}")));
            }
        }
        Ok(())
    }

    pub fn perturbation(&self) -> Perturbation {
        if self.eps == 0.0 {
            Perturbation::zero()
        } else {
            Perturbation::random(self.eps, self.seed)
        }
    }

    /// The time-k flow composed with the seeded perturbation.
    pub fn map(&self) -> Result<PerturbedMap> {
        self.validate()?;
        PerturbedMap::homotopic_to_identity(SolSpace::new(self.a.clone())?, self.k, self.perturbation())
    }

    pub fn foliation(&self, f: &PerturbedMap) -> Result<CenterFoliation> {
        let cs = graph_transform(f, SectionKind::Cs, self.grid, self.tol, self.maxiter)?;
        let cu = graph_transform(f, SectionKind::Cu, self.grid, self.tol, self.maxiter)?;
        CenterFoliation::new(cs, cu)
    }

    /// Seeded sample points of the fundamental domain.
    pub fn samples(&self, count: usize) -> Vec<CoverPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count)
            .map(|_| CoverPoint::new([rng.gen(), rng.gen()], rng.gen()))
            .collect()
    }

    pub fn height_report(&self, f: &PerturbedMap) -> Result<HeightReport> {
        height_progress(f, &self.samples(HEIGHT_SAMPLES), HEIGHT_NMAX)
    }

    /// T from the config, else 2·k·max(n₀, 1).
    pub fn window(&self, f: &PerturbedMap) -> Result<f64> {
        if let Some(t) = self.window {
            return Ok(t);
        }
        let rep = self.height_report(f)?;
        let n0 = rep.n0.ok_or_else(|| {
            Error::InvalidParameter(format!("height does not progress within {HEIGHT_NMAX} steps; set T explicitly"))
        })?;
        Ok(default_window(self.k, n0))
    }
}
