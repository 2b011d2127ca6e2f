use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sol::CoverPoint;

use super::perturbed::{reduce_leaf, twist, PerturbedMap};

const WINDOWS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Ascending.
    pub exponents: [f64; 3],
    /// Standard errors from windowed averages, in the same order.
    pub stderr: [f64; 3],
    pub steps: usize,
}

/// Lyapunov exponents by QR re-orthonormalization of derivative products
/// along the orbit of `p0`, reduced to the fundamental domain at each step.
pub fn lyapunov_exponents(f: &PerturbedMap, p0: CoverPoint, steps: usize) -> Result<LyapunovReport> {
    if steps < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 steps, got {steps}")));
    }
    let space = f.space();
    let frame = *space.frame();
    let mut x = space.to_leaf(p0);
    let mut q = Matrix3::<f64>::identity();
    let window = steps / WINDOWS;
    let mut sums = vec![Vector3::<f64>::zeros(); WINDOWS];
    let mut total = Vector3::<f64>::zeros();
    for step in 0..steps {
        let d = f.frame_derivative(x);
        let y = f.apply_leaf(x);
        let r = reduce_leaf(space, y);
        if !(r.v[0].is_finite() && r.v[1].is_finite() && r.t.is_finite()) {
            return Err(Error::DivergentOrbit { step, height: y.t });
        }
        let signs = Matrix3::from_diagonal(&Vector3::new(
            twist(frame.sign_u, r.n),
            twist(frame.sign_s, r.n),
            1.0,
        ));
        let qr = (signs * d * q).qr();
        let rr = qr.r();
        let logs = Vector3::from_fn(|i, _| rr[(i, i)].abs().ln());
        total += logs;
        if window > 0 {
            sums[(step / window).min(WINDOWS - 1)] += logs;
        }
        q = qr.q();
        x = space.to_leaf(CoverPoint::new(r.v, r.t));
    }
    let n = steps as f64;
    let means = total / n;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| means[i].total_cmp(&means[j]));
    let counts: Vec<f64> = (0..WINDOWS)
        .map(|w| if w + 1 == WINDOWS { (steps - window * (WINDOWS - 1)) as f64 } else { window as f64 })
        .collect();
    let stderr = order.map(|i| {
        let est: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s[i] / c).collect();
        let mean = est.iter().sum::<f64>() / WINDOWS as f64;
        let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (WINDOWS as f64 - 1.0);
        (var / WINDOWS as f64).sqrt()
    });
    Ok(LyapunovReport {
        exponents: order.map(|i| means[i]),
        stderr,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Unimodular;
    use crate::numdyn::Perturbation;
    use crate::sol::SolSpace;

    fn cat() -> SolSpace {
        SolSpace::new(Unimodular::from_i64([[2, 1], [1, 1]]).unwrap()).unwrap()
    }

    #[test]
    fn unperturbed_exponents() {
        let space = cat();
        let ll = space.frame().log_lambda();
        for k in [1u32, 2] {
            let f = PerturbedMap::homotopic_to_identity(space.clone(), k, Perturbation::zero()).unwrap();
            let rep = lyapunov_exponents(&f, CoverPoint::new([0.1, 0.2], 0.3), 1000).unwrap();
            let expect = [-(k as f64) * ll, 0.0, k as f64 * ll];
            for i in 0..3 {
                assert!((rep.exponents[i] - expect[i]).abs() < 1e-6, "{rep:?}");
            }
        }
    }

    #[test]
    fn too_few_steps() {
        let f = PerturbedMap::homotopic_to_identity(cat(), 1, Perturbation::zero()).unwrap();
        assert!(lyapunov_exponents(&f, CoverPoint::new([0.0; 2], 0.0), 99).is_err());
    }

    #[test]
    fn perturbed_exponents_stay_close() {
        let space = cat();
        let ll = space.frame().log_lambda();
        let f = PerturbedMap::homotopic_to_identity(space, 1, Perturbation::random(0.05, 1)).unwrap();
        let rep = lyapunov_exponents(&f, CoverPoint::new([0.1, 0.2], 0.3), 5000).unwrap();
        assert!(rep.exponents[1].abs() < 0.05, "{rep:?}");
        assert!((rep.exponents[0] + ll).abs() < 0.1 && (rep.exponents[2] - ll).abs() < 0.1, "{rep:?}");
    }
}
