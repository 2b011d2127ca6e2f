use serde::{Deserialize, Serialize};

/// Per-bundle N-step growth bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub s_lower: f64,
    pub s_upper: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub u_lower: f64,
}

impl Rates {
    pub fn powi(&self, k: i32) -> Rates {
        Rates {
            s_lower: self.s_lower.powi(k),
            s_upper: self.s_upper.powi(k),
            c_lower: self.c_lower.powi(k),
            c_upper: self.c_upper.powi(k),
            u_lower: self.u_lower.powi(k),
        }
    }

    /// s_upper < c_lower ≤ c_upper < u_lower and s_upper < 1 < u_lower.
    pub fn is_dominated(&self) -> bool {
        self.s_upper < self.c_lower
            && self.c_lower <= self.c_upper
            && self.c_upper < self.u_lower
            && self.s_upper < 1.0
            && 1.0 < self.u_lower
    }

    /// Constants γ₁ < 1 < γ₂ with s_upper < γ₁ < c_lower and c_upper < γ₂ < u_lower.
    pub fn absolute_constants(&self) -> Option<[f64; 2]> {
        let lo = self.c_lower.min(1.0);
        let hi = self.c_upper.max(1.0);
        if self.is_dominated() && self.s_upper < lo && hi < self.u_lower {
            Some([(self.s_upper * lo).sqrt(), (hi * self.u_lower).sqrt()])
        } else {
            None
        }
    }

    pub fn margins(&self) -> RateMargins {
        RateMargins {
            s_to_c: (self.c_lower / self.s_upper).ln(),
            c_to_u: (self.u_lower / self.c_upper).ln(),
            s_to_one: -self.s_upper.ln(),
            one_to_u: self.u_lower.ln(),
        }
    }
}

/// Logarithmic gaps of the dominated-splitting inequalities; all must be
/// strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMargins {
    pub s_to_c: f64,
    pub c_to_u: f64,
    pub s_to_one: f64,
    pub one_to_u: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Pointwise,
    Absolute,
    None,
}

/// Relative cone margins (a − image opening) / a, worst case over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeMargins {
    pub u: f64,
    pub s: f64,
    pub cu: f64,
    pub cs: f64,
}

/// Openings of the narrowed cone families used for the rate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeOpenings {
    pub u: f64,
    pub s: f64,
    pub cu: f64,
    pub cs: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub opening: f64,
    pub margins: ConeMargins,
    pub narrowed: ConeOpenings,
    pub points: usize,
    /// Grid points whose own rates fail the pointwise inequalities.
    pub pointwise_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PHCertificate {
    #[serde(rename = "N")]
    pub n: u32,
    pub rates: Rates,
    pub flavor: Flavor,
    pub gamma: Option<[f64; 2]>,
    pub margins: RateMargins,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cones: Option<ConeReport>,
}

impl PHCertificate {
    /// Certificate for a single set of global rates, pointwise checks
    /// having been done by the caller.
    pub fn from_rates(n: u32, rates: Rates, pointwise_ok: bool) -> Self {
        let gamma = if pointwise_ok { rates.absolute_constants() } else { None };
        let flavor = match (pointwise_ok, gamma) {
            (_, Some(_)) => Flavor::Absolute,
            (true, None) => Flavor::Pointwise,
            (false, None) => Flavor::None,
        };
        PHCertificate {
            n,
            rates,
            flavor,
            gamma,
            margins: rates.margins(),
            cones: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: f64, cl: f64, cu: f64, u: f64) -> Rates {
        Rates { s_lower: s, s_upper: s, c_lower: cl, c_upper: cu, u_lower: u }
    }

    #[test]
    fn flavors() {
        let c = PHCertificate::from_rates(1, r(0.3, 1.0, 1.0, 3.0), true);
        assert_eq!(c.flavor, Flavor::Absolute);
        let [g1, g2] = c.gamma.unwrap();
        assert!(0.3 < g1 && g1 < 1.0 && 1.0 < g2 && g2 < 3.0);
        // dominated at every point, not uniformly
        let c = PHCertificate::from_rates(1, r(0.9, 0.8, 1.2, 1.1), true);
        assert_eq!(c.flavor, Flavor::Pointwise);
        assert_eq!(PHCertificate::from_rates(1, r(1.0, 1.0, 1.0, 1.0), false).flavor, Flavor::None);
    }

    #[test]
    fn ties_fail() {
        assert!(!r(0.5, 0.5, 1.0, 2.0).is_dominated());
        assert!(!r(0.5, 1.0, 2.0, 2.0).is_dominated());
        assert!(r(0.5, 1.0, 1.0, 2.0).absolute_constants().is_some());
        assert!(r(0.5, 1.0, 1.0, 1.0).absolute_constants().is_none());
    }
}
