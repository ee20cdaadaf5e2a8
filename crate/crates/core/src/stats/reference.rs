use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::integrate_pieces;
use crate::special::erfc;

/// Closed-form size distributions used as inequality references.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReferenceDistribution {
    /// `F(s) = 1 - (s / s0)^(-alpha)` on `[s0, inf)`.
    Pareto { s0: f64, alpha: f64 },
    /// `ln s` normal with mean `a` and standard deviation `b`.
    Lognormal { a: f64, b: f64 },
}

/// A standard deviation that may not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdDev {
    Finite(f64),
    Infinite,
}

impl StdDev {
    pub fn value(self) -> f64 {
        match self {
            StdDev::Finite(v) => v,
            StdDev::Infinite => f64::INFINITY,
        }
    }
}

/// Survival probability below which the Gini integral is truncated.
const TAIL: f64 = 1e-12;

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

impl ReferenceDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Pareto { s0, alpha } if s0 > 0.0 && alpha > 0.0 && s0.is_finite() && alpha.is_finite() => Ok(()),
            Self::Lognormal { a, b } if a.is_finite() && b > 0.0 && b.is_finite() => Ok(()),
            _ => Err(invalid(format!("invalid reference distribution {self:?}"))),
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        1.0 - self.survival(s)
    }

    /// `1 - F(s)`, accurate in the upper tail.
    pub fn survival(&self, s: f64) -> f64 {
        match *self {
            Self::Pareto { s0, alpha } => {
                if s <= s0 {
                    1.0
                } else {
                    (s / s0).powf(-alpha)
                }
            }
            Self::Lognormal { a, b } => {
                if s <= 0.0 {
                    1.0
                } else {
                    std_normal_sf((s.ln() - a) / b)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Pareto { s0, alpha } if alpha > 1.0 => alpha * s0 / (alpha - 1.0),
            Self::Pareto { .. } => f64::INFINITY,
            Self::Lognormal { a, b } => (a + 0.5 * b * b).exp(),
        }
    }

    pub fn std_dev(&self) -> StdDev {
        match *self {
            Self::Pareto { s0, alpha } if alpha > 2.0 => {
                StdDev::Finite(s0 * (alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0))).sqrt())
            }
            Self::Pareto { .. } => StdDev::Infinite,
            Self::Lognormal { a, b } => StdDev::Finite(((b * b).exp_m1() * (2.0 * a + b * b).exp()).sqrt()),
        }
    }

    /// Gini coefficient `(1 / E[s]) * integral of F (1 - F) ds` over the support.
    ///
    /// The integral runs in log-size up to the point where the survival drops
    /// to 1e-12 (found by bisection); the remainder of the dominant term,
    /// `integral of (1 - F)`, is added in closed form.
    pub fn gini(&self) -> Result<f64> {
        self.validate()?;
        if let Self::Pareto { alpha, .. } = *self {
            if alpha <= 1.0 {
                return Err(invalid(format!("Pareto exponent {alpha} <= 1 has no finite mean")));
            }
        }
        let mean = self.mean();
        let (lo, hi) = self.log_support();
        let integrand = |u: f64| {
            let s = u.exp();
            let sf = self.survival(s);
            (1.0 - sf) * sf * s
        };
        let n = 16;
        let breaks: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let coarse = integrate_pieces(integrand, &breaks, 1e-6 * mean);
        let body = integrate_pieces(integrand, &breaks, 1e-10 * coarse.max(f64::MIN_POSITIVE));
        let g = (body + self.tail_excess(hi.exp())) / mean;
        Ok(g.clamp(0.0, 1.0))
    }

    /// Log-size interval carrying the integrand: from the support start (or
    /// where `F` falls below 1e-12) to where `1 - F` falls below 1e-12.
    fn log_support(&self) -> (f64, f64) {
        match *self {
            Self::Pareto { s0, .. } => (s0.ln(), bisect(|u| self.survival(u.exp()) - TAIL, s0.ln(), s0.ln() + 1.0)),
            Self::Lognormal { a, b } => {
                let hi = bisect(|u| self.survival(u.exp()) - TAIL, a, a + b);
                (2.0 * a - hi, hi)
            }
        }
    }

    /// `integral from x to inf of (1 - F(s)) ds`.
    fn tail_excess(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { s0, alpha } => x * (x / s0).powf(-alpha) / (alpha - 1.0),
            Self::Lognormal { a, b } => {
                let z = (x.ln() - a) / b;
                (self.mean() * std_normal_sf(z - b) - x * std_normal_sf(z)).max(0.0)
            }
        }
    }
}

/// Root of a decreasing `f` above `lo`, growing `hi` geometrically until bracketed.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut step = hi - lo;
    while f(hi) > 0.0 {
        lo = hi;
        step *= 2.0;
        hi += step;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Lognormal scale `b` whose standard deviation is `std_dev` at location `a`.
///
/// With `q = exp(b^2)` the variance condition is `q^2 - q = std_dev^2 exp(-2a)`.
pub fn matched_lognormal_scale(std_dev: f64, a: f64) -> Result<f64> {
    if !(std_dev > 0.0 && std_dev.is_finite()) {
        return Err(invalid(format!("standard deviation must be positive and finite, got {std_dev}")));
    }
    let c = (std_dev * std_dev) * (-2.0 * a).exp();
    // (1 + sqrt(1 + 4c)) / 2 - 1 without cancellation for small c.
    let q_minus_1 = 2.0 * c / (1.0 + (1.0 + 4.0 * c).sqrt());
    Ok(q_minus_1.ln_1p().sqrt())
}

/// Family swept by [`gini_curve`]; the swept parameter is the exponent or the scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReferenceFamily {
    Pareto { s0: f64 },
    Lognormal { a: f64 },
}

impl ReferenceFamily {
    pub fn at(self, param: f64) -> ReferenceDistribution {
        match self {
            Self::Pareto { s0 } => ReferenceDistribution::Pareto { s0, alpha: param },
            Self::Lognormal { a } => ReferenceDistribution::Lognormal { a, b: param },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniPoint {
    pub param: f64,
    pub std_dev: StdDev,
    pub gini: f64,
}

/// Gini coefficient and standard deviation along a parameter sweep, in input order.
pub fn gini_curve(family: ReferenceFamily, params: &[f64]) -> Result<Vec<GiniPoint>> {
    params
        .par_iter()
        .map(|&param| {
            let d = family.at(param);
            Ok(GiniPoint { param, std_dev: d.std_dev(), gini: d.gini()? })
        })
        .collect()
}
