use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ecdf::quantile;
use crate::curve::{linspace, DensityCurve};
use crate::error::{invalid, Error, Result};

/// Kernel density estimate with the bandwidth used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub curve: DensityCurve,
    pub bandwidth: f64,
    /// `silverman`, `unit` (zero-spread fallback) or `user`.
    pub bandwidth_rule: String,
}

/// `0.9 min(sd, IQR / 1.34) n^(-1/5)`, falling back to the larger spread
/// measure when one is zero, and to 1 for a sample with no spread.
pub fn silverman_bandwidth(sample: &[f64]) -> (f64, &'static str) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let sd = if n > 1.0 {
        (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = (quantile(&s, 0.75) - quantile(&s, 0.25)) / 1.34;
    let spread = if sd > 0.0 && iqr > 0.0 { sd.min(iqr) } else { sd.max(iqr) };
    if spread > 0.0 {
        (0.9 * spread * n.powf(-0.2), "silverman")
    } else {
        (1.0, "unit")
    }
}

/// Gaussian-kernel density on `grid`, or on 512 points spanning the sample
/// padded by four bandwidths.
pub fn kde_gaussian(sample: &[f64], bandwidth: Option<f64>, grid: Option<&[f64]>) -> Result<Kde> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(invalid("sample must be finite"));
    }
    let (h, rule) = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => (h, "user"),
        Some(h) => return Err(invalid(format!("bandwidth must be positive, got {h}"))),
        None => silverman_bandwidth(sample),
    };
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let omegas = match grid {
        Some(g) => g.to_vec(),
        None => linspace(sorted[0] - 4.0 * h, sorted[sorted.len() - 1] + 4.0 * h, 512),
    };
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * PI).sqrt());
    // Kernels beyond 10 bandwidths contribute below exp(-50).
    let reach = 10.0 * h;
    let values = omegas
        .par_iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&v| v < x - reach);
            let hi = sorted.partition_point(|&v| v <= x + reach);
            norm * sorted[lo..hi].iter().map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>()
        })
        .collect();
    Ok(Kde { curve: DensityCurve { omegas, values, t: None }, bandwidth: h, bandwidth_rule: rule.into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn single_point_bump() {
        let k = kde_gaussian(&[2.0], None, None).unwrap();
        assert_eq!(k.bandwidth, 1.0);
        let peak = k.curve.values.iter().cloned().fold(0.0, f64::max);
        let i = k.curve.values.iter().position(|&v| v == peak).unwrap();
        assert!((k.curve.omegas[i] - 2.0).abs() < 0.02);
        assert!((peak - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-3);
        assert!((k.curve.trapezoid() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mass_under_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let coarse = kde_gaussian(&xs, None, Some(&linspace(-8.0, 8.0, 200))).unwrap();
        let fine = kde_gaussian(&xs, None, Some(&linspace(-8.0, 8.0, 4000))).unwrap();
        assert!((coarse.curve.trapezoid() - 1.0).abs() < 1e-3);
        assert!((fine.curve.trapezoid() - 1.0).abs() < 1e-3);
        assert_eq!(coarse.bandwidth_rule, "silverman");
    }

    #[test]
    fn large_normal_sample_tracks_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = kde_gaussian(&xs, None, Some(&linspace(-4.0, 4.0, 161))).unwrap();
        let h = k.bandwidth;
        // Smoothing bias is at most h^2 max|phi''| / 2 = h^2 / (2 sqrt(2 pi)); add a sampling allowance.
        let bound = h * h / (2.0 * (2.0 * PI).sqrt()) + 0.01;
        for (x, v) in k.curve.omegas.iter().zip(&k.curve.values) {
            let truth = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            assert!((v - truth).abs() < bound, "x = {x}");
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(kde_gaussian(&[], None, None), Err(Error::EmptySample)));
        assert!(kde_gaussian(&[1.0], Some(0.0), None).is_err());
    }
}
