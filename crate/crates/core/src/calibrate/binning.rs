//! Size-binned means and standard deviations of growth.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::decompose::GrowthDecomposition;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    /// Every bin holds (nearly) the same number of observations.
    #[default]
    EqualOccupancy,
    /// Bin edges equally spaced in log-size.
    Exponential,
}

impl fmt::Display for BinScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinScheme::EqualOccupancy => "equal_occupancy",
            BinScheme::Exponential => "exponential",
        })
    }
}

impl FromStr for BinScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal_occupancy" => Ok(BinScheme::EqualOccupancy),
            "exponential" => Ok(BinScheme::Exponential),
            _ => Err(invalid(format!("unknown binning `{s}` (expected equal_occupancy or exponential)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinOptions {
    pub bins: usize,
    pub scheme: BinScheme,
    /// Bins with fewer observations are merged into a neighbour.
    pub min_count: usize,
}

impl Default for BinOptions {
    fn default() -> Self {
        Self { bins: 100, scheme: BinScheme::EqualOccupancy, min_count: 30 }
    }
}

/// Mean and standard deviation of one quantity in a bin, with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub mean_se: f64,
    pub sd_se: f64,
}

impl Moments {
    fn of(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count() as f64;
        let mean = xs.clone().sum::<f64>() / n;
        let var = if n > 1.0 { xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let sd = var.sqrt();
        Self {
            mean,
            sd,
            mean_se: sd / n.sqrt(),
            sd_se: if n > 1.0 { sd / (2.0 * (n - 1.0)).sqrt() } else { f64::NAN },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthBin {
    pub size_lo: f64,
    pub size_hi: f64,
    /// Geometric mean of the starting sizes in the bin.
    pub size: f64,
    pub n: usize,
    /// Change in log-size, `ln(1 + delta_s)`.
    pub log_growth: Moments,
    pub delta_r: Moments,
    pub delta_f: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedStats {
    pub bins: Vec<GrowthBin>,
    /// Transitions dropped because the fund was emptied (log-size undefined).
    pub excluded_total_loss: usize,
    /// Bins merged away for falling under the minimum occupancy.
    pub merged_bins: usize,
}

/// Bins transitions by starting size and summarizes growth in each bin.
///
/// Equal-occupancy bins are cut from a total order on (size, fund id, month),
/// so the result does not depend on the input row order.
pub fn binned_growth_stats(d: &[GrowthDecomposition], opts: &BinOptions) -> Result<BinnedStats> {
    if opts.bins == 0 {
        return Err(invalid("need at least one bin"));
    }
    let mut rows: Vec<(&GrowthDecomposition, f64)> = Vec::with_capacity(d.len());
    let mut excluded_total_loss = 0;
    for g in d {
        match g.log_growth() {
            Some(lg) => rows.push((g, lg)),
            None => excluded_total_loss += 1,
        }
    }
    let min_count = opts.min_count.max(1);
    if rows.len() < min_count {
        return Err(Error::InsufficientData(format!(
            "{} usable transitions; a bin needs at least {min_count}",
            rows.len()
        )));
    }
    rows.sort_by(|a, b| {
        a.0.size
            .total_cmp(&b.0.size)
            .then_with(|| a.0.fund_id.cmp(&b.0.fund_id))
            .then_with(|| a.0.month.cmp(&b.0.month))
    });

    let n = rows.len();
    let mut cuts: Vec<usize> = match opts.scheme {
        BinScheme::EqualOccupancy => (0..=opts.bins).map(|k| k * n / opts.bins).collect(),
        BinScheme::Exponential => {
            let lo = rows[0].0.size.ln();
            let hi = rows[n - 1].0.size.ln();
            let width = (hi - lo) / opts.bins as f64;
            let mut cuts = vec![0];
            for k in 1..opts.bins {
                let edge = lo + width * k as f64;
                cuts.push(rows.partition_point(|r| r.0.size.ln() < edge));
            }
            cuts.push(n);
            cuts
        }
    };
    cuts.dedup();

    // Merge under-filled bins left to right; a short final bin joins its predecessor.
    let mut merged = vec![0];
    for &c in &cuts[1..] {
        if c - merged[merged.len() - 1] >= min_count {
            merged.push(c);
        }
    }
    if *merged.last().unwrap() != n {
        if merged.len() > 1 {
            merged.pop();
        }
        merged.push(n);
    }
    let merged_bins = cuts.len() - merged.len();

    let bins = merged
        .windows(2)
        .map(|w| {
            let chunk = &rows[w[0]..w[1]];
            let n = chunk.len();
            let mean_log_size = chunk.iter().map(|r| r.0.size.ln()).sum::<f64>() / n as f64;
            GrowthBin {
                size_lo: chunk[0].0.size,
                size_hi: chunk[n - 1].0.size,
                size: mean_log_size.exp(),
                n,
                log_growth: Moments::of(chunk.iter().map(|r| r.1)),
                delta_r: Moments::of(chunk.iter().map(|r| r.0.delta_r)),
                delta_f: Moments::of(chunk.iter().map(|r| r.0.delta_f)),
            }
        })
        .collect();
    Ok(BinnedStats { bins, excluded_total_loss, merged_bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::panel::Month;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(i: usize, size: f64, delta_s: f64, delta_r: f64) -> GrowthDecomposition {
        GrowthDecomposition {
            fund_id: format!("F{}", i % 97),
            month: Month::from_index(24_000 + (i / 97) as i32),
            size,
            delta_s,
            delta_r,
            delta_f: delta_s - delta_r,
        }
    }

    #[test]
    fn identical_growth_gives_zero_spread() {
        let d: Vec<_> = (0..3000).map(|i| row(i, 1.0 + i as f64, 0.02, 0.01)).collect();
        let b = binned_growth_stats(&d, &BinOptions::default()).unwrap();
        assert_eq!(b.bins.len(), 100);
        for bin in &b.bins {
            assert!((bin.log_growth.mean - 0.02f64.ln_1p()).abs() < 1e-15);
            assert!(bin.log_growth.sd < 1e-15);
            assert!((bin.delta_r.mean - 0.01).abs() < 1e-15);
            assert!((bin.delta_f.mean - 0.01).abs() < 1e-15);
            assert_eq!(bin.n, 30);
        }
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut d: Vec<_> = (0..5000)
            .map(|i| row(i, (rng.random_range(0..40) as f64).exp2(), rng.random_range(-0.5..0.5), rng.random_range(-0.1..0.1)))
            .collect();
        let a = binned_growth_stats(&d, &BinOptions::default()).unwrap();
        d.shuffle(&mut rng);
        let b = binned_growth_stats(&d, &BinOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_bins_are_merged() {
        let d: Vec<_> = (0..100).map(|i| row(i, 1.0 + i as f64, 0.0, 0.0)).collect();
        let b = binned_growth_stats(&d, &BinOptions { bins: 10, ..Default::default() }).unwrap();
        assert!(b.bins.iter().all(|bin| bin.n >= 30));
        assert_eq!(b.bins.iter().map(|bin| bin.n).sum::<usize>(), 100);
        assert_eq!(b.bins.len(), 3);

        let mut d: Vec<_> = (0..200).map(|i| row(i, 10.0, 0.0, 0.0)).collect();
        d.push(row(999, 1e6, 0.0, 0.0));
        let b = binned_growth_stats(&d, &BinOptions { bins: 5, scheme: BinScheme::Exponential, min_count: 30 }).unwrap();
        assert_eq!(b.bins.len(), 1);
        assert_eq!(b.bins[0].n, 201);
    }

    #[test]
    fn emptied_funds_excluded() {
        let mut d: Vec<_> = (0..40).map(|i| row(i, 5.0, 0.1, 0.0)).collect();
        d.push(row(41, 5.0, -1.0, 0.0));
        let b = binned_growth_stats(&d, &BinOptions { bins: 1, ..Default::default() }).unwrap();
        assert_eq!(b.excluded_total_loss, 1);
        assert_eq!(b.bins[0].n, 40);
    }

    #[test]
    fn exponential_edges_follow_log_size() {
        let d: Vec<_> = (0..4000).map(|i| row(i, 10f64.powf(i as f64 / 1000.0), 0.0, 0.0)).collect();
        let b = binned_growth_stats(&d, &BinOptions { bins: 4, scheme: BinScheme::Exponential, min_count: 30 }).unwrap();
        assert_eq!(b.bins.len(), 4);
        for (k, bin) in b.bins.iter().enumerate() {
            assert!(bin.size_lo >= 10f64.powi(k as i32) * (1.0 - 1e-12));
            assert!(bin.size_hi < 10f64.powi(k as i32 + 1) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn moment_standard_errors() {
        let m = Moments::of([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((m.sd - sd).abs() < 1e-15);
        assert!((m.mean_se - sd / 2.0).abs() < 1e-15);
        assert!((m.sd_se - sd / 6f64.sqrt()).abs() < 1e-15);
    }
}
