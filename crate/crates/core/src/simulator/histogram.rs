use serde::{Deserialize, Serialize};

use super::EnsembleResult;
use crate::curve::{linspace, DensityCurve};
use crate::error::{invalid, Error, Result};

/// Bin layout over log-size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Binning {
    /// `bins` equal-width bins spanning the sample range.
    Auto { bins: usize },
    /// `bins` equal-width bins over `[lo, hi]`; values outside are not counted.
    Uniform { lo: f64, hi: f64, bins: usize },
    /// Explicit increasing edges.
    Edges(Vec<f64>),
}

/// Pooled counts per bin, normalized per run.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub runs: u32,
    /// Sample values that fell outside the edges.
    pub outside: u64,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    /// Mean number of funds per run inside the edges.
    pub fn mass(&self) -> f64 {
        self.counts.iter().sum::<u64>() as f64 / self.runs as f64
    }

    /// Funds per unit log-size per run at the bin centers.
    pub fn density(&self, t: Option<f64>) -> DensityCurve {
        let values = self
            .counts
            .iter()
            .zip(self.widths())
            .map(|(&c, w)| c as f64 / (self.runs as f64 * w))
            .collect();
        DensityCurve { omegas: self.centers(), values, t }
    }
}

/// Histogram of an arbitrary pooled sample from `runs` runs.
pub fn histogram(sample: &[f64], runs: u32, binning: &Binning) -> Result<Histogram> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if runs == 0 {
        return Err(invalid("runs must be positive"));
    }
    let edges = match binning {
        Binning::Auto { bins } => {
            let lo = sample.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = sample.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
            uniform_edges(lo, hi, *bins)?
        }
        Binning::Uniform { lo, hi, bins } => uniform_edges(*lo, *hi, *bins)?,
        Binning::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| !(w[1] > w[0])) || e.iter().any(|x| !x.is_finite()) {
                return Err(invalid("bin edges must be finite and strictly increasing"));
            }
            e.clone()
        }
    };
    let n = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[n]);
    let mut counts = vec![0u64; n];
    let mut outside = 0;
    for &x in sample {
        if !(x >= lo && x <= hi) {
            outside += 1;
            continue;
        }
        // Right-open bins except the last, which includes its upper edge.
        let i = edges.partition_point(|&e| e <= x).saturating_sub(1).min(n - 1);
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts, runs, outside })
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("need at least one bin over a finite, non-empty range"));
    }
    Ok(linspace(lo, hi, bins + 1))
}

/// Histogram of the pooled horizon snapshot; total mass is the mean count per run.
pub fn snapshot_histogram(result: &EnsembleResult, binning: &Binning) -> Result<Histogram> {
    histogram(&result.snapshot, result.runs, binning)
}
