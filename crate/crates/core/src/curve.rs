use serde::{Deserialize, Serialize};

/// Number density of funds over a grid of log-sizes at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    /// Evaluation time in months; `None` for the steady state.
    pub t: Option<f64>,
}

impl DensityCurve {
    pub fn tabulate<F>(omegas: &[f64], t: Option<f64>, mut f: F) -> crate::Result<Self>
    where
        F: FnMut(f64) -> crate::Result<f64>,
    {
        let values = omegas.iter().map(|&w| f(w)).collect::<crate::Result<Vec<_>>>()?;
        Ok(Self {
            omegas: omegas.to_vec(),
            values,
            t,
        })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Trapezoidal integral over the grid.
    pub fn trapezoid(&self) -> f64 {
        self.omegas
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// `n` log-spaced points covering `[lo, hi]`, both positive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}
