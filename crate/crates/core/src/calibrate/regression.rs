//! Weighted least squares with standard errors, intervals and adjusted R^2.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};

/// One fitted coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    /// 95% confidence interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    /// |value| / std_error.
    pub fn t_stat(&self) -> f64 {
        (self.value / self.std_error).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimates: Vec<Estimate>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n_points: usize,
    /// Residual degrees of freedom.
    pub dof: usize,
    /// Weighted residual variance, the scale applied to the covariance.
    pub residual_variance: f64,
    pub converged: bool,
    pub flags: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// Panics if `name` is not a fitted coefficient.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name).unwrap_or_else(|| panic!("no coefficient named `{name}`")).value
    }
}

/// Two-sided 95% Student-t critical value; NaN without residual degrees of freedom.
pub fn t_critical_95(dof: usize) -> f64 {
    if dof == 0 {
        return f64::NAN;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::NAN)
}

pub(crate) fn estimates_from(names: &[&str], values: &[f64], std_errors: &[f64], dof: usize) -> Vec<Estimate> {
    let t = t_critical_95(dof);
    names
        .iter()
        .zip(values)
        .zip(std_errors)
        .map(|((name, &value), &se)| Estimate {
            name: (*name).to_owned(),
            value,
            std_error: se,
            ci_low: value - t * se,
            ci_high: value + t * se,
        })
        .collect()
}

/// General weighted least squares on named regressor columns.
///
/// With `intercept` an `intercept` coefficient comes first. Weights are inverse
/// variances up to a common factor; the covariance is `s^2 (X'WX)^-1` with `s^2`
/// the weighted residual variance. R^2 is centered with an intercept and
/// uncentered without.
pub fn least_squares(columns: &[(&str, &[f64])], y: &[f64], weights: Option<&[f64]>, intercept: bool) -> Result<FitResult> {
    let n = y.len();
    let p = columns.len() + intercept as usize;
    if p == 0 {
        return Err(invalid("no regressors"));
    }
    if columns.iter().any(|(_, c)| c.len() != n) || weights.is_some_and(|w| w.len() != n) {
        return Err(invalid("regressor, response and weight lengths differ"));
    }
    if n < p {
        return Err(Error::InsufficientData(format!("{n} observations for {p} coefficients")));
    }
    if let Some(w) = weights {
        if w.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(invalid("weights must be finite and non-negative"));
        }
    }
    if y.iter().chain(columns.iter().flat_map(|(_, c)| c.iter())).any(|v| !v.is_finite()) {
        return Err(invalid("regression data must be finite"));
    }

    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let x = DMatrix::from_fn(n, p, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            columns[j - intercept as usize].1[i]
        }
    });
    let sw = DVector::from_fn(n, |i, _| w(i).sqrt());
    let xw = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sw[i]);
    let yw = DVector::from_fn(n, |i, _| y[i] * sw[i]);

    let qr = xw.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|j| xw.column(j).norm()).fold(0.0, f64::max);
    let rank_ok = (0..p).all(|j| r[(j, j)].abs() > 1e-10 * scale.max(f64::MIN_POSITIVE));
    if !rank_ok {
        return Err(Error::Degenerate("regressors are collinear or constant".into()));
    }
    let qty = qr.q().transpose() * &yw;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Degenerate("singular triangular factor".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Degenerate("singular triangular factor".into()))?;
    let xtwx_inv = &r_inv * r_inv.transpose();

    let fitted = &x * &beta;
    let resid: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let rss: f64 = (0..n).map(|i| w(i) * resid[i] * resid[i]).sum();
    let dof = n - p;
    let residual_variance = if dof > 0 { rss / dof as f64 } else { f64::NAN };

    let tss = if intercept {
        let wsum: f64 = (0..n).map(w).sum();
        let ybar = (0..n).map(|i| w(i) * y[i]).sum::<f64>() / wsum;
        (0..n).map(|i| w(i) * (y[i] - ybar).powi(2)).sum::<f64>()
    } else {
        (0..n).map(|i| w(i) * y[i] * y[i]).sum::<f64>()
    };
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else if rss == 0.0 { 1.0 } else { 0.0 };
    let base = if intercept { n as f64 - 1.0 } else { n as f64 };
    let adj_r_squared = if dof > 0 { 1.0 - (1.0 - r_squared) * base / dof as f64 } else { f64::NAN };

    let std_errors: Vec<f64> = (0..p).map(|j| (residual_variance * xtwx_inv[(j, j)]).sqrt()).collect();
    let mut names: Vec<&str> = Vec::with_capacity(p);
    if intercept {
        names.push("intercept");
    }
    names.extend(columns.iter().map(|(name, _)| *name));
    let mut flags = Vec::new();
    if dof == 0 {
        flags.push("no residual degrees of freedom; standard errors undefined".into());
    }
    Ok(FitResult {
        estimates: estimates_from(&names, beta.as_slice(), &std_errors, dof),
        r_squared,
        adj_r_squared,
        n_points: n,
        dof,
        residual_variance,
        converged: true,
        flags,
    })
}

/// Straight-line fit `y = intercept + slope * x`.
pub fn linear_regression(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<FitResult> {
    let mut distinct = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Degenerate("need at least two distinct x values".into()));
    }
    least_squares(&[("slope", x)], y, weights, true)
}
