//! Cross-sectional flow-performance regression and per-fund flow autocorrelation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::decompose::GrowthDecomposition;
use super::panel::Month;
use super::regression::{least_squares, FitResult};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRegression {
    pub as_of: Month,
    pub lags: usize,
    /// `delta_f(as_of) ~ intercept + sum_i beta_i * delta_r(as_of - i)`.
    pub fit: FitResult,
    /// Fewer than ten observations per coefficient.
    pub low_power: bool,
}

/// Regresses each fund's flow in `as_of` on its returns over the previous `lags` months.
///
/// Only funds with a flow observation in `as_of` and returns in every lagged
/// month are included.
pub fn flow_performance_regression(d: &[GrowthDecomposition], lags: usize, as_of: Month) -> Result<FlowRegression> {
    if lags == 0 {
        return Err(invalid("need at least one lag"));
    }
    let mut by_fund: BTreeMap<&str, HashMap<Month, &GrowthDecomposition>> = BTreeMap::new();
    for g in d {
        by_fund.entry(g.fund_id.as_str()).or_default().insert(g.month, g);
    }
    let mut y = Vec::new();
    let mut x: Vec<Vec<f64>> = vec![Vec::new(); lags];
    for months in by_fund.values() {
        let Some(now) = months.get(&as_of) else { continue };
        let lagged: Option<Vec<f64>> = (1..=lags).map(|i| months.get(&as_of.offset(-(i as i32))).map(|g| g.delta_r)).collect();
        if let Some(lagged) = lagged {
            y.push(now.delta_f);
            for (col, v) in x.iter_mut().zip(lagged) {
                col.push(v);
            }
        }
    }
    let p = lags + 1;
    if y.len() <= p {
        return Err(Error::InsufficientData(format!(
            "{} funds with a complete return history at {as_of}; need more than {p}",
            y.len()
        )));
    }
    let names: Vec<String> = (1..=lags).map(|i| format!("beta{i}")).collect();
    let columns: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(x.iter().map(Vec::as_slice)).collect();
    let mut fit = least_squares(&columns, &y, None, true)?;
    let low_power = y.len() < 10 * p;
    if low_power {
        fit.flags.push(format!("low power: {} observations for {p} coefficients", y.len()));
    }
    Ok(FlowRegression { as_of, lags, fit, low_power })
}

/// Lag-one autocorrelation of one fund's monthly flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowAutocorrelation {
    pub fund_id: String,
    /// Pairs of consecutive months used.
    pub pairs: usize,
    pub lag1: f64,
}

/// Per-fund lag-one autocorrelation of `delta_f` over consecutive months,
/// for funds with at least `min_pairs` such pairs.
pub fn flow_autocorrelation(d: &[GrowthDecomposition], min_pairs: usize) -> Vec<FlowAutocorrelation> {
    let mut by_fund: BTreeMap<&str, Vec<&GrowthDecomposition>> = BTreeMap::new();
    for g in d {
        by_fund.entry(g.fund_id.as_str()).or_default().push(g);
    }
    let mut out = Vec::new();
    for (id, mut rows) in by_fund {
        rows.sort_by_key(|g| g.month);
        let pairs: Vec<(f64, f64)> = rows
            .windows(2)
            .filter(|w| w[1].month.since(w[0].month) == 1)
            .map(|w| (w[0].delta_f, w[1].delta_f))
            .collect();
        if pairs.len() < min_pairs.max(2) {
            continue;
        }
        let n = pairs.len() as f64;
        let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for &(a, b) in &pairs {
            sab += (a - ma) * (b - mb);
            saa += (a - ma).powi(2);
            sbb += (b - mb).powi(2);
        }
        let lag1 = if saa > 0.0 && sbb > 0.0 { sab / (saa * sbb).sqrt() } else { f64::NAN };
        out.push(FlowAutocorrelation { fund_id: id.to_owned(), pairs: pairs.len(), lag1 });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// `funds` funds over `months` months with returns N(0.008, 0.03) and
    /// flows `planted * delta_r(t-1) + noise`.
    fn panel(funds: usize, months: i32, planted: f64, seed: u64) -> Vec<GrowthDecomposition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ret = Normal::new(0.008, 0.03).unwrap();
        let noise = Normal::new(0.0, 0.02).unwrap();
        let start = Month::new(2005, 1).unwrap();
        let mut out = Vec::new();
        for f in 0..funds {
            let mut prev_r = ret.sample(&mut rng);
            for m in 0..months {
                let delta_r = ret.sample(&mut rng);
                let delta_f = planted * prev_r + noise.sample(&mut rng);
                out.push(GrowthDecomposition {
                    fund_id: format!("F{f}"),
                    month: start.offset(m),
                    size: 100.0,
                    delta_s: delta_r + delta_f,
                    delta_r,
                    delta_f,
                });
                prev_r = delta_r;
            }
        }
        out
    }

    #[test]
    fn planted_coefficient_recovered() {
        let d = panel(400, 12, 0.5, 1);
        let r = flow_performance_regression(&d, 6, Month::new(2005, 12).unwrap()).unwrap();
        assert!(r.fit.get("beta1").unwrap().contains(0.5), "{:?}", r.fit.get("beta1"));
        assert!(!r.low_power);
        assert_eq!(r.fit.n_points, 400);
    }

    #[test]
    fn null_model_mostly_insignificant() {
        let mut significant = 0;
        let mut total = 0;
        for seed in 0..20 {
            let d = panel(300, 12, 0.0, 100 + seed);
            let r = flow_performance_regression(&d, 6, Month::new(2005, 12).unwrap()).unwrap();
            for i in 1..=6 {
                let b = r.fit.get(&format!("beta{i}")).unwrap();
                significant += (b.t_stat() > 2.0) as usize;
                total += 1;
            }
        }
        // About 5% expected at the 2-standard-error level.
        assert!(significant as f64 / (total as f64) < 0.12, "{significant}/{total}");
    }

    #[test]
    fn incomplete_histories_excluded_and_low_power_flagged() {
        let d = panel(30, 12, 0.0, 3);
        let as_of = Month::new(2005, 12).unwrap();
        let r = flow_performance_regression(&d, 6, as_of).unwrap();
        assert!(r.low_power);
        assert!(!r.fit.flags.is_empty());
        // Histories start in January: July is the first month with six prior returns.
        assert!(flow_performance_regression(&d, 6, Month::new(2005, 6).unwrap()).is_err());
        assert!(flow_performance_regression(&d, 6, Month::new(2005, 7).unwrap()).is_ok());
        assert!(flow_performance_regression(&panel(1, 12, 0.0, 4), 6, as_of).is_err());
    }

    #[test]
    fn autocorrelation_of_alternating_flows() {
        let start = Month::new(2000, 1).unwrap();
        let d: Vec<GrowthDecomposition> = (0..10)
            .map(|m| {
                let f = if m % 2 == 0 { 0.1 } else { -0.1 };
                GrowthDecomposition { fund_id: "A".into(), month: start.offset(m), size: 1.0, delta_s: f, delta_r: 0.0, delta_f: f }
            })
            .collect();
        let a = flow_autocorrelation(&d, 3);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].pairs, 9);
        assert!((a[0].lag1 + 1.0).abs() < 1e-12);
        assert!(flow_autocorrelation(&d, 20).is_empty());
    }
}
