//! The full estimation pipeline from a fund-month panel to model parameters.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::binning::{binned_growth_stats, BinOptions, BinnedStats};
use super::decompose::{by_fund, decompose_growth, DecompositionDiagnostics, GrowthDecomposition};
use super::flow::{flow_autocorrelation, flow_performance_regression, FlowAutocorrelation, FlowRegression};
use super::panel::{FundRecord, Month};
use super::powerfit::{fit_power_plus_constant, CurvePoint};
use super::rates::{estimate_entry_rate, estimate_exit_rate, industry_counts, EntryEstimate, ExitEstimate, PeriodCounts, RatePeriod};
use super::regression::{estimates_from, Estimate, FitResult};
use crate::error::{Error, Result};
use crate::params::{EntryVariance, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub bins: BinOptions,
    pub rate_period: RatePeriod,
    pub entry_variance: EntryVariance,
    /// Month of the cross-sectional flow regression; the last panel month by default.
    pub flow_as_of: Option<Month>,
    pub flow_lags: usize,
    /// Minimum consecutive-month pairs for a fund's flow autocorrelation.
    pub autocorrelation_min_pairs: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            bins: BinOptions::default(),
            rate_period: RatePeriod::Monthly,
            entry_variance: EntryVariance::Literal,
            flow_as_of: None,
            flow_lags: 6,
            autocorrelation_min_pairs: 12,
        }
    }
}

/// Log-sizes of funds at their first observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySizeEstimate {
    pub omega0: Estimate,
    pub std_dev: f64,
    /// Spread parameter giving `std_dev` under the chosen convention.
    pub sigma_omega: f64,
    pub convention: EntryVariance,
    pub n: usize,
}

/// Event counts below which a rate regression is reported as under-powered.
const MIN_EVENTS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub records: usize,
    pub funds: usize,
    pub first_month: Month,
    pub last_month: Month,
    pub decomposition: DecompositionDiagnostics,
    pub rate_period: RatePeriod,
    pub entry: Option<EntryEstimate>,
    pub entry_underpowered: bool,
    pub exit: Option<ExitEstimate>,
    pub exit_underpowered: bool,
    pub entry_size: Option<EntrySizeEstimate>,
    /// `mu0 * s^-alpha + mu_inf` fitted to binned mean log growth.
    pub drift_fit: Option<FitResult>,
    /// `sigma0 * s^-beta + sigma_inf` fitted to binned standard deviations of log growth.
    pub volatility_fit: Option<FitResult>,
    pub flow: Option<FlowRegression>,
    /// Monthly parameters, present when every component could be estimated.
    pub calibrated: Option<ModelParams>,
    pub diagnostics: Vec<String>,
}

/// Everything the pipeline produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub report: CalibrationReport,
    pub decompositions: Vec<GrowthDecomposition>,
    pub counts: Vec<PeriodCounts>,
    pub binned: Option<BinnedStats>,
    pub autocorrelation: Vec<FlowAutocorrelation>,
}

/// Runs every estimator; components that cannot be estimated are recorded in
/// the diagnostics instead of failing the whole calibration.
pub fn calibrate(records: &[FundRecord], opts: &CalibrationOptions) -> Result<Calibration> {
    let months: BTreeSet<Month> = records.iter().map(|r| r.month).collect();
    let (Some(&first_month), Some(&last_month)) = (months.first(), months.last()) else {
        return Err(Error::EmptySample);
    };
    let mut diagnostics = Vec::new();
    let (decompositions, decomposition) = decompose_growth(records);
    if decomposition.skipped_gaps > 0 {
        diagnostics.push(format!("{} non-consecutive month pairs skipped", decomposition.skipped_gaps));
    }
    if decomposition.skipped_zero_size > 0 {
        diagnostics.push(format!("{} transitions from zero size skipped", decomposition.skipped_zero_size));
    }

    let counts = industry_counts(records, opts.rate_period)?;
    let total_entries: f64 = counts.iter().map(|c| c.entered).sum();
    let total_exits: f64 = counts.iter().map(|c| c.exited).sum();
    let entry = note(estimate_entry_rate(&counts, opts.rate_period), "entry regression", &mut diagnostics);
    let exit = note(estimate_exit_rate(&counts, opts.rate_period), "exit regression", &mut diagnostics);
    let entry_underpowered = total_entries < MIN_EVENTS || entry.is_none();
    let exit_underpowered = total_exits < MIN_EVENTS || exit.is_none();
    if entry_underpowered {
        diagnostics.push(format!("entry regression under-powered: {total_entries} entries observed"));
    }
    if exit_underpowered {
        diagnostics.push(format!("exit regression under-powered: {total_exits} exits observed"));
    }
    if let Some(e) = &entry {
        if !e.constant_rate_accepted {
            diagnostics.push("entry counts depend on the fund count at 2 standard errors; constant entry rate rejected".into());
        }
    }

    let entry_size = entry_sizes(records, first_month, opts.entry_variance);
    if entry_size.is_none() {
        diagnostics.push("fewer than two entering funds with positive size; entry size not estimated".into());
    }

    let binned = note(binned_growth_stats(&decompositions, &opts.bins), "growth binning", &mut diagnostics);
    if let Some(b) = &binned {
        if b.excluded_total_loss > 0 {
            diagnostics.push(format!("{} transitions to zero size excluded from binning", b.excluded_total_loss));
        }
    }
    let (drift_fit, volatility_fit) = match &binned {
        Some(b) => {
            let drift: Vec<CurvePoint> = b
                .bins
                .iter()
                .map(|bin| CurvePoint { size: bin.size, value: bin.log_growth.mean, std_error: bin.log_growth.mean_se })
                .collect();
            let vol: Vec<CurvePoint> = b
                .bins
                .iter()
                .map(|bin| CurvePoint { size: bin.size, value: bin.log_growth.sd, std_error: bin.log_growth.sd_se })
                .collect();
            (
                note(fit_power_plus_constant(&drift), "drift fit", &mut diagnostics).map(|f| rename(f, ["mu0", "alpha", "mu_inf"])),
                note(fit_power_plus_constant(&vol), "volatility fit", &mut diagnostics)
                    .map(|f| rename(f, ["sigma0", "beta", "sigma_inf"])),
            )
        }
        None => (None, None),
    };
    for (name, fit) in [("drift", &drift_fit), ("volatility", &volatility_fit)] {
        if let Some(f) = fit {
            if !f.converged {
                diagnostics.push(format!("{name} fit did not converge"));
            }
        }
    }

    let as_of = opts.flow_as_of.unwrap_or(last_month);
    let flow = note(flow_performance_regression(&decompositions, opts.flow_lags, as_of), "flow regression", &mut diagnostics);
    let autocorrelation = flow_autocorrelation(&decompositions, opts.autocorrelation_min_pairs);

    let calibrated = match (&entry, &exit, &entry_size, &drift_fit, &volatility_fit) {
        (Some(en), Some(ex), Some(es), Some(mu), Some(sigma)) if mu.converged && sigma.converged => Some(ModelParams {
            nu: en.rate.value / opts.rate_period.months(),
            lambda: ex.lambda_monthly.value,
            mu0: mu.value("mu0"),
            alpha: mu.value("alpha"),
            mu_inf: mu.value("mu_inf"),
            sigma0: sigma.value("sigma0"),
            beta: sigma.value("beta"),
            sigma_inf: sigma.value("sigma_inf"),
            omega0: es.omega0.value,
            sigma_omega: es.sigma_omega,
            t0: 0.0,
        }),
        _ => None,
    };
    if let Some(p) = &calibrated {
        for d in p.validate() {
            diagnostics.push(format!("calibrated parameters: {d}"));
        }
    }

    let report = CalibrationReport {
        records: records.len(),
        funds: by_fund(records).len(),
        first_month,
        last_month,
        decomposition,
        rate_period: opts.rate_period,
        entry,
        entry_underpowered,
        exit,
        exit_underpowered,
        entry_size,
        drift_fit,
        volatility_fit,
        flow,
        calibrated,
        diagnostics,
    };
    Ok(Calibration { report, decompositions, counts, binned, autocorrelation })
}

fn note<T>(r: Result<T>, what: &str, diagnostics: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            diagnostics.push(format!("{what} unavailable: {e}"));
            None
        }
    }
}

fn rename(mut f: FitResult, names: [&str; 3]) -> FitResult {
    for (e, n) in f.estimates.iter_mut().zip(names) {
        e.name = n.to_owned();
    }
    f
}

/// Funds whose first observation is after the first panel month.
fn entry_sizes(records: &[FundRecord], first_month: Month, convention: EntryVariance) -> Option<EntrySizeEstimate> {
    let omegas: Vec<f64> = by_fund(records)
        .values()
        .map(|h| h[0])
        .filter(|r| r.month > first_month && r.tasm > 0.0)
        .map(|r| r.tasm.ln())
        .collect();
    let n = omegas.len();
    if n < 2 {
        return None;
    }
    let mean = omegas.iter().sum::<f64>() / n as f64;
    let sd = (omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    Some(EntrySizeEstimate {
        omega0: estimates_from(&["omega0"], &[mean], &[sd / (n as f64).sqrt()], n - 1).remove(0),
        std_dev: sd,
        sigma_omega: convention.spread_for_std_dev(sd),
        convention,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, month: Month, tasm: f64) -> FundRecord {
        FundRecord { fund_id: id.into(), month, tasm, nav: 1.0 }
    }

    #[test]
    fn single_fund_is_underpowered() {
        let start = Month::new(2000, 1).unwrap();
        let records: Vec<FundRecord> = (0..48).map(|m| rec("A", start.offset(m), 100.0 * 1.01f64.powi(m))).collect();
        let c = calibrate(&records, &CalibrationOptions::default()).unwrap();
        assert!(c.report.entry_underpowered);
        assert!(c.report.exit_underpowered);
        assert!(c.report.calibrated.is_none());
        assert!(c.report.diagnostics.iter().any(|d| d.contains("under-powered")));
        assert_eq!(c.decompositions.len(), 47);
    }

    #[test]
    fn zero_size_month_counted() {
        let start = Month::new(2000, 1).unwrap();
        let mut records: Vec<FundRecord> = (0..6).map(|m| rec("A", start.offset(m), 10.0)).collect();
        records[2].tasm = 0.0;
        let c = calibrate(&records, &CalibrationOptions::default()).unwrap();
        assert_eq!(c.report.decomposition.skipped_zero_size, 1);
        assert!(c.report.diagnostics.iter().any(|d| d.contains("zero size")));
    }

    #[test]
    fn empty_panel_rejected() {
        assert!(matches!(calibrate(&[], &CalibrationOptions::default()), Err(Error::EmptySample)));
    }
}
