//! Industry-level entry and exit counts and the two rate estimators.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::decompose::by_fund;
use super::panel::{FundRecord, Month};
use super::regression::{estimates_from, least_squares, linear_regression, Estimate, FitResult};
use crate::error::{invalid, Error, Result};

/// Aggregation period for the rate regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatePeriod {
    #[default]
    Monthly,
    Yearly,
}

impl RatePeriod {
    pub fn months(self) -> f64 {
        match self {
            RatePeriod::Monthly => 1.0,
            RatePeriod::Yearly => 12.0,
        }
    }
}

impl fmt::Display for RatePeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatePeriod::Monthly => "monthly",
            RatePeriod::Yearly => "yearly",
        })
    }
}

impl FromStr for RatePeriod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monthly" => Ok(RatePeriod::Monthly),
            "yearly" => Ok(RatePeriod::Yearly),
            _ => Err(invalid(format!("unknown rate period `{s}` (expected monthly or yearly)"))),
        }
    }
}

/// Counts for one period: funds alive at the end of the previous period, and
/// funds that entered or exited during this one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodCounts {
    /// First month of the period.
    pub start: Month,
    pub n_prev: f64,
    pub entered: f64,
    pub exited: f64,
}

/// Entry and exit counts per period.
///
/// A fund is alive from its first to its last observed month. It enters in its
/// first month and exits in the month after its last one; funds already
/// present in the first panel month are not counted as entries, and funds still
/// present in the last month never exit. Only periods whose months all lie
/// after the first panel month are returned.
pub fn industry_counts(records: &[FundRecord], period: RatePeriod) -> Result<Vec<PeriodCounts>> {
    let funds = by_fund(records);
    let months: BTreeSet<Month> = records.iter().map(|r| r.month).collect();
    let (Some(&first), Some(&last)) = (months.first(), months.last()) else {
        return Err(Error::EmptySample);
    };
    let span = last.since(first) as usize + 1;
    let mut alive = vec![0.0; span];
    let mut entered = vec![0.0; span];
    let mut exited = vec![0.0; span];
    for history in funds.values() {
        let a = history[0].month.since(first) as usize;
        let b = history[history.len() - 1].month.since(first) as usize;
        for n in &mut alive[a..=b] {
            *n += 1.0;
        }
        if a > 0 {
            entered[a] += 1.0;
        }
        if b + 1 < span {
            exited[b + 1] += 1.0;
        }
    }
    let mut out = Vec::new();
    match period {
        RatePeriod::Monthly => {
            for i in 1..span {
                out.push(PeriodCounts { start: first.offset(i as i32), n_prev: alive[i - 1], entered: entered[i], exited: exited[i] });
            }
        }
        RatePeriod::Yearly => {
            // Calendar years entirely inside months 1..span.
            let mut year_start = first.offset(1);
            while year_start.month_of_year() != 1 {
                year_start = year_start.offset(1);
            }
            loop {
                let i = year_start.since(first) as usize;
                if i + 12 > span {
                    break;
                }
                out.push(PeriodCounts {
                    start: year_start,
                    n_prev: alive[i - 1],
                    entered: entered[i..i + 12].iter().sum(),
                    exited: exited[i..i + 12].iter().sum(),
                });
                year_start = year_start.offset(12);
            }
        }
    }
    Ok(out)
}

/// Entry regression and the constant-rate estimate derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryEstimate {
    /// `entered ~ intercept + slope * n_prev`.
    pub fit: FitResult,
    /// Slope within two standard errors of zero.
    pub constant_rate_accepted: bool,
    /// Mean entries per period with its Poisson standard error and interval.
    pub rate: Estimate,
    pub period: RatePeriod,
}

/// Regresses entries on the previous count; the entry rate is the mean count.
pub fn estimate_entry_rate(counts: &[PeriodCounts], period: RatePeriod) -> Result<EntryEstimate> {
    if counts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} periods; at least 3 needed", counts.len())));
    }
    let x: Vec<f64> = counts.iter().map(|c| c.n_prev).collect();
    let y: Vec<f64> = counts.iter().map(|c| c.entered).collect();
    let fit = linear_regression(&x, &y, None)?;
    let slope = fit.get("slope").expect("slope");
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let x_mean = x.iter().sum::<f64>() / n;
    // An exactly flat series has a zero slope up to rounding and a zero standard error.
    let negligible = slope.value.abs() * x_mean.abs() <= 1e-12 * mean.abs().max(1.0);
    let constant_rate_accepted = slope.value.abs() <= 2.0 * slope.std_error || negligible;
    let rate = estimates_from(&["nu"], &[mean], &[(mean / n).sqrt()], y.len() - 1).remove(0);
    Ok(EntryEstimate { fit, constant_rate_accepted, rate, period })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitEstimate {
    /// Zero-intercept regression of exits on the previous count, weighted `1 / n_prev`.
    pub fit: FitResult,
    /// Exit hazard per month, with interval.
    pub lambda_monthly: Estimate,
    /// Exit hazard per year, with interval.
    pub lambda_annual: Estimate,
    pub period: RatePeriod,
}

/// Zero-intercept Poisson-weighted regression of exits on the previous count.
///
/// For monthly periods the slope is a per-month exit probability `q` and the
/// hazard is `-ln(1 - q)`, matching the simulator's `1 - exp(-lambda)`; for
/// yearly periods the slope is taken as the annual rate directly.
pub fn estimate_exit_rate(counts: &[PeriodCounts], period: RatePeriod) -> Result<ExitEstimate> {
    if counts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} periods; at least 3 needed", counts.len())));
    }
    let used: Vec<&PeriodCounts> = counts.iter().filter(|c| c.n_prev > 0.0).collect();
    if used.len() < 2 {
        return Err(Error::InsufficientData("fewer than two periods with live funds".into()));
    }
    let x: Vec<f64> = used.iter().map(|c| c.n_prev).collect();
    let y: Vec<f64> = used.iter().map(|c| c.exited).collect();
    let w: Vec<f64> = x.iter().map(|x| 1.0 / x).collect();
    let fit = least_squares(&[("slope", &x)], &y, Some(&w), false)?;
    let q = fit.get("slope").expect("slope").clone();
    let to_hazard = |q: f64| -(-q.clamp(0.0, 1.0 - 1e-15)).ln_1p();
    let (monthly, annual) = match period {
        RatePeriod::Monthly => {
            let value = to_hazard(q.value);
            let se = q.std_error / (1.0 - q.value.min(1.0 - 1e-15));
            let m = Estimate {
                name: "lambda_monthly".into(),
                value,
                std_error: se,
                ci_low: to_hazard(q.ci_low),
                ci_high: to_hazard(q.ci_high),
            };
            let a = scaled(&m, "lambda_annual", 12.0);
            (m, a)
        }
        RatePeriod::Yearly => {
            let a = Estimate { name: "lambda_annual".into(), ..q.clone() };
            (scaled(&a, "lambda_monthly", 1.0 / 12.0), a)
        }
    };
    Ok(ExitEstimate { fit, lambda_monthly: monthly, lambda_annual: annual, period })
}

fn scaled(e: &Estimate, name: &str, c: f64) -> Estimate {
    Estimate {
        name: name.into(),
        value: e.value * c,
        std_error: e.std_error * c,
        ci_low: e.ci_low * c,
        ci_high: e.ci_high * c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Binomial, Distribution, Poisson};

    fn rec(id: &str, month: Month) -> FundRecord {
        FundRecord { fund_id: id.into(), month, tasm: 1.0, nav: 1.0 }
    }

    /// Equity-fund industry 1991-2005: year, funds alive, entries, exits.
    const INDUSTRY: [(i32, f64, f64, f64); 15] = [
        (1991, 372.0, 185.0, 0.0),
        (1992, 1069.0, 338.0, 41.0),
        (1993, 1509.0, 581.0, 45.0),
        (1994, 2194.0, 783.0, 61.0),
        (1995, 2699.0, 759.0, 139.0),
        (1996, 3300.0, 885.0, 115.0),
        (1997, 4253.0, 1216.0, 169.0),
        (1998, 4885.0, 1342.0, 269.0),
        (1999, 5363.0, 1182.0, 308.0),
        (2000, 5914.0, 1363.0, 482.0),
        (2001, 6607.0, 1088.0, 427.0),
        (2002, 7102.0, 1063.0, 660.0),
        (2003, 7794.0, 1056.0, 703.0),
        (2004, 8457.0, 796.0, 675.0),
        (2005, 8845.0, 732.0, 626.0),
    ];

    fn industry_table() -> Vec<PeriodCounts> {
        INDUSTRY
            .windows(2)
            .map(|w| PeriodCounts { start: Month::new(w[1].0, 1).unwrap(), n_prev: w[0].1, entered: w[1].2, exited: w[1].3 })
            .collect()
    }

    #[test]
    fn industry_entry_regression() {
        let e = estimate_entry_rate(&industry_table(), RatePeriod::Yearly).unwrap();
        let slope = e.fit.get("slope").unwrap();
        let intercept = e.fit.get("intercept").unwrap();
        // Published: slope 0.04 +- 0.05, intercept 750 +- 300.
        assert!((slope.value - 0.04).abs() < 0.05, "{slope:?}");
        assert!((intercept.value - 750.0).abs() < 300.0, "{intercept:?}");
        assert!(e.constant_rate_accepted);
    }

    #[test]
    fn industry_exit_regression() {
        let c = industry_table();
        let x = estimate_exit_rate(&c, RatePeriod::Yearly).unwrap();
        // Weighted zero-intercept fit reduces to total exits over total exposure.
        let ratio = c.iter().map(|c| c.exited).sum::<f64>() / c.iter().map(|c| c.n_prev).sum::<f64>();
        assert!((x.lambda_annual.value - ratio).abs() < 1e-14);
        // Published: 0.092 +- 0.030.
        assert!((x.lambda_annual.value - 0.092).abs() < 0.030);
        assert!((x.lambda_monthly.value * 12.0 - x.lambda_annual.value).abs() < 1e-15);
    }

    #[test]
    fn counting_conventions() {
        let m = |i| Month::new(2000, 1).unwrap().offset(i);
        let mut records = Vec::new();
        for i in 0..6 {
            records.push(rec("old", m(i)));
        }
        for i in 2..4 {
            records.push(rec("short", m(i)));
        }
        records.push(rec("late", m(5)));
        let c = industry_counts(&records, RatePeriod::Monthly).unwrap();
        assert_eq!(c.len(), 5);
        let entered: Vec<f64> = c.iter().map(|c| c.entered).collect();
        let exited: Vec<f64> = c.iter().map(|c| c.exited).collect();
        let n_prev: Vec<f64> = c.iter().map(|c| c.n_prev).collect();
        assert_eq!(entered, vec![0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(exited, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(n_prev, vec![1.0, 1.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn yearly_periods_are_whole_years() {
        let start = Month::new(1991, 1).unwrap();
        let records: Vec<FundRecord> = (0..36).map(|i| rec("a", start.offset(i))).collect();
        let c = industry_counts(&records, RatePeriod::Yearly).unwrap();
        let starts: Vec<String> = c.iter().map(|c| c.start.to_string()).collect();
        assert_eq!(starts, vec!["1992-01", "1993-01"]);
        assert_eq!(c[0].n_prev, 1.0);
    }

    /// The industry fund counts with replacement entry and exit columns.
    fn table(entries: &[f64], exits: &[f64]) -> Vec<PeriodCounts> {
        industry_table()
            .into_iter()
            .zip(entries.iter().zip(exits))
            .map(|(c, (&entered, &exited))| PeriodCounts { entered, exited, ..c })
            .collect()
    }

    #[test]
    fn constant_entries_give_flat_line() {
        let c = table(&[700.0; 14], &[0.0; 14]);
        let e = estimate_entry_rate(&c, RatePeriod::Yearly).unwrap();
        assert!(e.fit.value("slope").abs() < 1e-10);
        assert!((e.fit.value("intercept") - 700.0).abs() < 1e-7);
        assert!(e.constant_rate_accepted);
        assert_eq!(e.rate.value, 700.0);
    }

    #[test]
    fn no_exits_give_zero_rate() {
        let c = table(&[700.0; 14], &[0.0; 14]);
        let x = estimate_exit_rate(&c, RatePeriod::Yearly).unwrap();
        assert_eq!(x.lambda_annual.value, 0.0);
        let x = estimate_exit_rate(&c, RatePeriod::Monthly).unwrap();
        assert_eq!(x.lambda_monthly.value, 0.0);
    }

    #[test]
    fn poisson_entries_recover_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let poisson = Poisson::new(891.0).unwrap();
        let mut hits = 0;
        for _ in 0..200 {
            let entries: Vec<f64> = (0..14).map(|_| poisson.sample(&mut rng)).collect();
            let e = estimate_entry_rate(&table(&entries, &[0.0; 14]), RatePeriod::Yearly).unwrap();
            hits += e.rate.contains(891.0) as usize;
        }
        assert!(hits >= 180, "{hits}/200");
    }

    #[test]
    fn binomial_exits_recover_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut hits = 0;
        for _ in 0..200 {
            let exits: Vec<f64> = INDUSTRY[..14]
                .iter()
                .map(|r| Binomial::new(r.1 as u64, 0.09).unwrap().sample(&mut rng) as f64)
                .collect();
            let x = estimate_exit_rate(&table(&[0.0; 14], &exits), RatePeriod::Yearly).unwrap();
            hits += x.lambda_annual.contains(0.09) as usize;
        }
        assert!(hits >= 180, "{hits}/200");
    }

    #[test]
    fn too_few_periods() {
        let c = table(&[1.0; 14], &[1.0; 14]);
        assert!(matches!(estimate_entry_rate(&c[..2], RatePeriod::Yearly), Err(Error::InsufficientData(_))));
        assert!(matches!(estimate_exit_rate(&c[..2], RatePeriod::Yearly), Err(Error::InsufficientData(_))));
    }
}
