//! Month-on-month growth split into investment return and investor flow.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::panel::{FundRecord, Month};

/// Growth of one fund from the month before `month` to `month`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthDecomposition {
    pub fund_id: String,
    /// Month at the end of the transition.
    pub month: Month,
    /// Size at the start of the transition.
    pub size: f64,
    pub delta_s: f64,
    pub delta_r: f64,
    pub delta_f: f64,
}

impl GrowthDecomposition {
    /// `ln(1 + delta_s)`, the change in log-size; `None` when the fund was emptied.
    pub fn log_growth(&self) -> Option<f64> {
        (self.delta_s > -1.0).then(|| self.delta_s.ln_1p())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDiagnostics {
    pub funds: usize,
    pub transitions: usize,
    /// Pairs of observations more than one month apart.
    pub skipped_gaps: usize,
    /// Transitions out of a zero-size month.
    pub skipped_zero_size: usize,
}

/// Groups records by fund, ordered by fund id then month.
pub fn by_fund(records: &[FundRecord]) -> BTreeMap<&str, Vec<&FundRecord>> {
    let mut funds: BTreeMap<&str, Vec<&FundRecord>> = BTreeMap::new();
    for r in records {
        funds.entry(r.fund_id.as_str()).or_default().push(r);
    }
    for history in funds.values_mut() {
        history.sort_by_key(|r| r.month);
    }
    funds
}

/// Consecutive-month transitions for every fund.
pub fn decompose_growth(records: &[FundRecord]) -> (Vec<GrowthDecomposition>, DecompositionDiagnostics) {
    let funds = by_fund(records);
    let mut diag = DecompositionDiagnostics { funds: funds.len(), ..Default::default() };
    let mut out = Vec::new();
    for history in funds.values() {
        for pair in history.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.month.since(a.month) != 1 {
                diag.skipped_gaps += 1;
                continue;
            }
            if a.tasm <= 0.0 {
                diag.skipped_zero_size += 1;
                continue;
            }
            let delta_s = (b.tasm - a.tasm) / a.tasm;
            let delta_r = (b.nav - a.nav) / a.nav;
            out.push(GrowthDecomposition {
                fund_id: a.fund_id.clone(),
                month: b.month,
                size: a.tasm,
                delta_s,
                delta_r,
                delta_f: delta_s - delta_r,
            });
        }
    }
    diag.transitions = out.len();
    (out, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(id: &str, month: &str, tasm: f64, nav: f64) -> FundRecord {
        FundRecord { fund_id: id.into(), month: month.parse().unwrap(), tasm, nav }
    }

    #[test]
    fn pure_inflow_and_pure_return() {
        let (d, _) = decompose_growth(&[rec("A", "2000-01", 100.0, 10.0), rec("A", "2000-02", 110.0, 10.0)]);
        assert!((d[0].delta_s - 0.10).abs() < 1e-15);
        assert_eq!(d[0].delta_r, 0.0);
        assert!((d[0].delta_f - 0.10).abs() < 1e-15);
        assert_eq!(d[0].month.to_string(), "2000-02");
        assert_eq!(d[0].size, 100.0);

        let (d, _) = decompose_growth(&[rec("A", "2000-01", 100.0, 10.0), rec("A", "2000-02", 110.0, 11.0)]);
        assert!((d[0].delta_r - 0.10).abs() < 1e-15);
        assert!(d[0].delta_f.abs() < 1e-15);
    }

    #[test]
    fn direct_flow_formula_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut records = Vec::new();
        for f in 0..50 {
            let mut tasm: f64 = rng.random_range(0.1..1000.0);
            let mut nav: f64 = rng.random_range(1.0..50.0);
            for m in 0..24 {
                records.push(rec(&format!("F{f}"), &format!("{}-{:02}", 2000 + m / 12, m % 12 + 1), tasm, nav));
                tasm *= rng.random_range(0.5..1.8);
                nav *= rng.random_range(0.9..1.1);
            }
        }
        let (d, diag) = decompose_growth(&records);
        assert_eq!(diag.transitions, 50 * 23);
        let funds = by_fund(&records);
        for g in &d {
            let history = &funds[g.fund_id.as_str()];
            let i = history.iter().position(|r| r.month == g.month).unwrap();
            let (a, b) = (history[i - 1], history[i]);
            let direct = (b.tasm - (1.0 + g.delta_r) * a.tasm) / a.tasm;
            assert!((direct - g.delta_f).abs() < 1e-12);
            assert!((g.delta_s - g.delta_r - g.delta_f).abs() <= 1e-15 * g.delta_s.abs().max(1.0));
            assert!(g.delta_s >= -1.0);
        }
    }

    #[test]
    fn gaps_and_zero_sizes_are_skipped_and_counted() {
        let records = [
            rec("A", "2000-01", 100.0, 10.0),
            rec("A", "2000-02", 0.0, 10.0),
            rec("A", "2000-03", 50.0, 10.0),
            rec("A", "2000-05", 60.0, 10.0),
            rec("A", "2000-06", 66.0, 10.0),
        ];
        let (d, diag) = decompose_growth(&records);
        assert_eq!(diag.skipped_zero_size, 1);
        assert_eq!(diag.skipped_gaps, 1);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].delta_s, -1.0);
        assert!(d[0].log_growth().is_none());
        assert_eq!(d[1].month.to_string(), "2000-06");
    }
}
