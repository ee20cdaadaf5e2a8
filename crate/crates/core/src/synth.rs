//! Synthetic fund-month panels drawn from the model.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibrate::panel::{FundRecord, Month};
use crate::error::{invalid, Error, Result};
use crate::params::ModelParams;
use crate::rng;
use crate::simulator::{step_month, PopulationState, SimulationOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub months: u32,
    /// Calendar month of the first month-end observation.
    pub start: Month,
    /// Mean and standard deviation of the monthly NAV return.
    pub mu_r: f64,
    pub sigma_r: f64,
    pub initial_nav: f64,
    pub simulation: SimulationOptions,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            months: 180,
            start: Month::new(1991, 1).expect("valid month"),
            mu_r: 0.008,
            sigma_r: 0.03,
            initial_nav: 10.0,
            simulation: SimulationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPanel {
    /// Month-end observations ordered by month.
    pub records: Vec<FundRecord>,
    /// Log-sizes of the funds alive in the last month.
    pub final_log_sizes: Vec<f64>,
    pub final_month: Month,
}

/// Stream index for NAV returns, apart from the per-run simulation streams.
const RETURN_STREAM: u64 = 1 << 63;

/// Simulates the industry from empty with the synchronous engine and records
/// every live fund at each month end. Sizes are `exp(omega)`; NAV follows
/// independent normal monthly returns, so the flow is what is left of the
/// size change after the return.
pub fn synthesize_panel(p: &ModelParams, opts: &SynthOptions, seed: u64) -> Result<SynthPanel> {
    let d = p.validate_for_simulation();
    if !d.is_empty() {
        return Err(Error::InvalidParams(d));
    }
    if !(opts.sigma_r >= 0.0 && opts.mu_r.is_finite() && opts.sigma_r.is_finite() && opts.initial_nav > 0.0) {
        return Err(invalid("return mean must be finite, its deviation non-negative and the initial NAV positive"));
    }
    let returns = Normal::new(opts.mu_r, opts.sigma_r).map_err(|e| invalid(e.to_string()))?;
    let mut sim_rng = rng::stream(seed, 0);
    let mut ret_rng = rng::stream(seed, RETURN_STREAM);
    let mut state = PopulationState::empty();
    let mut navs: HashMap<u64, f64> = HashMap::new();
    let mut records = Vec::new();
    for m in 0..opts.months {
        step_month(&mut state, p, &opts.simulation, &mut sim_rng);
        let month = opts.start.offset(m as i32);
        let mut next = HashMap::with_capacity(state.len());
        for (&id, &omega) in state.ids.iter().zip(&state.log_sizes) {
            let nav = match navs.get(&id) {
                Some(&prev) => prev * (1.0 + draw_return(&returns, &mut ret_rng)),
                None => opts.initial_nav,
            };
            next.insert(id, nav);
            records.push(FundRecord { fund_id: format!("F{id:07}"), month, tasm: omega.exp(), nav });
        }
        navs = next;
    }
    Ok(SynthPanel {
        records,
        final_log_sizes: state.log_sizes,
        final_month: opts.start.offset(opts.months as i32 - 1),
    })
}

/// A return above -100% so the NAV stays positive.
fn draw_return<R: Rng>(returns: &Normal<f64>, rng: &mut R) -> f64 {
    loop {
        let r = returns.sample(rng);
        if r > -1.0 {
            return r;
        }
    }
}
