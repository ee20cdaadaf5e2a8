use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check, grow, PopulationState, RunOutcome, SimulationOptions};
use crate::error::{invalid, Error, Result};
use crate::params::{entry_size_draw, ModelParams};

/// How much simulated time one non-entry step of the event loop represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsyncClock {
    /// One month per step: each fund then gets one growth update per month on average.
    #[default]
    PerMacroStep,
    /// `1 / (1 + lambda)` months per step.
    PerOneOverOnePlusLambda,
}

impl AsyncClock {
    pub fn as_str(self) -> &'static str {
        match self {
            AsyncClock::PerMacroStep => "per_macro_step",
            AsyncClock::PerOneOverOnePlusLambda => "per_1_over_1_plus_lambda",
        }
    }

    fn step(self, lambda: f64) -> f64 {
        match self {
            AsyncClock::PerMacroStep => 1.0,
            AsyncClock::PerOneOverOnePlusLambda => 1.0 / (1.0 + lambda),
        }
    }
}

impl fmt::Display for AsyncClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AsyncClock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_macro_step" => Ok(AsyncClock::PerMacroStep),
            "per_1_over_1_plus_lambda" => Ok(AsyncClock::PerOneOverOnePlusLambda),
            _ => Err(invalid(format!(
                "unknown async clock `{s}` (expected per_macro_step or per_1_over_1_plus_lambda)"
            ))),
        }
    }
}

/// Event-driven realization from an empty industry.
///
/// Each step either admits one fund, with probability `nu / (1 + lambda + nu)`,
/// or performs `(1 + lambda) N` sub-events (stochastically rounded). A sub-event
/// picks a live fund uniformly; it exits with probability `lambda / (1 + lambda)`
/// and otherwise takes one monthly growth step. Only non-entry steps advance
/// the clock.
///
/// Because entry steps do not consume time, entrants arrive at
/// `nu / (1 + lambda)` per month; see [`long_run_count_at_month_end`].
pub fn run_async<R: Rng + ?Sized>(p: &ModelParams, horizon: u32, opts: &SimulationOptions, rng: &mut R) -> Result<RunOutcome> {
    run_async_from(PopulationState::empty(), p, horizon, opts, rng)
}

/// [`run_async`] starting from a given population at time zero.
pub fn run_async_from<R: Rng + ?Sized>(
    mut state: PopulationState,
    p: &ModelParams,
    horizon: u32,
    opts: &SimulationOptions,
    rng: &mut R,
) -> Result<RunOutcome> {
    check(p)?;
    state.t = 0.0;
    let p_entry = p.nu / (1.0 + p.lambda + p.nu);
    let p_exit = p.lambda / (1.0 + p.lambda);
    let dt = opts.async_clock.step(p.lambda);
    let end = horizon as f64;

    let mut counts = Vec::with_capacity(horizon as usize + 1);
    counts.push(state.len() as u64);
    let mut steps: u64 = 0;
    let mut terminated_early = false;
    // Tolerance for the accumulated clock against whole months.
    let slack = 1e-9;

    while state.t < end - slack {
        if p.nu == 0.0 && state.is_empty() {
            terminated_early = true;
            break;
        }
        if p_entry > 0.0 && rng.random::<f64>() < p_entry {
            state.admit(entry_size_draw(rng, p, opts.entry_variance));
            continue;
        }
        let expected = (1.0 + p.lambda) * state.len() as f64;
        let mut events = expected.floor() as u64;
        if rng.random::<f64>() < expected - expected.floor() {
            events += 1;
        }
        for _ in 0..events {
            if state.is_empty() {
                break;
            }
            let i = rng.random_range(0..state.len());
            if p_exit > 0.0 && rng.random::<f64>() < p_exit {
                state.remove(i);
            } else {
                state.log_sizes[i] = grow(state.log_sizes[i], 1.0, p, rng);
            }
        }
        steps += 1;
        state.t = steps as f64 * dt;
        while counts.len() <= horizon as usize && state.t >= counts.len() as f64 - slack {
            counts.push(state.len() as u64);
        }
    }
    if terminated_early {
        counts.resize(horizon as usize + 1, 0);
    }
    Ok(RunOutcome { state, counts, terminated_early })
}

/// Long-run mean of the month-end count under [`AsyncClock::PerMacroStep`]:
/// `nu (1 - lambda) / (lambda (1 + lambda))`, about `2 lambda` below `nu / lambda`.
///
/// Entries accumulate between non-entry steps (`nu / (1 + lambda)` on average),
/// a non-entry step removes a fraction `lambda` of the funds, and the count is
/// read right after that removal.
pub fn long_run_count_at_month_end(nu: f64, lambda: f64) -> f64 {
    nu * (1.0 - lambda) / (lambda * (1.0 + lambda))
}
