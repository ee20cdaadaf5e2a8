use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{check, grow, PopulationState, RunOutcome, SimulationOptions};
use crate::error::{invalid, Error, Result};
use crate::params::{entry_size_draw, ModelParams};

/// When, inside a month, the synchronous engine lets new funds arrive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryTiming {
    /// Arrival time uniform in the month; the entrant then grows and may exit
    /// over the remainder. For constant coefficients this reproduces the
    /// continuous-time process exactly at month ends.
    #[default]
    WithinMonth,
    /// Entrants appear at the month end at their entry size.
    EndOfMonth,
}

impl EntryTiming {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryTiming::WithinMonth => "within_month",
            EntryTiming::EndOfMonth => "end_of_month",
        }
    }
}

impl fmt::Display for EntryTiming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntryTiming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "within_month" => Ok(EntryTiming::WithinMonth),
            "end_of_month" => Ok(EntryTiming::EndOfMonth),
            _ => Err(invalid(format!("unknown entry timing `{s}` (expected within_month or end_of_month)"))),
        }
    }
}

/// Advances the population by one month: growth of every live fund, exits
/// with probability `1 - exp(-lambda)`, then Poisson(`nu`) entrants.
pub fn step_month<R: Rng + ?Sized>(state: &mut PopulationState, p: &ModelParams, opts: &SimulationOptions, rng: &mut R) {
    for omega in state.log_sizes.iter_mut() {
        *omega = grow(*omega, 1.0, p, rng);
    }

    if p.lambda > 0.0 {
        let q = -(-p.lambda).exp_m1();
        let mut i = 0;
        while i < state.len() {
            if rng.random::<f64>() < q {
                state.remove(i);
            } else {
                i += 1;
            }
        }
    }

    if p.nu > 0.0 {
        let arrivals = Poisson::new(p.nu).expect("positive rate").sample(rng) as u64;
        for _ in 0..arrivals {
            let omega = entry_size_draw(rng, p, opts.entry_variance);
            match opts.entry_timing {
                EntryTiming::EndOfMonth => state.admit(omega),
                EntryTiming::WithinMonth => {
                    let remaining = 1.0 - rng.random::<f64>();
                    if p.lambda > 0.0 && rng.random::<f64>() >= (-p.lambda * remaining).exp() {
                        state.admit_and_remove();
                    } else {
                        state.admit(grow(omega, remaining, p, rng));
                    }
                }
            }
        }
    }
    state.t += 1.0;
}

/// `horizon` months of [`step_month`] from an empty industry.
pub fn run_sync<R: Rng + ?Sized>(p: &ModelParams, horizon: u32, opts: &SimulationOptions, rng: &mut R) -> Result<RunOutcome> {
    run_sync_from(PopulationState::empty(), p, horizon, opts, rng)
}

/// [`run_sync`] starting from a given population at time zero.
pub fn run_sync_from<R: Rng + ?Sized>(
    mut state: PopulationState,
    p: &ModelParams,
    horizon: u32,
    opts: &SimulationOptions,
    rng: &mut R,
) -> Result<RunOutcome> {
    check(p)?;
    state.t = 0.0;
    let mut counts = Vec::with_capacity(horizon as usize + 1);
    counts.push(state.len() as u64);
    let mut terminated_early = false;
    for month in 0..horizon {
        if p.nu == 0.0 && state.is_empty() {
            terminated_early = true;
            counts.resize(horizon as usize + 1, 0);
            state.t = month as f64;
            break;
        }
        step_month(&mut state, p, opts, rng);
        counts.push(state.len() as u64);
    }
    Ok(RunOutcome { state, counts, terminated_early })
}
