//! Monte Carlo realization of the entry, exit and growth process.
//!
//! Two engines are available: a synchronous one that advances every fund one
//! month at a time, and an event-driven asynchronous one. Ensembles of seeded
//! runs execute in parallel and pool deterministically by run index.

mod asynchronous;
mod histogram;
mod synchronous;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{EntryVariance, ModelParams};
use crate::rng;

pub use asynchronous::{long_run_count_at_month_end, run_async, run_async_from, AsyncClock};
pub use histogram::{histogram, snapshot_histogram, Binning, Histogram};
pub use synchronous::{run_sync, run_sync_from, step_month, EntryTiming};

/// Live funds and the cumulative entry/exit counters.
///
/// `log_sizes[i]` and `ids[i]` describe the same fund. Ids are entry ordinals,
/// so they are unique within a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationState {
    pub log_sizes: Vec<f64>,
    pub ids: Vec<u64>,
    /// Simulated time in months.
    pub t: f64,
    pub entered_total: u64,
    pub exited_total: u64,
}

impl PopulationState {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.log_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_sizes.is_empty()
    }

    /// Adds a fund at log-size `omega`.
    pub fn admit(&mut self, omega: f64) {
        self.ids.push(self.entered_total);
        self.log_sizes.push(omega);
        self.entered_total += 1;
    }

    fn remove(&mut self, index: usize) {
        self.log_sizes.swap_remove(index);
        self.ids.swap_remove(index);
        self.exited_total += 1;
    }

    /// A fund that entered and left between two observations.
    fn admit_and_remove(&mut self) {
        self.entered_total += 1;
        self.exited_total += 1;
    }
}

/// One Euler-Maruyama step of length `dt` months in log-size.
fn grow<R: Rng + ?Sized>(omega: f64, dt: f64, p: &ModelParams, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    omega + p.mu_at_log_size(omega) * dt + p.sigma_at_log_size(omega) * dt.sqrt() * z
}

fn check(p: &ModelParams) -> Result<()> {
    let d = p.validate_for_simulation();
    if d.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParams(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Engine {
    #[default]
    #[serde(rename = "sync")]
    Synchronous,
    #[serde(rename = "async")]
    Asynchronous,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Synchronous => "sync",
            Engine::Asynchronous => "async",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sync" | "synchronous" => Ok(Engine::Synchronous),
            "async" | "asynchronous" => Ok(Engine::Asynchronous),
            _ => Err(invalid(format!("unknown engine `{s}` (expected sync or async)"))),
        }
    }
}

/// Switches that change how the process is realized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub engine: Engine,
    pub async_clock: AsyncClock,
    pub entry_variance: EntryVariance,
    pub entry_timing: EntryTiming,
}

/// A single run: final population, fund count at every whole month
/// `0..=horizon`, and whether it stopped early because nothing could happen.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: PopulationState,
    pub counts: Vec<u64>,
    pub terminated_early: bool,
}

/// Runs one realization with the engine selected in `opts`.
pub fn run<R: Rng + ?Sized>(p: &ModelParams, horizon: u32, opts: &SimulationOptions, rng: &mut R) -> Result<RunOutcome> {
    match opts.engine {
        Engine::Synchronous => run_sync(p, horizon, opts, rng),
        Engine::Asynchronous => run_async(p, horizon, opts, rng),
    }
}

/// Pooled result of independent seeded runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub runs: u32,
    pub horizon: u32,
    pub seed_root: u64,
    pub options: SimulationOptions,
    /// Log-sizes at the horizon, run 0 first.
    pub snapshot: Vec<f64>,
    /// `snapshot[run_offsets[k]..run_offsets[k + 1]]` belongs to run `k`.
    pub run_offsets: Vec<usize>,
    /// `count_series[k][m]` is the fund count of run `k` after month `m`.
    pub count_series: Vec<Vec<u64>>,
    /// Indices of runs that terminated early.
    pub flagged: Vec<u32>,
}

impl EnsembleResult {
    pub fn run_snapshot(&self, run: usize) -> &[f64] {
        &self.snapshot[self.run_offsets[run]..self.run_offsets[run + 1]]
    }

    pub fn final_counts(&self) -> Vec<u64> {
        self.count_series.iter().map(|c| *c.last().unwrap_or(&0)).collect()
    }

    /// Mean fund count at every whole month.
    pub fn mean_counts(&self) -> Vec<f64> {
        let months = self.horizon as usize + 1;
        let mut mean = vec![0.0; months];
        for series in &self.count_series {
            for (m, &n) in series.iter().enumerate().take(months) {
                mean[m] += n as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.runs as f64);
        mean
    }

    /// Standard error of [`mean_counts`](Self::mean_counts) across runs.
    pub fn mean_count_std_errors(&self) -> Vec<f64> {
        let mean = self.mean_counts();
        let r = self.runs as f64;
        if self.runs < 2 {
            return vec![f64::NAN; mean.len()];
        }
        mean.iter()
            .enumerate()
            .map(|(m, &avg)| {
                let ss: f64 = self.count_series.iter().map(|c| (c[m] as f64 - avg).powi(2)).sum();
                (ss / (r - 1.0) / r).sqrt()
            })
            .collect()
    }
}

/// Executes `runs` independent runs; run `k` uses stream `k` of `seed_root`.
pub fn run_ensemble(
    p: &ModelParams,
    horizon: u32,
    runs: u32,
    seed_root: u64,
    opts: &SimulationOptions,
) -> Result<EnsembleResult> {
    if runs == 0 {
        return Err(invalid("an ensemble needs at least one run"));
    }
    check(p)?;
    let outcomes = (0..runs)
        .into_par_iter()
        .map(|k| run(p, horizon, opts, &mut rng::stream(seed_root, k as u64)))
        .collect::<Result<Vec<_>>>()?;

    let total: usize = outcomes.iter().map(|o| o.state.len()).sum();
    let mut snapshot = Vec::with_capacity(total);
    let mut run_offsets = Vec::with_capacity(outcomes.len() + 1);
    let mut count_series = Vec::with_capacity(outcomes.len());
    let mut flagged = Vec::new();
    run_offsets.push(0);
    for (k, o) in outcomes.into_iter().enumerate() {
        snapshot.extend_from_slice(&o.state.log_sizes);
        run_offsets.push(snapshot.len());
        count_series.push(o.counts);
        if o.terminated_early {
            flagged.push(k as u32);
        }
    }
    Ok(EnsembleResult {
        runs,
        horizon,
        seed_root,
        options: *opts,
        snapshot,
        run_offsets,
        count_series,
        flagged,
    })
}
