use std::io::Write;

use anyhow::Result;
use fundsize::analytic::total_funds;
use fundsize::simulator::{AsyncClock, EntryTiming};
use fundsize::{run_ensemble, Engine, EntryVariance, SimulationOptions};

use crate::manifest::ManifestBuilder;
use crate::output::{num, OutputDir};
use crate::Cli;

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Months simulated from an empty industry.
    #[arg(long, default_value_t = 180)]
    pub horizon: u32,

    #[arg(long, default_value_t = 1000)]
    pub runs: u32,

    /// `sync` (monthly steps) or `async` (one event per micro-step).
    #[arg(long, default_value = "sync")]
    pub engine: Engine,

    /// Micro-step length of the async engine: per_macro_step or per_1_over_1_plus_lambda.
    #[arg(long, default_value = "per_macro_step")]
    pub async_clock: AsyncClock,

    /// Reading of the entry spread parameter: literal or standard.
    #[arg(long, default_value = "literal")]
    pub entry_variance: EntryVariance,

    /// When entrants join within a month: within_month or end_of_month.
    #[arg(long, default_value = "within_month")]
    pub entry_timing: EntryTiming,

    /// Also write every run's monthly fund count.
    #[arg(long)]
    pub per_run_counts: bool,
}

pub fn run(cli: &Cli, a: &Args, argv: &[String]) -> Result<()> {
    let mut manifest = ManifestBuilder::new("simulate", argv);
    let p = cli.params.resolve_into(&mut manifest, |p| p.validate_for_simulation())?;
    let opts = SimulationOptions {
        engine: a.engine,
        async_clock: a.async_clock,
        entry_variance: a.entry_variance,
        entry_timing: a.entry_timing,
    };
    manifest
        .seed(cli.seed)
        .switch("engine", a.engine)
        .switch("async_clock", a.async_clock)
        .switch("entry_variance", a.entry_variance.as_str())
        .switch("entry_timing", a.entry_timing)
        .switch("horizon", a.horizon)
        .switch("runs", a.runs);

    let result = run_ensemble(&p, a.horizon, a.runs, cli.seed, &opts)?;

    let mut out = OutputDir::create(&cli.out_dir())?;
    let mut w = out.csv("snapshot.csv")?;
    w.write_record(["run", "omega"])?;
    for k in 0..result.runs as usize {
        let run = k.to_string();
        for &omega in result.run_snapshot(k) {
            w.write_record([run.as_str(), &num(omega)])?;
        }
    }
    w.flush()?;

    let mean = result.mean_counts();
    let se = result.mean_count_std_errors();
    let mut w = out.csv("fund_counts.csv")?;
    w.write_record(["month", "mean", "std_error", "analytic"])?;
    for (m, (avg, err)) in mean.iter().zip(&se).enumerate() {
        // The closed-form count describes the monthly-step process only.
        let expected = match a.engine {
            Engine::Synchronous => num(total_funds(m as f64, p.nu, p.lambda)),
            Engine::Asynchronous => String::new(),
        };
        w.write_record([m.to_string(), num(*avg), num(*err), expected])?;
    }
    w.flush()?;

    if a.per_run_counts {
        let mut w = out.csv("fund_counts_per_run.csv")?;
        w.write_record(["run", "month", "count"])?;
        for (k, series) in result.count_series.iter().enumerate() {
            for (m, n) in series.iter().enumerate() {
                w.write_record([k.to_string(), m.to_string(), n.to_string()])?;
            }
        }
        w.flush()?;
    }

    if !result.flagged.is_empty() {
        let mut w = out.writer("terminated_runs.txt")?;
        for k in &result.flagged {
            writeln!(w, "{k}")?;
        }
        w.flush()?;
        eprintln!("{} run(s) ended early with no funds and no entry", result.flagged.len());
    }

    let dir = out.path().display().to_string();
    manifest.finish(out)?;
    eprintln!(
        "simulated {} run(s) over {} month(s): {} funds pooled, mean final count {:.1}; outputs in {dir}",
        result.runs,
        result.horizon,
        result.snapshot.len(),
        mean.last().copied().unwrap_or(0.0)
    );
    Ok(())
}
