use anyhow::{bail, Result};
use fundsize::calibrate::panel::write_panel;
use fundsize::simulator::EntryTiming;
use fundsize::synth::{synthesize_panel, SynthOptions};
use fundsize::{EntryVariance, Month, SimulationOptions};

use crate::manifest::ManifestBuilder;
use crate::output::{num, OutputDir};
use crate::Cli;

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Length of the panel in years.
    #[arg(long, default_value_t = 15, conflicts_with = "months")]
    pub years: u32,

    /// Length of the panel in months, instead of `--years`.
    #[arg(long)]
    pub months: Option<u32>,

    /// Calendar month (YYYY-MM) of the first observation.
    #[arg(long, default_value = "1991-01")]
    pub start: Month,

    /// Mean monthly NAV return.
    #[arg(long, default_value_t = 0.008, allow_hyphen_values = true)]
    pub mu_r: f64,

    /// Standard deviation of the monthly NAV return.
    #[arg(long, default_value_t = 0.03)]
    pub sigma_r: f64,

    #[arg(long, default_value_t = 10.0)]
    pub initial_nav: f64,

    #[arg(long, default_value = "literal")]
    pub entry_variance: EntryVariance,

    #[arg(long, default_value = "within_month")]
    pub entry_timing: EntryTiming,
}

pub fn run(cli: &Cli, a: &Args, argv: &[String]) -> Result<()> {
    let mut manifest = ManifestBuilder::new("synth", argv);
    let p = cli.params.resolve_into(&mut manifest, |p| p.validate_for_simulation())?;
    let months = a.months.unwrap_or(a.years * 12);
    if months == 0 {
        bail!("the panel needs at least one month");
    }
    let opts = SynthOptions {
        months,
        start: a.start,
        mu_r: a.mu_r,
        sigma_r: a.sigma_r,
        initial_nav: a.initial_nav,
        simulation: SimulationOptions {
            entry_variance: a.entry_variance,
            entry_timing: a.entry_timing,
            ..SimulationOptions::default()
        },
    };
    manifest
        .seed(cli.seed)
        .switch("months", months)
        .switch("start", a.start)
        .switch("mu_r", a.mu_r)
        .switch("sigma_r", a.sigma_r)
        .switch("initial_nav", a.initial_nav)
        .switch("entry_variance", a.entry_variance.as_str())
        .switch("entry_timing", a.entry_timing);

    let panel = synthesize_panel(&p, &opts, cli.seed)?;

    let mut out = OutputDir::create(&cli.out_dir())?;
    write_panel(out.writer("panel.csv")?, &panel.records)?;
    let mut w = out.csv("final_snapshot.csv")?;
    w.write_record(["omega"])?;
    for &omega in &panel.final_log_sizes {
        w.write_record([num(omega)])?;
    }
    w.flush()?;
    manifest.finish(out)?;
    eprintln!(
        "{} fund-month records through {}; {} funds alive at the end",
        panel.records.len(),
        panel.final_month,
        panel.final_log_sizes.len()
    );
    Ok(())
}
