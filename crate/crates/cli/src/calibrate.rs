use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use fundsize::calibrate::binning::{BinOptions, BinScheme};
use fundsize::calibrate::panel::{adjust_for_inflation, read_cpi, read_panel};
use fundsize::calibrate::rates::RatePeriod;
use fundsize::{calibrate, CalibrationOptions, EntryVariance, Month};

use crate::manifest::ManifestBuilder;
use crate::output::{num, OutputDir};
use crate::Cli;

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// Fund-month panel with header `fund_id,month,tasm,nav`.
    #[arg(long)]
    pub data: PathBuf,

    /// `month,cpi` table; sizes are restated in the money of the base month.
    #[arg(long)]
    pub cpi: Option<PathBuf>,

    /// Base month (YYYY-MM) of the inflation adjustment; the last CPI month by default.
    #[arg(long, requires = "cpi")]
    pub cpi_base: Option<Month>,

    #[arg(long, default_value_t = 100)]
    pub bins: usize,

    /// equal_occupancy or exponential.
    #[arg(long, default_value = "equal_occupancy")]
    pub binning: BinScheme,

    /// Bins with fewer transitions are merged into a neighbour.
    #[arg(long, default_value_t = 30)]
    pub min_bin_count: usize,

    /// Period of the entry and exit regressions: monthly or yearly.
    #[arg(long, default_value = "monthly")]
    pub rate_period: RatePeriod,

    #[arg(long, default_value = "literal")]
    pub entry_variance: EntryVariance,

    /// Month (YYYY-MM) of the flow-performance regression; the last panel month by default.
    #[arg(long)]
    pub flow_as_of: Option<Month>,

    #[arg(long, default_value_t = 6)]
    pub flow_lags: usize,
}

pub fn run(cli: &Cli, a: &Args, argv: &[String]) -> Result<()> {
    let mut manifest = ManifestBuilder::new("calibrate", argv);
    let file = File::open(&a.data).with_context(|| format!("opening {}", a.data.display()))?;
    let mut records = read_panel(file).with_context(|| format!("reading panel {}", a.data.display()))?;
    manifest.input(&a.data)?;
    if let Some(path) = &a.cpi {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let cpi = read_cpi(file).with_context(|| format!("reading CPI table {}", path.display()))?;
        let base = adjust_for_inflation(&mut records, &cpi, a.cpi_base)?;
        manifest.input(path)?.switch("cpi_base", base);
    }

    let opts = CalibrationOptions {
        bins: BinOptions { bins: a.bins, scheme: a.binning, min_count: a.min_bin_count },
        rate_period: a.rate_period,
        entry_variance: a.entry_variance,
        flow_as_of: a.flow_as_of,
        flow_lags: a.flow_lags,
        ..CalibrationOptions::default()
    };
    manifest
        .switch("bins", a.bins)
        .switch("binning", a.binning)
        .switch("min_bin_count", a.min_bin_count)
        .switch("rate_period", a.rate_period)
        .switch("entry_variance", a.entry_variance.as_str())
        .switch("flow_lags", a.flow_lags);
    if let Some(m) = a.flow_as_of {
        manifest.switch("flow_as_of", m);
    }

    let cal = calibrate(&records, &opts)?;

    let mut out = OutputDir::create(&cli.out_dir())?;
    let mut w = out.csv("decomposition.csv")?;
    w.write_record(["fund_id", "month", "size", "delta_s", "delta_r", "delta_f"])?;
    for d in &cal.decompositions {
        w.write_record([
            d.fund_id.clone(),
            d.month.to_string(),
            num(d.size),
            num(d.delta_s),
            num(d.delta_r),
            num(d.delta_f),
        ])?;
    }
    w.flush()?;

    let mut w = out.csv("industry_counts.csv")?;
    w.write_record(["period_start", "n_prev", "entered", "exited"])?;
    for c in &cal.counts {
        w.write_record([c.start.to_string(), num(c.n_prev), num(c.entered), num(c.exited)])?;
    }
    w.flush()?;

    let mut w = out.csv("binned_stats.csv")?;
    w.write_record([
        "size_lo",
        "size_hi",
        "size",
        "n",
        "log_growth_mean",
        "log_growth_mean_se",
        "log_growth_sd",
        "log_growth_sd_se",
        "delta_r_mean",
        "delta_r_sd",
        "delta_f_mean",
        "delta_f_sd",
    ])?;
    for b in cal.binned.iter().flat_map(|b| &b.bins) {
        w.write_record([
            num(b.size_lo),
            num(b.size_hi),
            num(b.size),
            b.n.to_string(),
            num(b.log_growth.mean),
            num(b.log_growth.mean_se),
            num(b.log_growth.sd),
            num(b.log_growth.sd_se),
            num(b.delta_r.mean),
            num(b.delta_r.sd),
            num(b.delta_f.mean),
            num(b.delta_f.sd),
        ])?;
    }
    w.flush()?;

    let mut w = out.csv("flow_autocorrelation.csv")?;
    w.write_record(["fund_id", "pairs", "lag1"])?;
    for f in &cal.autocorrelation {
        w.write_record([f.fund_id.clone(), f.pairs.to_string(), num(f.lag1)])?;
    }
    w.flush()?;

    out.json("fit_report.json", &cal.report)?;
    if let Some(p) = &cal.report.calibrated {
        out.json("calibrated_params.json", p)?;
    }
    for d in &cal.report.diagnostics {
        eprintln!("note: {d}");
    }
    if cal.report.calibrated.is_none() {
        eprintln!("note: not every component could be estimated; calibrated_params.json not written");
    }
    manifest.finish(out)?;
    Ok(())
}
