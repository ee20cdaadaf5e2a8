use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use fundsize::stats::{qq_pairs, quantile, Ecdf};

use crate::manifest::ManifestBuilder;
use crate::output::{num, read_column, OutputDir};
use crate::Cli;

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// First sample; a `run` column enables the per-run KS band.
    #[arg(long)]
    pub a: PathBuf,

    #[arg(long)]
    pub b: PathBuf,

    /// Column read from both files.
    #[arg(long, default_value = "omega")]
    pub column: String,

    /// Column of the second file when it differs from `--column`.
    #[arg(long)]
    pub column_b: Option<String>,

    /// Take natural logarithms of both samples first.
    #[arg(long)]
    pub log: bool,

    /// Number of QQ pairs at evenly spaced probabilities.
    #[arg(long, default_value_t = 101)]
    pub quantiles: usize,

    /// Largest number of points of the merged ECDF grid.
    #[arg(long, default_value_t = 10_000)]
    pub grid_points: usize,
}

/// KS distance of each run against the pooled sample, summarized by its 5th and 95th percentiles.
struct Band {
    runs: usize,
    p05: f64,
    p95: f64,
}

fn ks_band(pooled: &Ecdf, values: &[f64], runs: &[f64]) -> Result<Option<Band>> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for (&v, &r) in values.iter().zip(runs) {
        if !(r >= 0.0 && r.fract() == 0.0) {
            bail!("run column holds `{r}`, not a run index");
        }
        groups.entry(r as u64).or_default().push(v);
    }
    if groups.len() < 2 {
        return Ok(None);
    }
    let mut ks = groups.values().map(|g| pooled.ks_distance_to(g)).collect::<fundsize::Result<Vec<_>>>()?;
    ks.sort_by(f64::total_cmp);
    Ok(Some(Band { runs: ks.len(), p05: quantile(&ks, 0.05), p95: quantile(&ks, 0.95) }))
}

fn thin(sorted_unique: Vec<f64>, max: usize) -> Vec<f64> {
    if sorted_unique.len() <= max || max < 2 {
        return sorted_unique;
    }
    let last = sorted_unique.len() - 1;
    let mut out: Vec<f64> = (0..max).map(|i| sorted_unique[i * last / (max - 1)]).collect();
    out.dedup();
    out
}

pub fn run(cli: &Cli, a: &Args, argv: &[String]) -> Result<()> {
    let mut manifest = ManifestBuilder::new("compare", argv);
    let column_b = a.column_b.clone().unwrap_or_else(|| a.column.clone());
    let mut xa = read_column(&a.a, &a.column)?;
    let mut xb = read_column(&a.b, &column_b)?;
    manifest.input(&a.a)?.input(&a.b)?;
    manifest
        .switch("column", &a.column)
        .switch("column_b", &column_b)
        .switch("log", a.log)
        .switch("quantiles", a.quantiles)
        .switch("grid_points", a.grid_points);
    if xa.is_empty() || xb.is_empty() {
        bail!("cannot compare an empty sample ({}: {}, {}: {})", a.a.display(), xa.len(), a.b.display(), xb.len());
    }
    if a.log {
        for x in xa.iter_mut().chain(xb.iter_mut()) {
            *x = x.ln();
        }
    }
    if xa.iter().chain(&xb).any(|x| x.is_nan()) {
        bail!("samples contain values that are not numbers (a logarithm of a non-positive value?)");
    }

    let ea = Ecdf::new(&xa)?;
    let eb = Ecdf::new(&xb)?;
    let ks = ea.ks_distance_to(&xb)?;
    let runs = read_column(&a.a, "run").ok();
    let band = match &runs {
        Some(r) => ks_band(&ea, &xa, r)?,
        None => None,
    };

    let mut grid: Vec<f64> = ea.sorted_sample().iter().chain(eb.sorted_sample()).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let grid = thin(grid, a.grid_points);

    let mut out = OutputDir::create(&cli.out_dir())?;
    let mut w = out.csv("ecdf.csv")?;
    w.write_record(["x", "ecdf_a", "ecdf_b"])?;
    for &x in &grid {
        w.write_record([num(x), num(ea.eval(x)), num(eb.eval(x))])?;
    }
    w.flush()?;

    let mut w = out.csv("qq.csv")?;
    w.write_record(["p", "quantile_a", "quantile_b"])?;
    let pairs = qq_pairs(&xa, &xb, a.quantiles)?;
    for (k, (qa, qb)) in pairs.iter().enumerate() {
        let p = if a.quantiles == 1 { 0.5 } else { k as f64 / (a.quantiles - 1) as f64 };
        w.write_record([num(p), num(*qa), num(*qb)])?;
    }
    w.flush()?;

    let mut w = out.csv("ks.csv")?;
    w.write_record(["ks", "n_a", "n_b", "runs", "band_p05", "band_p95", "within_band"])?;
    let band_fields = match &band {
        Some(b) => [b.runs.to_string(), num(b.p05), num(b.p95), (b.p05 <= ks && ks <= b.p95).to_string()],
        None => Default::default(),
    };
    let mut record = vec![num(ks), xa.len().to_string(), xb.len().to_string()];
    record.extend(band_fields);
    w.write_record(&record)?;
    w.flush()?;

    manifest.finish(out)?;
    match &band {
        Some(b) => println!("ks={ks} band=[{}, {}] over {} runs", b.p05, b.p95, b.runs),
        None => println!("ks={ks}"),
    }
    Ok(())
}
