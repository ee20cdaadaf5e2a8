use anyhow::{bail, Result};
use clap::ValueEnum;
use fundsize::curve::linspace;
use fundsize::stats::{gini_curve, matched_lognormal_scale, ReferenceFamily};
use fundsize::{ReferenceDistribution, StdDev};

use crate::manifest::ManifestBuilder;
use crate::output::{num, OutputDir};
use crate::Cli;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Pareto,
    Lognormal,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    pub kind: Kind,

    /// Pareto lower cutoff.
    #[arg(long, default_value_t = 0.01)]
    pub s0: f64,

    /// Lognormal location, the mean of the log-size.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a: f64,

    /// First swept parameter (alpha or b); 2.05 for Pareto, 0.05 for lognormal.
    #[arg(long)]
    pub from: Option<f64>,

    /// Last swept parameter; 6 for Pareto, 3 for lognormal.
    #[arg(long)]
    pub to: Option<f64>,

    #[arg(long, default_value_t = 80)]
    pub points: usize,

    /// Pareto only: also write the lognormal with location `--a` and the same
    /// standard deviation at every finite-variance point.
    #[arg(long)]
    pub match_lognormal: bool,
}

pub fn run(cli: &Cli, a: &Args, argv: &[String]) -> Result<()> {
    let mut manifest = ManifestBuilder::new("gini", argv);
    let (family, from, to) = match a.kind {
        Kind::Pareto => (ReferenceFamily::Pareto { s0: a.s0 }, a.from.unwrap_or(2.05), a.to.unwrap_or(6.0)),
        Kind::Lognormal => (ReferenceFamily::Lognormal { a: a.a }, a.from.unwrap_or(0.05), a.to.unwrap_or(3.0)),
    };
    if a.points == 0 || !(to >= from) {
        bail!("sweep needs at least one point and --to >= --from");
    }
    if a.match_lognormal && a.kind != Kind::Pareto {
        bail!("--match-lognormal applies to the Pareto sweep");
    }
    let params = linspace(from, to, a.points);
    for &x in &params {
        family.at(x).validate()?;
    }
    manifest
        .switch("kind", format!("{:?}", a.kind).to_lowercase())
        .switch("s0", a.s0)
        .switch("a", a.a)
        .switch("from", from)
        .switch("to", to)
        .switch("points", a.points)
        .switch("match_lognormal", a.match_lognormal);

    let curve = gini_curve(family, &params)?;
    let crossover = if a.match_lognormal {
        let mut rows = Vec::new();
        for g in &curve {
            let StdDev::Finite(sd) = g.std_dev else { continue };
            let b = matched_lognormal_scale(sd, a.a)?;
            let gl = ReferenceDistribution::Lognormal { a: a.a, b }.gini()?;
            rows.push([num(g.param), num(sd), num(g.gini), num(b), num(gl), (gl > g.gini).to_string()]);
        }
        Some(rows)
    } else {
        None
    };

    let mut out = OutputDir::create(&cli.out_dir())?;
    let mut w = out.csv("gini.csv")?;
    w.write_record(["param", "std_dev", "gini"])?;
    for g in &curve {
        w.write_record([num(g.param), num(g.std_dev.value()), num(g.gini)])?;
    }
    w.flush()?;
    if let Some(rows) = crossover {
        let mut w = out.csv("crossover.csv")?;
        w.write_record(["alpha", "std_dev", "gini_pareto", "b", "gini_lognormal", "lognormal_exceeds"])?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    manifest.finish(out)?;
    Ok(())
}
