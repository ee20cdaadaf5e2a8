use anyhow::{bail, Context, Result};
use clap::Subcommand;
use fundsize::analytic::{
    density_lognormal_entry, density_point_entry, gamma_param, relaxation_time, steady_state_density, tail_exponent,
    total_funds,
};
use fundsize::curve::linspace;
use fundsize::params::MONTHS_PER_YEAR;
use fundsize::{DiffusionConstants, EntryVariance, ModelParams};
use serde::Serialize;

use crate::manifest::ManifestBuilder;
use crate::output::{num, tee_csv, OutputDir};
use crate::Cli;

#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    #[command(subcommand)]
    pub kind: Kind,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Kind {
    /// Expected number of funds at the given times.
    Count {
        /// Months since entry began; comma-separated, `inf` for the long-run limit.
        #[arg(long, value_delimiter = ',', default_value = "inf")]
        t: Vec<String>,
    },
    /// Log-size density at time `t` for point or lognormal entry.
    Density {
        /// Months since entry began, or `inf`.
        #[arg(long)]
        t: String,
        #[command(flatten)]
        grid: Grid,
        /// Entry size distribution; lognormal when `sigma_omega` is positive unless set.
        #[arg(long, value_parser = ["point", "lognormal"])]
        entry: Option<String>,
        #[arg(long, default_value = "literal")]
        entry_variance: EntryVariance,
    },
    /// Steady-state log-size density.
    Steady {
        #[command(flatten)]
        grid: Grid,
    },
    /// Upper-tail exponent of the steady-state size distribution.
    Zeta,
    /// Age at which the density at a log-size offset has settled.
    Timescale {
        /// Offsets `omega - omega0`; comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "6.9", allow_hyphen_values = true)]
        offset: Vec<f64>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct Grid {
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub omega_from: f64,
    #[arg(long, default_value_t = 15.0, allow_hyphen_values = true)]
    pub omega_to: f64,
    #[arg(long, default_value_t = 251)]
    pub points: usize,
}

impl Grid {
    fn omegas(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.omega_to > self.omega_from) {
            bail!("log-size grid needs at least two points and omega_to > omega_from");
        }
        Ok(linspace(self.omega_from, self.omega_to, self.points))
    }
}

#[derive(Serialize)]
struct Constants {
    constants: DiffusionConstants,
    gamma: Option<f64>,
    zeta: Option<f64>,
    /// Nonzero size-dependent terms are ignored by every closed form.
    ignored_mu0: f64,
    ignored_sigma0: f64,
}

fn parse_time(s: &str) -> Result<f64> {
    let t = match s.trim() {
        "inf" | "infinity" => f64::INFINITY,
        other => other.parse().with_context(|| format!("`{other}` is not a time in months"))?,
    };
    if !(t >= 0.0) {
        bail!("time must be non-negative, got {s}");
    }
    Ok(t)
}

pub fn run(cli: &Cli, a: &Args, argv: &[String]) -> Result<()> {
    let mut manifest = ManifestBuilder::new("analytic", argv);
    let p: ModelParams = cli.params.resolve_into(&mut manifest, |p| p.validate())?;
    let c = p.diffusion_constants();
    if p.mu0 != 0.0 || p.sigma0 != 0.0 {
        eprintln!("note: closed forms use the large-size limits mu_inf and sigma_inf; mu0 and sigma0 are ignored");
    }

    let (name, header, rows): (&str, Vec<&str>, Vec<Vec<String>>) = match &a.kind {
        Kind::Count { t } => {
            manifest.switch("kind", "count");
            let rows = t
                .iter()
                .map(|s| {
                    let t = parse_time(s)?;
                    Ok(vec![num(t), num(total_funds(t, c.nu, c.lambda))])
                })
                .collect::<Result<_>>()?;
            ("count.csv", vec!["t", "count"], rows)
        }
        Kind::Density { t, grid, entry, entry_variance } => {
            let t = parse_time(t)?;
            let lognormal = match entry.as_deref() {
                Some("lognormal") => true,
                Some(_) => false,
                None => p.sigma_omega > 0.0,
            };
            manifest
                .switch("kind", "density")
                .switch("entry", if lognormal { "lognormal" } else { "point" })
                .switch("entry_variance", entry_variance.as_str());
            let rows = grid
                .omegas()?
                .into_iter()
                .map(|w| {
                    let v = if t.is_infinite() && !lognormal {
                        steady_state_density(w, &c)?
                    } else if lognormal {
                        density_lognormal_entry(w, t, &c, p.sigma_omega, *entry_variance)?
                    } else {
                        density_point_entry(w, t, &c)?
                    };
                    Ok(vec![num(w), num(v)])
                })
                .collect::<Result<_>>()?;
            ("density.csv", vec!["omega", "density"], rows)
        }
        Kind::Steady { grid } => {
            manifest.switch("kind", "steady");
            let rows = grid
                .omegas()?
                .into_iter()
                .map(|w| Ok(vec![num(w), num(steady_state_density(w, &c)?)]))
                .collect::<Result<_>>()?;
            ("steady.csv", vec!["omega", "density"], rows)
        }
        Kind::Zeta => {
            manifest.switch("kind", "zeta");
            let rows = vec![vec![num(tail_exponent(&c)?), num(gamma_param(&c)?)]];
            ("zeta.csv", vec!["zeta", "gamma"], rows)
        }
        Kind::Timescale { offset } => {
            manifest.switch("kind", "timescale");
            let rows = offset
                .iter()
                .map(|&x| {
                    let months = relaxation_time(c.omega0 + x, &c)?;
                    Ok(vec![num(x), num(months), num(months / MONTHS_PER_YEAR)])
                })
                .collect::<Result<_>>()?;
            ("timescale.csv", vec!["omega_minus_omega0", "months", "years"], rows)
        }
    };

    let mut out = OutputDir::create(&cli.out_dir())?;
    tee_csv(&mut out, name, &header, &rows)?;
    out.json(
        "constants.json",
        &Constants {
            constants: c,
            gamma: gamma_param(&c).ok(),
            zeta: tail_exponent(&c).ok(),
            ignored_mu0: p.mu0,
            ignored_sigma0: p.sigma0,
        },
    )?;
    manifest.finish(out)?;
    Ok(())
}
