use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use fundsize::params::MONTHS_PER_YEAR;
use fundsize::ModelParams;

use crate::manifest::{ManifestBuilder, ResolvedParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    #[value(name = "1991-2005")]
    Y1991To2005,
    #[value(name = "1991-1998")]
    Y1991To1998,
}

impl Preset {
    fn params(self) -> ModelParams {
        match self {
            Preset::Y1991To2005 => ModelParams::table3_1991_2005(),
            Preset::Y1991To1998 => ModelParams::table3_1991_1998(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::Y1991To2005 => "1991-2005",
            Preset::Y1991To1998 => "1991-1998",
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct ParamArgs {
    /// Flat JSON object with every model parameter (strict: no missing or unknown keys).
    #[arg(long, global = true, conflicts_with = "preset")]
    pub config: Option<PathBuf>,

    /// Built-in parameter set used when no config is given.
    #[arg(long, global = true, value_enum, default_value = "1991-2005")]
    pub preset: Preset,

    /// Override one parameter, e.g. `--set mu_inf=0.005`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// `nu` and `lambda` in the config file and overrides are per year rather than per month.
    #[arg(long, global = true)]
    pub rates_per_year: bool,
}

impl ParamArgs {
    /// Config or preset, then overrides, then the one unit conversion. Not validated.
    pub fn resolve(&self) -> Result<ResolvedParams> {
        let scale_rates = |p: &mut ModelParams| {
            if self.rates_per_year {
                p.nu /= MONTHS_PER_YEAR;
                p.lambda /= MONTHS_PER_YEAR;
            }
        };
        let (mut p, source) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                let mut p: ModelParams =
                    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
                scale_rates(&mut p);
                (p, path.display().to_string())
            }
            None => (self.preset.params(), format!("preset:{}", self.preset.name())),
        };
        for o in &self.overrides {
            let Some((key, value)) = o.split_once('=') else {
                bail!("override `{o}` is not KEY=VALUE");
            };
            let key = key.trim();
            let mut v: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("override `{o}`: `{value}` is not a number"))?;
            if self.rates_per_year && (key == "nu" || key == "lambda") {
                v /= MONTHS_PER_YEAR;
            }
            p.set(key, v)?;
        }
        Ok(ResolvedParams::new(source, p))
    }

    /// Resolves and records the parameters, applying `check` before anything is written.
    pub fn resolve_into(
        &self,
        manifest: &mut ManifestBuilder,
        check: impl Fn(&ModelParams) -> Vec<fundsize::params::Diagnostic>,
    ) -> Result<ModelParams> {
        let r = self.resolve()?;
        let d = check(&r.monthly);
        if !d.is_empty() {
            return Err(fundsize::Error::InvalidParams(d).into());
        }
        if let Some(path) = &self.config {
            manifest.input(path)?;
        }
        manifest.switch("rates_per_year", self.rates_per_year);
        let p = r.monthly;
        manifest.params(r);
        Ok(p)
    }
}
