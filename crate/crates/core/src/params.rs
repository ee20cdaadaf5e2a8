//! Model parameter space, size-dependent growth coefficients and the entry-size draw.
//!
//! All rates are per month. Sizes are in millions of USD and log-sizes are natural
//! logarithms of that, so a log-size of zero is a one-million-dollar fund.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const MONTHS_PER_YEAR: f64 = 12.0;

/// Rates and coefficient-curve parameters of the entry/exit/growth process.
///
/// Drift and volatility are each a power law plus a constant in the fund size:
/// `mu(s) = mu0 * s^-alpha + mu_inf` and `sigma(s) = sigma0 * s^-beta + sigma_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Entry rate, funds per month.
    pub nu: f64,
    /// Exit rate per fund, per month.
    pub lambda: f64,
    pub mu0: f64,
    pub alpha: f64,
    pub mu_inf: f64,
    pub sigma0: f64,
    pub beta: f64,
    pub sigma_inf: f64,
    /// Mean log-size of entering funds.
    pub omega0: f64,
    /// Spread parameter of the entry log-size distribution; see [`EntryVariance`].
    pub sigma_omega: f64,
    /// Time at which entry starts, months.
    pub t0: f64,
}

impl ModelParams {
    /// Fitted values for 1991-2005 with the yearly mean entry count (891) and an
    /// exit rate of 0.092 per year, both converted to monthly rates.
    pub fn table3_1991_2005() -> Self {
        Self {
            nu: 891.0 / MONTHS_PER_YEAR,
            lambda: 0.092 / MONTHS_PER_YEAR,
            mu0: 0.08,
            alpha: 0.52,
            mu_inf: 0.004,
            sigma0: 0.30,
            beta: 0.27,
            sigma_inf: 0.05,
            omega0: -0.37,
            sigma_omega: 3.16,
            t0: 0.0,
        }
    }

    /// Fitted values for 1991-1998, same entry and exit rates as [`Self::table3_1991_2005`].
    pub fn table3_1991_1998() -> Self {
        Self {
            mu0: 0.15,
            alpha: 0.48,
            mu_inf: 0.002,
            sigma0: 0.35,
            beta: 0.31,
            sigma_inf: 0.05,
            omega0: 0.14,
            sigma_omega: 3.02,
            ..Self::table3_1991_2005()
        }
    }

    /// Size-independent growth: `mu(s) = mu`, `sigma(s) = sigma`, point entry at `omega0`.
    pub fn constant(nu: f64, lambda: f64, mu: f64, sigma: f64, omega0: f64) -> Self {
        Self {
            nu,
            lambda,
            mu0: 0.0,
            alpha: 0.0,
            mu_inf: mu,
            sigma0: 0.0,
            beta: 0.0,
            sigma_inf: sigma,
            omega0,
            sigma_omega: 0.0,
            t0: 0.0,
        }
    }

    pub const FIELD_NAMES: [&'static str; 11] = [
        "nu",
        "lambda",
        "mu0",
        "alpha",
        "mu_inf",
        "sigma0",
        "beta",
        "sigma_inf",
        "omega0",
        "sigma_omega",
        "t0",
    ];

    /// Sets a field by its serialized name.
    pub fn set(&mut self, field: &str, value: f64) -> Result<()> {
        let slot = match field {
            "nu" => &mut self.nu,
            "lambda" => &mut self.lambda,
            "mu0" => &mut self.mu0,
            "alpha" => &mut self.alpha,
            "mu_inf" => &mut self.mu_inf,
            "sigma0" => &mut self.sigma0,
            "beta" => &mut self.beta,
            "sigma_inf" => &mut self.sigma_inf,
            "omega0" => &mut self.omega0,
            "sigma_omega" => &mut self.sigma_omega,
            "t0" => &mut self.t0,
            other => return Err(invalid(format!("unknown parameter `{other}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Every violated invariant; empty when the parameters are usable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = self.validate_for_simulation();
        if self.sigma_inf == 0.0 {
            out.push(Diagnostic::new("sigma_inf", "asymptotic volatility must be positive"));
        }
        out
    }

    /// Checks needed to run the stochastic process. Unlike [`validate`](Self::validate)
    /// this admits `sigma_inf = 0`, which the closed forms cannot handle but a
    /// simulation can.
    pub fn validate_for_simulation(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let fields = [
            ("nu", self.nu),
            ("lambda", self.lambda),
            ("mu0", self.mu0),
            ("alpha", self.alpha),
            ("mu_inf", self.mu_inf),
            ("sigma0", self.sigma0),
            ("beta", self.beta),
            ("sigma_inf", self.sigma_inf),
            ("omega0", self.omega0),
            ("sigma_omega", self.sigma_omega),
            ("t0", self.t0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                out.push(Diagnostic::new(name, "must be a finite number"));
            }
        }
        for (name, v, what) in [
            ("nu", self.nu, "entry rate"),
            ("lambda", self.lambda, "exit rate"),
        ] {
            if v < 0.0 {
                out.push(Diagnostic::new(name, format!("{what} must not be a negative rate")));
            }
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("sigma0", self.sigma0),
            ("sigma_inf", self.sigma_inf),
            ("sigma_omega", self.sigma_omega),
        ] {
            if v < 0.0 {
                out.push(Diagnostic::new(name, "must be non-negative"));
            }
        }
        out
    }

    pub fn validated(self) -> Result<Self> {
        let diagnostics = self.validate();
        if diagnostics.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(diagnostics))
        }
    }

    /// Drift at log-size `omega`, identical to [`mu_of_size`] at `s = e^omega`.
    #[inline]
    pub fn mu_at_log_size(&self, omega: f64) -> f64 {
        self.mu0 * (-self.alpha * omega).exp() + self.mu_inf
    }

    /// Volatility at log-size `omega`, identical to [`sigma_of_size`] at `s = e^omega`.
    #[inline]
    pub fn sigma_at_log_size(&self, omega: f64) -> f64 {
        self.sigma0 * (-self.beta * omega).exp() + self.sigma_inf
    }

    /// Large-size limit of the coefficients, the input of the closed-form solutions.
    pub fn diffusion_constants(&self) -> DiffusionConstants {
        DiffusionConstants {
            mu: self.mu_inf,
            diffusion: 0.5 * self.sigma_inf * self.sigma_inf,
            lambda: self.lambda,
            nu: self.nu,
            omega0: self.omega0,
        }
    }

    /// `(nu, lambda)` expressed per year.
    pub fn annual_rates(&self) -> AnnualRates {
        AnnualRates {
            nu: self.nu * MONTHS_PER_YEAR,
            lambda: self.lambda * MONTHS_PER_YEAR,
        }
    }

    /// Interprets `nu` and `lambda` as per-year rates and converts them to per-month.
    pub fn from_annual_rates(mut self) -> Self {
        self.nu /= MONTHS_PER_YEAR;
        self.lambda /= MONTHS_PER_YEAR;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualRates {
    pub nu: f64,
    pub lambda: f64,
}

/// One violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub field: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Constant-coefficient limit of the model, `D = sigma_inf^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConstants {
    /// Drift per month.
    pub mu: f64,
    /// Diffusion coefficient per month.
    pub diffusion: f64,
    pub lambda: f64,
    pub nu: f64,
    pub omega0: f64,
}

/// How the entry spread parameter maps to the variance of entry log-sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryVariance {
    /// Density `exp(-(w - w0)^2 / s^2) / sqrt(pi s^2)`: variance `s^2 / 2`.
    #[default]
    Literal,
    /// Ordinary normal with standard deviation `s`.
    Standard,
}

impl EntryVariance {
    pub fn variance(self, sigma_omega: f64) -> f64 {
        match self {
            Self::Literal => 0.5 * sigma_omega * sigma_omega,
            Self::Standard => sigma_omega * sigma_omega,
        }
    }

    pub fn std_dev(self, sigma_omega: f64) -> f64 {
        self.variance(sigma_omega).sqrt()
    }

    /// Inverse of [`Self::std_dev`]: the spread parameter with this standard deviation.
    pub fn spread_for_std_dev(self, std_dev: f64) -> f64 {
        match self {
            Self::Literal => std_dev * std::f64::consts::SQRT_2,
            Self::Standard => std_dev,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Literal => "literal",
            Self::Standard => "standard",
        }
    }
}

impl std::str::FromStr for EntryVariance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "standard" => Ok(Self::Standard),
            other => Err(invalid(format!("unknown entry variance convention `{other}`"))),
        }
    }
}

/// Drift per month of a fund of size `s` (millions USD).
pub fn mu_of_size(s: f64, p: &ModelParams) -> Result<f64> {
    check_size(s)?;
    Ok(p.mu0 * s.powf(-p.alpha) + p.mu_inf)
}

/// Volatility per square-root month of a fund of size `s` (millions USD).
pub fn sigma_of_size(s: f64, p: &ModelParams) -> Result<f64> {
    check_size(s)?;
    Ok(p.sigma0 * s.powf(-p.beta) + p.sigma_inf)
}

fn check_size(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("fund size must be positive and finite, got {s}")))
    }
}

/// Log-size of a newly entering fund.
pub fn entry_size_draw<R: Rng + ?Sized>(rng: &mut R, p: &ModelParams, convention: EntryVariance) -> f64 {
    if p.sigma_omega == 0.0 {
        return p.omega0;
    }
    let z: f64 = rng.sample(StandardNormal);
    p.omega0 + convention.std_dev(p.sigma_omega) * z
}
