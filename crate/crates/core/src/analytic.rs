//! Closed-form results for constant drift and diffusion.
//!
//! With `mu(s) = mu` and `sigma(s) = sigma` the number density `n(omega, t)` obeys a
//! linear drift-diffusion equation with a constant entry source and a uniform exit
//! sink, and everything below follows from its Green's function. Two combinations
//! appear throughout:
//!
//! * the exit-adjusted rate `a = lambda + mu^2 / (4 D) = gamma mu^2 / D`;
//! * the spatial decay rate `k = sqrt(a / D) = sqrt(gamma) |mu| / D`.
//!
//! Densities are formed in log space (see [`crate::special::ln_erfc`]) because the
//! solutions are differences of products of exponentially large and small factors.

use crate::error::{invalid, Result};
use crate::params::{DiffusionConstants, EntryVariance};
use crate::special::ln_erfc;

/// `gamma = 1/4 + lambda D / mu^2`.
///
/// With this definition `(mu/D)(sqrt(gamma) - 1/2)` is exactly the tail exponent of
/// [`tail_exponent`].
pub fn gamma_param(c: &DiffusionConstants) -> Result<f64> {
    if c.mu == 0.0 {
        return Err(invalid("gamma is undefined for zero drift"));
    }
    check_diffusion(c)?;
    if c.lambda < 0.0 {
        return Err(invalid("exit rate must be non-negative"));
    }
    Ok(0.25 + c.lambda * c.diffusion / (c.mu * c.mu))
}

/// Expected number of live funds a time `t` after entry starts, `(nu/lambda)(1 - e^{-lambda t})`.
pub fn total_funds(t: f64, nu: f64, lambda: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return nu * t;
    }
    if t.is_infinite() {
        return nu / lambda;
    }
    -nu * (-lambda * t).exp_m1() / lambda
}

/// Log-size density of a single fund started at `omega0`, with no entry or exit.
pub fn density_no_entry_exit(omega: f64, t: f64, c: &DiffusionConstants) -> Result<f64> {
    check_time(t)?;
    check_diffusion(c)?;
    let spread = 4.0 * c.diffusion * t;
    let x = omega - c.omega0 - c.mu * t;
    Ok((-x * x / spread).exp() / (std::f64::consts::PI * spread).sqrt())
}

/// Number density at time `t` when every entrant starts at exactly `omega0`.
///
/// `n = nu e^{mu x / 2D} / (4 sqrt(aD)) [ e^{-k|x|} erfc(|x|/(2 sqrt(Dt)) - sqrt(at))
///                                      - e^{k|x|} erfc(|x|/(2 sqrt(Dt)) + sqrt(at)) ]`
/// with `x = omega - omega0`.
pub fn density_point_entry(omega: f64, t: f64, c: &DiffusionConstants) -> Result<f64> {
    check_time(t)?;
    let rates = Rates::new(c)?;
    let x = omega - c.omega0;
    let log_bracket = rates.ln_bracket(x.abs(), 2.0 * c.diffusion * t);
    Ok(rates.prefactor(c.nu) * (c.mu * x / (2.0 * c.diffusion) + log_bracket).exp())
}

/// Number density at time `t` when entrants have normally distributed log-sizes.
///
/// Entry starts at `t = 0`. The entry log-size variance is `v` (see [`EntryVariance`]);
/// with `V(tau) = v + 2 D tau` the solution is
///
/// `n = nu e^{lambda v/2D + mu x'/2D} / (4 sqrt(aD)) [B(V(t)) - B(v)]`,
/// `x' = x + mu v / 2D`,
///
/// where `B(V) = e^{-k|x'|} erfc(p-) - e^{k|x'|} erfc(p+)` and
/// `p-/+ = |x'|/sqrt(2V) -/+ sqrt(aV/2D)`. For `v = 0` this is [`density_point_entry`].
pub fn density_lognormal_entry(
    omega: f64,
    t: f64,
    c: &DiffusionConstants,
    sigma_omega: f64,
    convention: EntryVariance,
) -> Result<f64> {
    check_time(t)?;
    if !(sigma_omega >= 0.0) {
        return Err(invalid("entry spread must be non-negative"));
    }
    let rates = Rates::new(c)?;
    let d = c.diffusion;
    let v = convention.variance(sigma_omega);
    let shifted = omega - c.omega0 + c.mu * v / (2.0 * d);
    let log_scale = c.lambda * v / (2.0 * d) + c.mu * shifted / (2.0 * d);
    let late = rates.ln_bracket(shifted.abs(), v + 2.0 * d * t);
    let early = rates.ln_bracket(shifted.abs(), v);
    if late == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let diff = late + ln_one_minus_exp(early - late);
    Ok(rates.prefactor(c.nu) * (log_scale + diff).exp())
}

/// Long-time limit of [`density_point_entry`]: `nu/(2 sqrt(aD)) e^{mu x/2D - k|x|}`.
pub fn steady_state_density(omega: f64, c: &DiffusionConstants) -> Result<f64> {
    if c.lambda == 0.0 {
        return Err(invalid("no steady state without exit (lambda = 0)"));
    }
    let rates = Rates::new(c)?;
    let x = omega - c.omega0;
    Ok(2.0 * rates.prefactor(c.nu) * (c.mu * x / (2.0 * c.diffusion) - rates.k * x.abs()).exp())
}

/// Upper-tail exponent of the steady-state size distribution,
/// `(-mu + sqrt(mu^2 + 4 D lambda)) / 2D`.
pub fn tail_exponent(c: &DiffusionConstants) -> Result<f64> {
    check_diffusion(c)?;
    if !(c.lambda > 0.0) {
        return Err(invalid("tail exponent requires a positive exit rate"));
    }
    let root = (c.mu * c.mu + 4.0 * c.diffusion * c.lambda).sqrt();
    // Rationalised form for positive drift avoids cancellation.
    Ok(if c.mu > 0.0 {
        2.0 * c.lambda / (c.mu + root)
    } else {
        (root - c.mu) / (2.0 * c.diffusion)
    })
}

/// Age, in months, after which the density at `omega` is within about one percent
/// of its steady state: `(9D / 4 gamma mu^2)(1 + sqrt(1 + (2/9)(sqrt(gamma)|mu|/D)|x|))^2`.
pub fn relaxation_time(omega: f64, c: &DiffusionConstants) -> Result<f64> {
    let gamma = gamma_param(c)?;
    let scale = 9.0 * c.diffusion / (4.0 * gamma * c.mu * c.mu);
    let k = gamma.sqrt() * c.mu.abs() / c.diffusion;
    let inner = 1.0 + (1.0 + 2.0 / 9.0 * k * (omega - c.omega0).abs()).sqrt();
    Ok(scale * inner * inner)
}

struct Rates {
    /// `a = lambda + mu^2 / 4D`.
    a: f64,
    /// `k = sqrt(a / D)`.
    k: f64,
    diffusion: f64,
}

impl Rates {
    fn new(c: &DiffusionConstants) -> Result<Self> {
        check_diffusion(c)?;
        if c.lambda < 0.0 {
            return Err(invalid("exit rate must be non-negative"));
        }
        let a = c.lambda + c.mu * c.mu / (4.0 * c.diffusion);
        if !(a > 0.0) {
            return Err(invalid("drift and exit rate cannot both vanish"));
        }
        Ok(Self {
            a,
            k: (a / c.diffusion).sqrt(),
            diffusion: c.diffusion,
        })
    }

    /// `nu / (4 sqrt(a D))`.
    fn prefactor(&self, nu: f64) -> f64 {
        nu / (4.0 * (self.a * self.diffusion).sqrt())
    }

    /// `ln[e^{-k r} erfc(p-) - e^{k r} erfc(p+)]` for a spread variance `var`.
    fn ln_bracket(&self, r: f64, var: f64) -> f64 {
        if var <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let spread = r / (2.0 * var).sqrt();
        let drift = (self.a * var / (2.0 * self.diffusion)).sqrt();
        let falling = -self.k * r + ln_erfc(spread - drift);
        let rising = self.k * r + ln_erfc(spread + drift);
        falling + ln_one_minus_exp(rising - falling)
    }
}

/// `ln(1 - e^x)` for `x <= 0`; `-inf` when the difference has vanished.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("time must be positive, got {t}")))
    }
}

fn check_diffusion(c: &DiffusionConstants) -> Result<()> {
    if c.diffusion > 0.0 && c.diffusion.is_finite() {
        Ok(())
    } else {
        Err(invalid("diffusion coefficient must be positive"))
    }
}
