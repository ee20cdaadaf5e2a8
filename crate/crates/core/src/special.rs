//! Error function and the log-complementary form used by the closed-form densities.

use std::f64::consts::PI;

/// The error function. Odd symmetry holds exactly.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        -libm::erf(-x)
    } else {
        libm::erf(x)
    }
}

/// Complementary error function `1 - erf(x)`, accurate in the far right tail.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Switch-over point from direct evaluation to the continued fraction.
const LN_ERFC_ASYMPTOTIC: f64 = 5.0;

/// `ln(erfc(x))` without underflow for large positive `x`.
///
/// Beyond x = 5 the value is `-x^2 + ln(erfcx(x))` with the scaled function from
/// its continued fraction, so products like `exp(c) * erfc(x)` can be formed in
/// log space for arguments where `erfc` itself underflows.
pub fn ln_erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < LN_ERFC_ASYMPTOTIC {
        erfc(x).ln()
    } else if x.is_infinite() {
        f64::NEG_INFINITY
    } else {
        -x * x + erfcx_continued_fraction(x).ln()
    }
}

/// Scaled complementary error function `exp(x^2) erfc(x)` for x >= 5.
///
/// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfcx_continued_fraction(x: f64) -> f64 {
    debug_assert!(x >= LN_ERFC_ASYMPTOTIC);
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + 0.5 * k as f64 / tail;
    }
    1.0 / (PI.sqrt() * tail)
}
