//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` to an absolute tolerance `tol`.
///
/// Kinks and cusps should be placed on interval boundaries by the caller
/// (see [`integrate_pieces`]); the recursion otherwise spends its depth budget there.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    // Seed with a fixed split so that narrow features near the midpoint are not missed.
    simpson(&f, a, fa, m, fm, tol * 0.5, MAX_DEPTH) + simpson(&f, m, fm, b, fb, tol * 0.5, MAX_DEPTH)
}

/// Integrates over consecutive breakpoints, splitting the tolerance evenly.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> f64 {
    if breaks.len() < 2 {
        return 0.0;
    }
    let share = tol / (breaks.len() - 1) as f64;
    breaks
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], share))
        .sum()
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adapt(f, a, fa, m, fm, b, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
        + adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
}
