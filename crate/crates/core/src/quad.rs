// SPDX-License-Identifier: Apache-2.0

//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 48;
const MIN_DEPTH: u32 = 4;

/// Integrates `f` over `[a, b]` to an absolute tolerance `tol`.
///
/// Uses the Richardson-corrected Simpson rule with interval bisection.
/// A minimum subdivision depth guards against peaked integrands that happen
/// to vanish at the first five nodes.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(&f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Integrates over consecutive breakpoints, splitting the tolerance evenly.
///
/// Useful when the integrand has kinks at known locations.
pub fn simpson_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> f64 {
    if breaks.len() < 2 {
        return 0.0;
    }
    let pieces = (breaks.len() - 1) as f64;
    breaks
        .windows(2)
        .map(|w| simpson(&f, w[0], w[1], tol / pieces))
        .sum()
}
