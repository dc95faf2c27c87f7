// SPDX-License-Identifier: Apache-2.0

//! Eigenfunction series for a particle trapped in `[0, 2r]`.
//!
//! A particle starts at the centre `x = r` of an interval with absorbing
//! ends. With sine eigenfunctions `ψ_i(x) = √(1/r) sin(iπx/2r)` and
//! eigenvalues `λ_i = −(iπ/2r)^α` the occupation density is
//! `P(x,t) = Σ ψ_i(r) ψ_i(x) exp(λ_i F t)`, its integral the survival
//! probability `S(t) = Σ η_i exp(−ρ_i t / r^α)` with
//! `η_i = 2(1 − cos iπ) sin(iπ/2) / (iπ)` and `ρ_i = F (iπ/2)^α`, and the
//! exit-time CDF is `1 − S(t)`.
//!
//! For `α = 2` this is the classical Brownian result. For `α < 2` the sine
//! basis is only an approximation to the Riesz-Feller problem, so it is
//! used for the order of the dominant decay rate, not for exact values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_domain, Error, Result};
use crate::output::{Cell, Csv};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_DIFFUSION: f64 = 1.0;

/// Stop after this many consecutive negligible terms.
const QUIET_TERMS: usize = 20;
/// Hard limit on summed (odd) terms; hit only for tiny `t` at small `α`.
const MAX_TERMS: u64 = 20_000_000;

/// `η_i = (2(1 − cos iπ) / iπ) · sin(iπ/2)`.
pub fn eta(i: u64) -> f64 {
    assert!(i >= 1, "eta is indexed from 1");
    match i % 4 {
        1 => 4.0 / (i as f64 * PI),
        3 => -4.0 / (i as f64 * PI),
        _ => 0.0,
    }
}

/// `Σ_{i ≤ terms} η_i`.
pub fn eta_partial_sum(terms: u64) -> f64 {
    let mut sum = 0.0;
    let mut i = 1;
    while i <= terms {
        sum += eta(i);
        i += 2;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSeries {
    pub alpha: f64,
    /// Half-width of the trapping interval.
    pub r: f64,
    /// Generalized diffusion coefficient `F`.
    pub diffusion: f64,
    pub tol: f64,
}

/// A truncated series value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Number of nonzero terms summed.
    pub terms: u64,
    /// False when the term limit stopped the sum early.
    pub converged: bool,
}

impl SurvivalSeries {
    pub fn new(alpha: f64, r: f64) -> Result<Self> {
        Self::with_diffusion(alpha, r, DEFAULT_DIFFUSION)
    }

    pub fn with_diffusion(alpha: f64, r: f64, diffusion: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(out_of_domain("r", r, "(0, inf)"));
        }
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(out_of_domain("F", diffusion, "(0, inf)"));
        }
        Ok(Self {
            alpha,
            r,
            diffusion,
            tol: DEFAULT_TOL,
        })
    }

    /// `ρ_i = F (iπ/2)^α`.
    pub fn rho(&self, i: u64) -> f64 {
        self.diffusion * (i as f64 * PI / 2.0).powf(self.alpha)
    }

    /// `λ_i = −(iπ / 2r)^α`.
    pub fn eigenvalue(&self, i: u64) -> f64 {
        -(i as f64 * PI / (2.0 * self.r)).powf(self.alpha)
    }

    /// `ψ_i(x) = √(1/r) sin(iπx / 2r)`.
    pub fn eigenfunction(&self, i: u64, x: f64) -> f64 {
        (1.0 / self.r).sqrt() * (i as f64 * PI * x / (2.0 * self.r)).sin()
    }

    /// Temporal decay rate `−λ_i F = ρ_i / r^α` of mode `i`.
    pub fn decay_rate(&self, i: u64) -> f64 {
        self.rho(i) / self.r.powf(self.alpha)
    }

    /// Raw survival probability, possibly slightly outside `[0, 1]` for
    /// tiny `t` where truncation bites. `S(0) = 1` by definition.
    pub fn survival(&self, t: f64) -> Result<f64> {
        Ok(self.survival_series(t)?.value)
    }

    pub fn survival_clamped(&self, t: f64) -> Result<f64> {
        Ok(self.survival(t)?.clamp(0.0, 1.0))
    }

    pub fn survival_series(&self, t: f64) -> Result<SeriesValue> {
        if t.is_nan() || t < 0.0 {
            return Err(out_of_domain("t", t, "[0, inf)"));
        }
        if t == 0.0 {
            return Ok(SeriesValue {
                value: 1.0,
                terms: 0,
                converged: true,
            });
        }
        let scale = t / self.r.powf(self.alpha);
        Ok(self.sum_odd(|i| {
            let decay = (-self.rho(i) * scale).exp();
            (eta(i) * decay, 4.0 / (i as f64 * PI) * decay)
        }))
    }

    /// `P{T_x(r) ≤ t} = 1 − S(t)`.
    pub fn fet_cdf(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival(t)?)
    }

    /// Occupation density `P(x, t)` for `x ∈ [0, 2r]`, `t > 0`.
    pub fn occupation(&self, x: f64, t: f64) -> Result<f64> {
        if !(0.0..=2.0 * self.r).contains(&x) {
            return Err(out_of_domain("x", x, format!("[0, {}]", 2.0 * self.r)));
        }
        if t.is_nan() || t <= 0.0 {
            return Err(out_of_domain("t", t, "(0, inf)"));
        }
        if x == 0.0 || x == 2.0 * self.r {
            return Ok(0.0);
        }
        let scale = self.diffusion * t;
        let inv_r = 1.0 / self.r;
        // h_i = ψ_i(r) = √(1/r) sin(iπ/2), zero for even i
        Ok(self
            .sum_odd(|i| {
                let decay = (self.eigenvalue(i) * scale).exp();
                let h = if i % 4 == 1 { inv_r } else { -inv_r };
                (
                    h * (i as f64 * PI * x / (2.0 * self.r)).sin() * decay,
                    inv_r * decay,
                )
            })
            .value)
    }

    // Sums term(i) over odd i. `term` returns (value, envelope); summation
    // stops once QUIET_TERMS consecutive envelopes fall below
    // tol · max(|partial sum|, 1).
    fn sum_odd<F: Fn(u64) -> (f64, f64)>(&self, term: F) -> SeriesValue {
        let mut sum = 0.0;
        let mut quiet = 0;
        let mut i = 1u64;
        let mut terms = 0u64;
        while terms < MAX_TERMS {
            let (v, env) = term(i);
            sum += v;
            terms += 1;
            if env < self.tol * sum.abs().max(1.0) {
                quiet += 1;
                if quiet >= QUIET_TERMS {
                    return SeriesValue {
                        value: sum,
                        terms,
                        converged: true,
                    };
                }
            } else {
                quiet = 0;
            }
            i += 2;
        }
        SeriesValue {
            value: sum,
            terms,
            converged: false,
        }
    }

    /// CSV table `t,survival,fet_cdf` with raw series values.
    pub fn table(&self, times: &[f64]) -> Result<Csv> {
        let mut csv = Csv::new(&["t", "survival", "fet_cdf"]);
        for &t in times {
            let s = self.survival(t)?;
            csv.row(&[Cell::Num(t), Cell::Num(s), Cell::Num(1.0 - s)]);
        }
        Ok(csv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    #[test]
    fn eta_examples() {
        assert!((eta(1) - 4.0 / PI).abs() < 1e-15);
        assert!((eta(1) - 1.27324).abs() < 1e-5);
        assert_eq!(eta(2), 0.0);
        assert!((eta(3) + 4.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((eta(3) + 0.42441).abs() < 1e-5);
        // closed form agrees with the trigonometric definition
        for i in 1..50u64 {
            let x = i as f64 * PI;
            let direct = 2.0 * (1.0 - x.cos()) / x * (x / 2.0).sin();
            assert!((eta(i) - direct).abs() < 1e-12, "i = {i}");
        }
    }

    #[test]
    fn eta_partial_sums_converge_to_one() {
        let s = eta_partial_sum(1_000_000);
        assert!((s - 1.0).abs() < 1.3e-6, "{s}");
        assert!((eta_partial_sum(1000) - 1.0).abs() <= 4.0 / (PI * 1000.0));
    }

    #[test]
    fn boundary_values_in_time() {
        let s = SurvivalSeries::new(1.3, 5.0).unwrap();
        assert_eq!(s.survival(0.0).unwrap(), 1.0);
        assert_eq!(s.fet_cdf(0.0).unwrap(), 0.0);
        assert!(s.survival(1e6).unwrap().abs() < 1e-12);
        assert!(s.survival(-1.0).is_err());
    }

    #[test]
    fn rho_and_eigenvalues_increase() {
        let s = SurvivalSeries::new(0.7, 3.0).unwrap();
        for i in 1..100 {
            assert!(s.rho(i + 1) > s.rho(i));
            assert!(s.eigenvalue(i + 1).abs() > s.eigenvalue(i).abs());
        }
    }

    #[test]
    fn leading_rate_scales_as_r_to_minus_alpha() {
        for a in [0.5, 1.0, 1.5, 2.0] {
            for r in [1.0, 7.0, 130.0] {
                let s = SurvivalSeries::with_diffusion(a, r, 1.0).unwrap();
                let lhs = s.eigenvalue(1).abs() * r.powf(a);
                assert!((lhs - (PI / 2.0).powf(a)).abs() < 1e-12 * lhs);
                assert!((s.decay_rate(1) * r.powf(a) - s.rho(1)).abs() < 1e-12 * s.rho(1));
            }
        }
    }

    #[test]
    fn survival_strictly_decreasing() {
        for a in [0.4, 1.0, 1.5, 2.0] {
            // from τ = 0.05, where 1 − S is still resolvable, to deep in the tail
            let s = SurvivalSeries::new(a, 2.0).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..100 {
                let t = 2f64.powf(a)
                    * 10f64.powf(0.05f64.log10() + (2.0 - 0.05f64.log10()) * k as f64 / 99.0);
                let v = s.survival(t).unwrap();
                assert!(v < prev, "alpha {a} t {t}");
                prev = v;
            }
        }
    }

    #[test]
    fn cdf_monotone_on_grid() {
        let s = SurvivalSeries::new(1.5, 1.0).unwrap();
        let mut prev = 0.0;
        for k in 0..=1000 {
            let c = s.fet_cdf(k as f64 * 0.005).unwrap();
            assert!(c >= prev - 1e-12);
            prev = c;
        }
    }

    #[test]
    fn dominant_decay_rate_emerges() {
        let s = SurvivalSeries::with_diffusion(1.2, 4.0, 0.8).unwrap();
        let t = 40.0 / s.decay_rate(1);
        let h = 1e-3 * t;
        let slope =
            -(s.survival(t + h).unwrap().ln() - s.survival(t - h).unwrap().ln()) / (2.0 * h);
        assert!((slope - s.decay_rate(1)).abs() < 1e-8 * s.decay_rate(1));
    }

    // Brownian survival via the method of images; converges fast for small
    // times and shares nothing with the eigen-series.
    fn brownian_survival_images(tau: f64) -> f64 {
        // P(max |W| < 1 up to time 2τ) for unit-rate W with variance 2τ
        let s = (2.0 * tau).sqrt();
        let phi = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
        (-50i32..=50)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * (phi((2 * k + 1) as f64 / s) - phi((2 * k - 1) as f64 / s))
            })
            .sum()
    }

    #[test]
    fn gaussian_series_matches_image_solution() {
        let s = SurvivalSeries::new(2.0, 1.0).unwrap();
        for tau in [0.01, 0.05, 0.25, 1.0, 3.0] {
            let a = s.survival(tau).unwrap();
            let b = brownian_survival_images(tau);
            assert!((a - b).abs() < 1e-11, "tau {tau}: {a} vs {b}");
        }
        // frozen reference at τ = 0.25
        let v = s.survival(0.25).unwrap();
        assert!((v - brownian_survival_images(0.25)).abs() < 1e-12);
    }

    #[test]
    fn rescaling_r_and_t_together_is_invariant() {
        let a = SurvivalSeries::with_diffusion(2.0, 1.0, 1.0).unwrap();
        let b = SurvivalSeries::with_diffusion(2.0, 10.0, 3.0).unwrap();
        // τ = F t / r²
        let va = a.survival(0.3).unwrap();
        let vb = b.survival(0.3 * 100.0 / 3.0).unwrap();
        assert!((va - vb).abs() < 1e-12);
    }

    #[test]
    fn occupation_boundaries_and_symmetry() {
        let s = SurvivalSeries::new(1.5, 2.0).unwrap();
        assert_eq!(s.occupation(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(s.occupation(4.0, 0.3).unwrap(), 0.0);
        for d in [0.1, 0.7, 1.9] {
            let l = s.occupation(2.0 - d, 0.3).unwrap();
            let r = s.occupation(2.0 + d, 0.3).unwrap();
            assert!((l - r).abs() < 1e-12);
        }
        assert!(s.occupation(-0.1, 1.0).is_err());
        assert!(s.occupation(1.0, 0.0).is_err());
    }

    #[test]
    fn occupation_integrates_to_survival() {
        for a in [0.8, 1.5, 2.0] {
            let s = SurvivalSeries::new(a, 1.0).unwrap();
            for t in [0.2, 1.0] {
                let mass = quad::simpson(|x| s.occupation(x, t).unwrap(), 0.0, 2.0, 1e-10);
                let surv = s.survival(t).unwrap();
                assert!(
                    (mass - surv).abs() < 1e-7,
                    "alpha {a} t {t}: {mass} vs {surv}"
                );
            }
        }
    }

    #[test]
    fn table_has_header_and_rows() {
        let s = SurvivalSeries::new(2.0, 1.0).unwrap();
        let csv = s.table(&[0.0, 0.5]).unwrap();
        let lines: Vec<&str> = csv.as_str().lines().collect();
        assert_eq!(lines[0], "t,survival,fet_cdf");
        assert_eq!(lines[1], "0,1,0");
        assert_eq!(lines.len(), 3);
    }
}
