// SPDX-License-Identifier: Apache-2.0

//! Truncated Lévy step-size law.
//!
//! Step sizes live on `[1, √n]`. For `α ∈ (0, 2)` the law is the truncated
//! power law with CCDF `c(n)·(z^-α − n^-α/2)`; for `α = 2` it is a Gaussian
//! magnitude truncated to the same support, written with `erf`.

use std::f64::consts::{PI, SQRT_2};

use rand::distr::Open01;
use rand::Rng;

use crate::error::{out_of_domain, Error, Result};
use crate::quad;

/// Quadrature tolerance for all one-dimensional integrals of the law.
pub const QUAD_TOL: f64 = 1e-10;

/// Absolute tolerance of the numerical inverse CDF at `α = 2`.
pub const GAUSSIAN_INVERSE_TOL: f64 = 1e-12;

/// Past this many σ above the lower support edge the Gaussian density is
/// below `exp(-800)` and contributes nothing representable.
const GAUSSIAN_SPAN_SIGMAS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLaw {
    alpha: f64,
    n: f64,
    sigma: f64,
    sqrt_n: f64,
    norm: f64,
    // n^(-α/2) for the power law, erfc(√n/(√2σ)) for the Gaussian.
    upper_tail: f64,
}

impl StepLaw {
    pub const DEFAULT_SIGMA: f64 = 1.0;

    pub fn new(alpha: f64, n: f64) -> Result<Self> {
        Self::with_sigma(alpha, n, Self::DEFAULT_SIGMA)
    }

    pub fn with_sigma(alpha: f64, n: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(n.is_finite() && n > 1.0) {
            return Err(Error::InvalidNetworkSize(n));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        let sqrt_n = n.sqrt();
        let (norm, upper_tail) = if alpha == 2.0 {
            let upper = libm::erfc(sqrt_n / (SQRT_2 * sigma));
            let lower = libm::erfc(1.0 / (SQRT_2 * sigma));
            (1.0 / (lower - upper), upper)
        } else {
            let log_tail = -0.5 * alpha * n.ln();
            (-1.0 / log_tail.exp_m1(), log_tail.exp())
        };
        Ok(Self {
            alpha,
            n,
            sigma,
            sqrt_n,
            norm,
            upper_tail,
        })
    }

    /// Multiplies the normalization constant by `factor`, producing a law
    /// whose CCDF no longer starts at 1. Only used to check that the
    /// verification suite notices a broken law.
    #[doc(hidden)]
    pub fn with_faulty_normalization(mut self, factor: f64) -> Self {
        self.norm *= factor;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Upper support edge `√n`.
    pub fn upper(&self) -> f64 {
        self.sqrt_n
    }

    pub fn is_gaussian(&self) -> bool {
        self.alpha == 2.0
    }

    /// The normalization constant `c(n)`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn ccdf(&self, z: f64) -> f64 {
        if z < 1.0 {
            return 1.0;
        }
        if z >= self.sqrt_n {
            return 0.0;
        }
        if self.is_gaussian() {
            self.norm * (libm::erfc(z / (SQRT_2 * self.sigma)) - self.upper_tail)
        } else {
            self.norm * (z.powf(-self.alpha) - self.upper_tail)
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        1.0 - self.ccdf(z)
    }

    /// Density on `[1, √n]`, zero elsewhere.
    pub fn density(&self, z: f64) -> f64 {
        if !(1.0..=self.sqrt_n).contains(&z) {
            return 0.0;
        }
        if self.is_gaussian() {
            let s = self.sigma;
            self.norm * (2.0 / PI).sqrt() / s * (-z * z / (2.0 * s * s)).exp()
        } else {
            self.norm * self.alpha * z.powf(-self.alpha - 1.0)
        }
    }

    /// Inverse-CDF map: returns `z` with `P{Z > z} = 1 − u`.
    ///
    /// `u` must lie in `(0, 1)`. The result is non-decreasing in `u` and
    /// always inside `[1, √n]`.
    pub fn sample_from_uniform(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u < 1.0, "u = {u} outside (0, 1)");
        let z = if self.is_gaussian() {
            self.gaussian_inverse(1.0 - u)
        } else {
            ((1.0 - u) / self.norm + self.upper_tail).powf(-1.0 / self.alpha)
        };
        z.clamp(1.0, self.sqrt_n)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.sample_from_uniform(u)
    }

    // Solves erfc(x) = target for x = z/(√2σ) on the support, starting
    // from a closed-form guess and polishing with bracketed Halley steps.
    // With f = erfc, f''/f' = -2x, so the Halley step is d / (1 + x d) for
    // the Newton correction d; its error is O(x² d³).
    fn gaussian_inverse(&self, survival: f64) -> f64 {
        let scale = SQRT_2 * self.sigma;
        let target = survival / self.norm + self.upper_tail;
        let mut lo = 1.0 / scale;
        let mut hi = self.sqrt_n.min(1.0 + GAUSSIAN_SPAN_SIGMAS * self.sigma) / scale;
        let tol = GAUSSIAN_INVERSE_TOL / scale;
        let mut x = erfc_inv_guess(target);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        for _ in 0..200 {
            let h = libm::erfc(x) - target;
            if h > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = -2.0 / PI.sqrt() * (-x * x).exp();
            let d = h / slope;
            let mut next = x - d / (1.0 + x * d);
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let moved = (next - x).abs();
            x = next;
            let cubic_error = x * x * moved * moved * moved;
            if moved < tol || cubic_error < 1e-3 * tol || hi - lo < tol {
                break;
            }
        }
        x * scale
    }

    /// `E[Z | Z ≤ b]` in closed form, for `b ∈ (1, √n]`.
    pub fn conditional_mean_below(&self, b: f64) -> Result<f64> {
        if !(b > 1.0 && b <= self.sqrt_n * (1.0 + 1e-12)) {
            return Err(out_of_domain("b", b, format!("(1, {}]", self.sqrt_n)));
        }
        let a = self.alpha;
        let log_b = b.ln();
        let mass = -(-a * log_b).exp_m1(); // 1 - b^-α
        let value = if self.is_gaussian() {
            let s = self.sigma;
            let num = (-1.0 / (2.0 * s * s)).exp() - (-b * b / (2.0 * s * s)).exp();
            let den = libm::erfc(1.0 / (SQRT_2 * s)) - libm::erfc(b / (SQRT_2 * s));
            SQRT_2 * s / PI.sqrt() * num / den
        } else if a == 1.0 {
            log_b / mass
        } else {
            // The α < 1 and 1 < α < 2 forms are the same rational function;
            // expm1 keeps it accurate as α approaches 1.
            a * ((1.0 - a) * log_b).exp_m1() / (1.0 - a) / mass
        };
        Ok(value)
    }

    /// `E[Z²]` under the truncated law.
    pub fn second_moment(&self) -> f64 {
        if self.is_gaussian() {
            let hi = self.sqrt_n.min(1.0 + GAUSSIAN_SPAN_SIGMAS * self.sigma);
            quad::simpson(|z| z * z * self.density(z), 1.0, hi, QUAD_TOL)
        } else {
            let a = self.alpha;
            // (n^((2-α)/2) - 1) / (2 - α), stable as α → 2
            let growth = (0.5 * (2.0 - a) * self.n.ln()).exp_m1() / (2.0 - a);
            self.norm * a * growth
        }
    }

    /// `∫ density` over the support, by quadrature.
    pub fn total_mass(&self) -> f64 {
        let hi = if self.is_gaussian() {
            self.sqrt_n.min(1.0 + GAUSSIAN_SPAN_SIGMAS * self.sigma)
        } else {
            self.sqrt_n
        };
        // integrate in log z so the power-law spike at 1 is tame
        quad::simpson(
            |s| {
                let z = s.exp();
                z * self.density(z)
            },
            0.0,
            hi.ln(),
            QUAD_TOL,
        )
    }
}

// Rough inverse of erfc: erfc_inv(y) = erf_inv(1 - y), with the logarithm
// computed from y directly so small y keeps its precision. Polynomial
// coefficients after M. Giles, "Approximating the erfinv function".
fn erfc_inv_guess(y: f64) -> f64 {
    let w = -(y * (2.0 - y)).ln();
    let p = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * (1.0 - y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const HUGE_N: f64 = 1e300;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            StepLaw::new(0.0, 100.0),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            StepLaw::new(2.5, 100.0),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            StepLaw::new(1.0, 1.0),
            Err(Error::InvalidNetworkSize(_))
        ));
        assert!(matches!(
            StepLaw::with_sigma(2.0, 100.0, 0.0),
            Err(Error::InvalidSigma(_))
        ));
    }

    #[test]
    fn normalization_examples() {
        let law = StepLaw::new(1.0, 1e4).unwrap();
        assert!((law.normalization() - 100.0 / 99.0).abs() < 1e-14);
        let law = StepLaw::new(0.5, HUGE_N).unwrap();
        assert_eq!(law.normalization(), 1.0);
        // 1 / (erf(70.71) - erf(0.7071)) = 1 / erfc(1/√2)
        let law = StepLaw::new(2.0, 1e4).unwrap();
        let reference = 1.0 / (1.0 - 0.682_689_492_137_085_9);
        assert!((law.normalization() - reference).abs() < 1e-12);
    }

    #[test]
    fn normalization_exceeds_one_and_tends_to_one() {
        let mut prev = f64::INFINITY;
        for e in [2, 4, 8, 16, 32] {
            let c = StepLaw::new(0.8, 10f64.powi(e)).unwrap().normalization();
            assert!(c > 1.0 && c < prev);
            prev = c;
        }
        assert!(prev - 1.0 < 1e-12);
    }

    #[test]
    fn ccdf_examples() {
        let law = StepLaw::new(1.0, 1e4).unwrap();
        assert_eq!(law.ccdf(1.0), 1.0);
        assert!((law.ccdf(10.0) - 100.0 / 99.0 * 0.09).abs() < 1e-15);
        assert_eq!(law.ccdf(100.0), 0.0);
        assert_eq!(law.ccdf(0.5), 1.0);
        for a in [0.3, 1.0, 1.7, 2.0] {
            let law = StepLaw::new(a, 2f64.powi(14)).unwrap();
            assert!((law.ccdf(1.0) - 1.0).abs() < 1e-14, "alpha {a}");
            assert_eq!(law.ccdf(law.upper()), 0.0);
        }
    }

    #[test]
    fn ccdf_monotone_on_grid() {
        for a in [0.2, 0.6, 1.0, 1.5, 1.9, 2.0] {
            for n in [1e2, 2f64.powi(14), 1e8] {
                let law = StepLaw::new(a, n).unwrap();
                let mut prev = law.ccdf(1.0);
                assert!((prev - 1.0).abs() < 1e-14);
                for k in 1..=1000 {
                    let z = 1.0 + (law.upper() - 1.0) * k as f64 / 1000.0;
                    let v = law.ccdf(z);
                    assert!(v <= prev, "alpha {a} n {n} z {z}");
                    prev = v;
                }
                assert_eq!(prev, 0.0);
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        for a in [0.3, 1.0, 1.5, 2.0] {
            let law = StepLaw::new(a, 2f64.powi(16)).unwrap();
            assert!((law.total_mass() - 1.0).abs() < 1e-8, "alpha {a}");
        }
        let law = StepLaw::with_sigma(2.0, 2f64.powi(16), 7.0).unwrap();
        assert!((law.total_mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sample_median_in_the_limit() {
        let law = StepLaw::new(1.0, HUGE_N).unwrap();
        assert!((law.sample_from_uniform(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_inverse_round_trip() {
        for sigma in [0.3, 1.0, 5.0] {
            let law = StepLaw::with_sigma(2.0, 2f64.powi(18), sigma).unwrap();
            for k in 1..1000 {
                let u = k as f64 / 1000.0;
                let z = law.sample_from_uniform(u);
                // |dz| ≤ 1e-12 means |dccdf| ≤ density·1e-12
                let slack = law.density(z) * GAUSSIAN_INVERSE_TOL + 1e-13;
                assert!(
                    (law.ccdf(z) - (1.0 - u)).abs() <= slack,
                    "sigma {sigma} u {u} z {z}"
                );
            }
        }
    }

    #[test]
    fn gaussian_inverse_agrees_with_bisection() {
        let law = StepLaw::new(2.0, 1e4).unwrap();
        for u in [1e-9, 0.01, 0.3, 0.77, 0.999_999] {
            let (mut lo, mut hi) = (1.0, law.upper());
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if law.ccdf(mid) > 1.0 - u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((law.sample_from_uniform(u) - lo).abs() < 1e-12, "u {u}");
        }
    }

    proptest! {
        #[test]
        fn power_law_round_trip(a in 0.05f64..1.999, log_n in 1.0f64..40.0, u in 1e-9f64..0.999_999_999) {
            let law = StepLaw::new(a, log_n.exp()).unwrap();
            let z = law.sample_from_uniform(u);
            prop_assert!((1.0..=law.upper()).contains(&z));
            prop_assert!((law.ccdf(z) - (1.0 - u)).abs() < 1e-9);
        }

        #[test]
        fn sample_is_monotone(a in 0.05f64..=2.0, u in 1e-6f64..0.99, du in 1e-9f64..0.009) {
            let law = StepLaw::new(a, 2f64.powi(12)).unwrap();
            prop_assert!(law.sample_from_uniform(u) <= law.sample_from_uniform(u + du));
        }
    }

    #[test]
    fn empirical_ccdf_matches_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in [0.6, 1.5, 2.0] {
            let law = StepLaw::new(a, 1e4).unwrap();
            let mut xs: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let d = crate::stats::ks_distance_ccdf(&xs, |z| law.ccdf(z), 1.0);
            assert!(d < 0.005, "alpha {a}: KS {d}");
        }
    }

    #[test]
    fn conditional_mean_examples() {
        let law = StepLaw::new(1.0, 1e4).unwrap();
        let v = law.conditional_mean_below(100.0).unwrap();
        assert!((v - 100f64.ln() / 0.99).abs() < 1e-12);
        assert!((v - 4.6517).abs() < 1e-4);

        let law = StepLaw::new(1.5, HUGE_N).unwrap();
        let v = law.conditional_mean_below(1e100).unwrap();
        assert!((v - 3.0).abs() < 1e-12);

        assert!(law.conditional_mean_below(1.0).is_err());
        let law = StepLaw::new(1.5, 1e4).unwrap();
        assert!(law.conditional_mean_below(101.0).is_err());
    }

    #[test]
    fn conditional_mean_is_continuous_through_alpha_one() {
        let b = 50.0;
        let at_one = StepLaw::new(1.0, 1e4)
            .unwrap()
            .conditional_mean_below(b)
            .unwrap();
        for a in [1.0 - 1e-7, 1.0 + 1e-7] {
            let v = StepLaw::new(a, 1e4)
                .unwrap()
                .conditional_mean_below(b)
                .unwrap();
            assert!((v - at_one).abs() < 1e-5);
        }
    }

    #[test]
    fn conditional_mean_matches_quadrature() {
        // independent route: ∫ z f(z) dz / ∫ f(z) dz on [1, b]
        for a in [0.4, 1.0, 1.5, 2.0] {
            let law = StepLaw::new(a, 2f64.powi(14)).unwrap();
            let b = 64.0;
            let hi = if a == 2.0 { 41.0 } else { b };
            let num = quad::simpson(|z| z * law.density(z), 1.0, hi, 1e-12);
            let den = quad::simpson(|z| law.density(z), 1.0, hi, 1e-12);
            let v = law.conditional_mean_below(b).unwrap();
            assert!(
                (v - num / den).abs() < 1e-7 * v,
                "alpha {a}: {v} vs {}",
                num / den
            );
        }
    }

    #[test]
    fn conditional_mean_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for a in [0.5, 1.0, 1.5, 2.0] {
            let law = StepLaw::new(a, 2f64.powi(14)).unwrap();
            let b = 0.5 * law.upper();
            let (mut sum, mut count) = (0.0, 0u64);
            for _ in 0..1_000_000 {
                let z = law.sample(&mut rng);
                if z <= b {
                    sum += z;
                    count += 1;
                }
            }
            let mc = sum / count as f64;
            let v = law.conditional_mean_below(b).unwrap();
            assert!((mc - v).abs() < 0.01 * v, "alpha {a}: {mc} vs {v}");
        }
    }

    #[test]
    fn second_moment_examples() {
        let law = StepLaw::new(1.0, 1e4).unwrap();
        assert!((law.second_moment() - 100.0).abs() < 1e-10);
        let mut prev = 0.0;
        for e in 4..20 {
            let m = StepLaw::new(1.3, 2f64.powi(e)).unwrap().second_moment();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn gaussian_second_moment_matches_truncated_normal_formula() {
        // E[X^2] for N(0, σ²) restricted to [a, b]:
        // σ²(1 + (a'φ(a') - b'φ(b')) / (Φ(b') - Φ(a'))), primes = /σ
        for sigma in [0.5, 1.0, 3.0] {
            let law = StepLaw::with_sigma(2.0, 1e4, sigma).unwrap();
            let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            let (a, b) = (1.0 / sigma, 100.0 / sigma);
            let mass = 0.5 * (libm::erfc(a / SQRT_2) - libm::erfc(b / SQRT_2));
            let exact = sigma * sigma * (1.0 + (a * phi(a) - b * phi(b)) / mass);
            assert!((law.second_moment() - exact).abs() < 1e-8, "sigma {sigma}");
        }
    }

    #[test]
    fn second_moment_matches_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (a, n) in [(1.0, 1e4), (1.5, 2f64.powi(14)), (2.0, 2f64.powi(14))] {
            let law = StepLaw::new(a, n).unwrap();
            let m = (0..1_000_000)
                .map(|_| law.sample(&mut rng).powi(2))
                .sum::<f64>()
                / 1e6;
            let exact = law.second_moment();
            assert!(
                (m - exact).abs() < 0.02 * exact,
                "alpha {a}: {m} vs {exact}"
            );
        }
    }

    #[test]
    fn second_moment_scaling_exponent() {
        for a in [0.6, 1.0, 1.5] {
            let (xs, ys): (Vec<f64>, Vec<f64>) = (10..=20)
                .map(|e| {
                    let n = 2f64.powi(e);
                    (n.ln(), StepLaw::new(a, n).unwrap().second_moment().ln())
                })
                .unzip();
            let fit = crate::stats::ols(&xs, &ys);
            assert!(
                (fit.slope - (1.0 - a / 2.0)).abs() < 0.05,
                "alpha {a}: {}",
                fit.slope
            );
        }
    }
}
