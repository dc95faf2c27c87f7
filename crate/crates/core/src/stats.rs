// SPDX-License-Identifier: Apache-2.0

//! Small statistics toolbox: DKW bands, Kolmogorov-Smirnov distances,
//! sample moments and ordinary least squares.

use serde::{Deserialize, Serialize};

/// Half-width of the two-sided Dvoretzky-Kiefer-Wolfowitz band at confidence `1 - delta`.
pub fn dkw_epsilon(samples: u64, delta: f64) -> f64 {
    assert!(samples > 0, "DKW band needs at least one sample");
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Binomial standard error of a proportion.
pub fn binomial_stderr(p: f64, samples: u64) -> f64 {
    (p * (1.0 - p) / samples as f64).max(0.0).sqrt()
}

/// Sup distance between the empirical CCDF of `sorted` and `ccdf`, taken over
/// points at or above `lower`.
///
/// `sorted` must be ascending.
pub fn ks_distance_ccdf<F: Fn(f64) -> f64>(sorted: &[f64], ccdf: F, lower: f64) -> f64 {
    let m = sorted.len() as f64;
    let start = sorted.partition_point(|&x| x < lower);
    // at `lower` itself
    let mut d: f64 = ((m - start as f64) / m - ccdf(lower)).abs();
    let mut i = start;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let model = ccdf(x);
        let before = (m - i as f64) / m;
        let after = (m - j as f64) / m;
        d = d.max((before - model).abs()).max((after - model).abs());
        i = j;
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic. Both inputs must be ascending.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "OLS needs two points");
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_stderr = if x.len() > 2 {
        (sse / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    }
}
