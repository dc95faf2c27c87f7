// SPDX-License-Identifier: Apache-2.0

//! Hoeffding-style tail bounds for the x-projected flight, and their
//! Monte Carlo check.
//!
//! Both bounds take `s2 = E[(Z cos θ)²]` from the exact truncated law, never
//! from the sample being bounded.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{out_of_domain, Error, Result};
use crate::mobility::projected_path;
use crate::output::{Cell, Csv};
use crate::projection::projected_second_moment;
use crate::rng::par_trials;
use crate::stats::binomial_stderr;
use crate::stepdist::StepLaw;

/// Binomial standard errors of slack granted to the Monte Carlo side.
pub const SIGMA_SLACK: f64 = 3.0;

/// `P{|X_x(t)| ≥ r/√2} ≤ 2 exp(−r² / (8 t s2))`.
pub fn displacement_tail_bound(r: f64, t: f64, s2: f64) -> f64 {
    2.0 * (-r * r / (8.0 * t * s2)).exp()
}

/// `P{T_x(r/√2) ≤ k} ≤ 2k exp(−r² / (8 k s2))`, the union of the
/// displacement bound over the first `k` steps.
pub fn exit_time_tail_bound(r: f64, k: u64, s2: f64) -> f64 {
    let k = k as f64;
    2.0 * k * (-r * r / (8.0 * k * s2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoeffdingParams {
    pub r: f64,
    pub s2: f64,
    pub horizon: u64,
}

impl HoeffdingParams {
    pub fn new(r: f64, s2: f64, horizon: u64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(out_of_domain("r", r, "(0, inf)"));
        }
        if !(s2 > 0.0 && s2.is_finite()) {
            return Err(out_of_domain("s2", s2, "(0, inf)"));
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(Self { r, s2, horizon })
    }

    /// Parameters for a disc of radius `c_d √n` under `law`.
    pub fn for_law(law: &StepLaw, c_d: f64, horizon: u64) -> Result<Self> {
        Self::new(c_d * law.n().sqrt(), projected_second_moment(law), horizon)
    }

    pub fn displacement(&self, t: u64) -> f64 {
        displacement_tail_bound(self.r, t as f64, self.s2)
    }

    pub fn exit_time(&self, k: u64) -> f64 {
        exit_time_tail_bound(self.r, k, self.s2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub k: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundRow {
    fn new(k: u64, hits: u64, trials: u64, bound: f64) -> Self {
        let empirical = hits as f64 / trials as f64;
        let stderr = binomial_stderr(empirical, trials);
        // a bound of 1 or more holds trivially
        let pass = bound >= 1.0 || empirical <= bound + SIGMA_SLACK * stderr;
        Self {
            k,
            empirical,
            stderr,
            bound,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoeffdingReport {
    pub params: HoeffdingParams,
    pub trials: u64,
    pub displacement: Vec<BoundRow>,
    pub exit_time: Vec<BoundRow>,
}

impl HoeffdingReport {
    pub fn displacement_pass(&self) -> bool {
        self.displacement.iter().all(|r| r.pass)
    }

    pub fn exit_time_pass(&self) -> bool {
        self.exit_time.iter().all(|r| r.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.displacement_pass() && self.exit_time_pass()
    }

    /// CSV `k,empirical,bound` for the exit-time bound.
    pub fn exit_time_csv(&self) -> Csv {
        rows_csv(&self.exit_time)
    }

    /// CSV `k,empirical,bound` for the displacement bound.
    pub fn displacement_csv(&self) -> Csv {
        rows_csv(&self.displacement)
    }
}

fn rows_csv(rows: &[BoundRow]) -> Csv {
    let mut csv = Csv::new(&["k", "empirical", "bound"]);
    for r in rows {
        csv.row(&[Cell::Int(r.k), Cell::Num(r.empirical), Cell::Num(r.bound)]);
    }
    csv
}

/// Estimates `P{|X_x(k)| ≥ r/√2}` and `P{T_x(r/√2) ≤ k}` for
/// `k = 1..=horizon` from `trials` projected paths and compares them with
/// the bounds.
pub fn hoeffding_comparison(
    law: &StepLaw,
    c_d: f64,
    horizon: u64,
    trials: u64,
    seed: u64,
) -> Result<HoeffdingReport> {
    if trials == 0 {
        return Err(Error::EmptyBatch);
    }
    let params = HoeffdingParams::for_law(law, c_d, horizon)?;
    let level = params.r / SQRT_2;
    let h = horizon as usize;
    let paths = par_trials(trials, seed, |rng| {
        let path = projected_path(law, h, rng);
        let beyond: Vec<bool> = path.iter().map(|x| x.abs() >= level).collect();
        let first = beyond.iter().position(|&b| b);
        (beyond, first)
    });
    let mut displaced = vec![0u64; h];
    let mut exited = vec![0u64; h];
    for (beyond, first) in &paths {
        for (k, &b) in beyond.iter().enumerate() {
            displaced[k] += b as u64;
        }
        if let Some(f) = first {
            for e in &mut exited[*f..] {
                *e += 1;
            }
        }
    }
    let displacement = (1..=horizon)
        .map(|k| BoundRow::new(k, displaced[k as usize - 1], trials, params.displacement(k)))
        .collect();
    let exit_time = (1..=horizon)
        .map(|k| BoundRow::new(k, exited[k as usize - 1], trials, params.exit_time(k)))
        .collect();
    Ok(HoeffdingReport {
        params,
        trials,
        displacement,
        exit_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingRow {
    pub n: f64,
    pub t_tilde: f64,
    pub s2: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub c_d: f64,
    pub rows: Vec<VanishingRow>,
    /// First grid index from which the bound decreases to the end of the grid.
    pub decreasing_from: Option<usize>,
}

impl VanishingReport {
    /// Whether the tail of the grid (at least two points) is decreasing.
    pub fn eventually_decreasing(&self) -> bool {
        matches!(self.decreasing_from, Some(i) if i + 1 < self.rows.len())
    }

    pub fn last_bound(&self) -> Option<f64> {
        self.rows.last().map(|r| r.bound)
    }

    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&["n", "t_tilde", "s2", "bound"]);
        for r in &self.rows {
            csv.row(&[
                Cell::Num(r.n),
                Cell::Num(r.t_tilde),
                Cell::Num(r.s2),
                Cell::Num(r.bound),
            ]);
        }
        csv
    }
}

/// Evaluates `2 t̃ exp(−c_d² n / (8 t̃ s2))` with `t̃ = n^{α/2 − ε}` along
/// `n_grid`.
pub fn vanishing_check(
    alpha: f64,
    epsilon: f64,
    n_grid: &[f64],
    c_d: f64,
) -> Result<VanishingReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(out_of_domain("epsilon", epsilon, "(0, inf)"));
    }
    if !(c_d > 0.0 && c_d.is_finite()) {
        return Err(out_of_domain("c_d", c_d, "(0, inf)"));
    }
    let rows = n_grid
        .iter()
        .map(|&n| {
            let law = StepLaw::new(alpha, n)?;
            let s2 = projected_second_moment(&law);
            let t_tilde = n.powf(alpha / 2.0 - epsilon);
            let bound = 2.0 * t_tilde * (-c_d * c_d * n / (8.0 * t_tilde * s2)).exp();
            Ok(VanishingRow {
                n,
                t_tilde,
                s2,
                bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing_from = decreasing_suffix_start(&rows);
    Ok(VanishingReport {
        alpha,
        epsilon,
        c_d,
        rows,
        decreasing_from,
    })
}

// A pair of underflowed zeros counts as decreasing.
fn decreasing_suffix_start(rows: &[VanishingRow]) -> Option<usize> {
    if rows.is_empty() {
        return None;
    }
    let mut start = rows.len() - 1;
    while start > 0 {
        let (prev, next) = (rows[start - 1].bound, rows[start].bound);
        if next < prev || (next == 0.0 && prev == 0.0) {
            start -= 1;
        } else {
            break;
        }
    }
    Some(start)
}

/// `2^lo, 2^(lo+step), …, 2^hi`.
pub fn pow2_grid(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(|e| 2f64.powi(e)).collect()
}
