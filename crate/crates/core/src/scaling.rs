// SPDX-License-Identifier: Apache-2.0

//! Exit-time batches across a grid of network sizes, reduced to fitted
//! scaling exponents.
//!
//! Fits regress `ln statistic` on `ln n`. The median is the default
//! statistic because flight means at `α < 2` are dominated by rare long
//! excursions; means are still tabulated.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_domain, Error, Result};
use crate::fet_mc::{self, BatchConfig, EmpiricalFet};
use crate::mobility::{self, ModelKind, DEFAULT_STEP_CAP};
use crate::output::{Cell, Csv};
use crate::rng::{derive_seed, par_trials};
use crate::stats::{self, LinearFit};
use crate::stepdist::StepLaw;

/// Allowed distance between fitted and theoretical slope.
pub const SLOPE_TOLERANCE: f64 = 0.08;
/// Minimum R² before a slope is compared with theory.
pub const MIN_R_SQUARED: f64 = 0.99;
/// Confidence parameter of the DKW bands in [`sandwich_report`].
pub const SANDWICH_DELTA: f64 = 0.01;

pub const DEFAULT_TRIALS: u64 = 20_000;

pub fn default_n_grid() -> Vec<f64> {
    [10, 12, 14, 16, 18].iter().map(|&e| 2f64.powi(e)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Q10,
    #[default]
    Q50,
    Q90,
    Mean,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Q10 => "q10",
            Statistic::Q50 => "q50",
            Statistic::Q90 => "q90",
            Statistic::Mean => "mean",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "q10" => Ok(Statistic::Q10),
            "q50" | "median" => Ok(Statistic::Q50),
            "q90" => Ok(Statistic::Q90),
            "mean" => Ok(Statistic::Mean),
            other => Err(Error::InvalidParameter(format!(
                "unknown statistic {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub mean: f64,
    pub trials: u64,
    pub abandoned: u64,
}

impl ScalingRow {
    pub fn from_fet(n: f64, fet: &EmpiricalFet) -> Result<Self> {
        Ok(Self {
            n,
            q10: fet.quantile(0.1)?,
            q50: fet.quantile(0.5)?,
            q90: fet.quantile(0.9)?,
            mean: fet.mean(),
            trials: fet.trials(),
            abandoned: fet.abandoned(),
        })
    }

    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Q10 => self.q10,
            Statistic::Q50 => self.q50,
            Statistic::Q90 => self.q90,
            Statistic::Mean => self.mean,
        }
    }
}

pub const TABLE_HEADER: [&str; 7] = ["n", "q10", "q50", "q90", "mean", "trials", "abandoned"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub model: ModelKind,
    pub alpha: f64,
    pub c_d: f64,
    /// Master seed; row `i` used `derive_seed(seed, i)`. Absent for tables
    /// read back from CSV.
    pub seed: Option<u64>,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    pub fn values(&self, stat: Statistic) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(stat)).collect()
    }

    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&TABLE_HEADER);
        for r in &self.rows {
            csv.row(&[
                Cell::Num(r.n),
                Cell::Num(r.q10),
                Cell::Num(r.q50),
                Cell::Num(r.q90),
                Cell::Num(r.mean),
                Cell::Int(r.trials),
                Cell::Int(r.abandoned),
            ]);
        }
        csv
    }

    /// Reads a table in the layout written by [`ScalingTable::csv`].
    pub fn parse_csv(text: &str, model: ModelKind, alpha: f64, c_d: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty table".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        if header != TABLE_HEADER {
            return Err(Error::InvalidParameter(format!(
                "expected header {}, got {}",
                TABLE_HEADER.join(","),
                header.join(",")
            )));
        }
        let bad = |line: &str| Error::InvalidParameter(format!("malformed row {line:?}"));
        let mut rows = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != TABLE_HEADER.len() {
                return Err(bad(line));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(line));
            let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad(line));
            rows.push(ScalingRow {
                n: num(0)?,
                q10: num(1)?,
                q50: num(2)?,
                q90: num(3)?,
                mean: num(4)?,
                trials: int(5)?,
                abandoned: int(6)?,
            });
        }
        rows.sort_by(|a, b| a.n.total_cmp(&b.n));
        Ok(Self {
            model,
            alpha,
            c_d,
            seed: None,
            rows,
        })
    }
}

fn check_grid(n_grid: &[f64]) -> Result<()> {
    if n_grid.len() < 4 {
        return Err(Error::TooFewRows {
            need: 4,
            got: n_grid.len(),
        });
    }
    let ratio = n_grid[1] / n_grid[0];
    let geometric = ratio > 1.0
        && n_grid
            .windows(2)
            .all(|w| ((w[1] / w[0]) / ratio - 1.0).abs() < 1e-9);
    if !geometric {
        return Err(Error::InvalidParameter(
            "n grid must be an increasing geometric sequence".into(),
        ));
    }
    Ok(())
}

/// Runs one batch per grid point. Cell `i` is seeded with
/// `derive_seed(seed, i)`; a cell with too many abandoned trials fails the
/// whole table.
pub fn run_scaling(
    model: ModelKind,
    alpha: f64,
    n_grid: &[f64],
    c_d: f64,
    trials: u64,
    seed: u64,
) -> Result<ScalingTable> {
    check_grid(n_grid)?;
    let rows = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut cfg = BatchConfig::new(model, alpha, n, trials, derive_seed(seed, i as u64));
            cfg.c_d = c_d;
            let batch = fet_mc::run_batch(&cfg)?;
            batch.fet.validate()?;
            ScalingRow::from_fet(n, &batch.fet)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingTable {
        model,
        alpha,
        c_d,
        seed: Some(seed),
        rows,
    })
}

/// Flight and walk tables from one set of coupled trajectories: every walk
/// replays the step sequence of the flight in the same trial.
pub fn run_coupled_scaling(
    alpha: f64,
    n_grid: &[f64],
    c_d: f64,
    trials: u64,
    seed: u64,
) -> Result<(ScalingTable, ScalingTable)> {
    check_grid(n_grid)?;
    let mut flight_rows = Vec::with_capacity(n_grid.len());
    let mut walk_rows = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let (flight, walk) = coupled_fets(alpha, n, c_d, trials, derive_seed(seed, i as u64))?;
        flight.validate()?;
        walk.validate()?;
        flight_rows.push(ScalingRow::from_fet(n, &flight)?);
        walk_rows.push(ScalingRow::from_fet(n, &walk)?);
    }
    let table = |model, rows| ScalingTable {
        model,
        alpha,
        c_d,
        seed: Some(seed),
        rows,
    };
    Ok((
        table(ModelKind::Flight, flight_rows),
        table(ModelKind::Walk, walk_rows),
    ))
}

fn coupled_fets(
    alpha: f64,
    n: f64,
    c_d: f64,
    trials: u64,
    seed: u64,
) -> Result<(EmpiricalFet, EmpiricalFet)> {
    let law = StepLaw::new(alpha, n)?;
    let pairs = fet_mc::coupled_batch(&law, c_d * n.sqrt(), trials, seed, DEFAULT_STEP_CAP)?;
    let abandoned = pairs.iter().filter(|p| p.is_none()).count() as u64;
    let (f, w): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .flatten()
        .map(|(f, w)| (f.exit_time, w.exit_time))
        .unzip();
    Ok((
        EmpiricalFet::from_times(f, abandoned),
        EmpiricalFet::from_times(w, abandoned),
    ))
}

/// Flight: `α/2`. Walk: `max(1/2, α/2)`.
pub fn theoretical_exponent(model: ModelKind, alpha: f64) -> f64 {
    match model {
        ModelKind::Flight => alpha / 2.0,
        ModelKind::Walk => (alpha / 2.0).max(0.5),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// R² below the gate; the slope is not compared.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub theoretical: f64,
}

impl ExponentFit {
    pub fn verdict(&self) -> Verdict {
        if self.r_squared < MIN_R_SQUARED {
            Verdict::Inconclusive
        } else if (self.slope - self.theoretical).abs() <= SLOPE_TOLERANCE {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// OLS of `ln statistic` on `ln n`.
pub fn fit_exponent(table: &ScalingTable, stat: Statistic) -> Result<ExponentFit> {
    if table.rows.len() < 4 {
        return Err(Error::TooFewRows {
            need: 4,
            got: table.rows.len(),
        });
    }
    for r in &table.rows {
        let v = r.get(stat);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveStatistic { n: r.n, value: v });
        }
        if r.n.is_nan() || r.n <= 0.0 {
            return Err(out_of_domain("n", r.n, "(0, inf)"));
        }
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| r.n.ln()).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.get(stat).ln()).collect();
    let LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    } = stats::ols(&xs, &ys);
    Ok(ExponentFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        theoretical: theoretical_exponent(table.model, table.alpha),
    })
}

/// JSON summary of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: ModelKind,
    pub alpha: f64,
    pub c_d: f64,
    pub slope: f64,
    pub stderr: f64,
    pub r2: f64,
    pub theoretical: f64,
    pub pass: bool,
}

impl FitSummary {
    pub fn new(table: &ScalingTable, fit: &ExponentFit) -> Self {
        Self {
            model: table.model,
            alpha: table.alpha,
            c_d: table.c_d,
            slope: fit.slope,
            stderr: fit.slope_stderr,
            r2: fit.r_squared,
            theoretical: fit.theoretical,
            pass: fit.verdict() == Verdict::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseEntry {
    pub alpha: f64,
    pub walk: ExponentFit,
    pub flight: ExponentFit,
    pub walk_table: ScalingTable,
    pub flight_table: ScalingTable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseScan {
    pub entries: Vec<PhaseEntry>,
    /// Walk slopes sit at 1/2 below `α = 1` and at `α/2` above it.
    pub walk_kink: bool,
    /// Flight slopes track `α/2` throughout.
    pub flight_linear: bool,
}

impl PhaseScan {
    /// CSV `alpha,walk_slope,walk_stderr,walk_r2,walk_theory,flight_slope,flight_stderr,flight_r2,flight_theory`.
    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&[
            "alpha",
            "walk_slope",
            "walk_stderr",
            "walk_r2",
            "walk_theory",
            "flight_slope",
            "flight_stderr",
            "flight_r2",
            "flight_theory",
        ]);
        for e in &self.entries {
            csv.row(&[
                Cell::Num(e.alpha),
                Cell::Num(e.walk.slope),
                Cell::Num(e.walk.slope_stderr),
                Cell::Num(e.walk.r_squared),
                Cell::Num(e.walk.theoretical),
                Cell::Num(e.flight.slope),
                Cell::Num(e.flight.slope_stderr),
                Cell::Num(e.flight.r_squared),
                Cell::Num(e.flight.theoretical),
            ]);
        }
        csv
    }
}

/// Walk and flight exponents at each `α`, from coupled trajectories.
/// `α = 1` itself is fitted but left out of the kink flag, since the walk
/// exponent there carries a logarithmic correction.
pub fn phase_transition_scan(
    alpha_grid: &[f64],
    n_grid: &[f64],
    c_d: f64,
    trials: u64,
    seed: u64,
    stat: Statistic,
) -> Result<PhaseScan> {
    if !(alpha_grid.iter().any(|&a| a < 1.0) && alpha_grid.iter().any(|&a| a > 1.0)) {
        return Err(Error::InvalidParameter(
            "alpha grid must include values on both sides of 1".into(),
        ));
    }
    let entries = alpha_grid
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let (flight_table, walk_table) =
                run_coupled_scaling(alpha, n_grid, c_d, trials, derive_seed(seed, i as u64))?;
            Ok(PhaseEntry {
                alpha,
                walk: fit_exponent(&walk_table, stat)?,
                flight: fit_exponent(&flight_table, stat)?,
                walk_table,
                flight_table,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gated = |e: &&PhaseEntry| e.alpha != 1.0;
    let walk_kink = entries
        .iter()
        .filter(gated)
        .all(|e| e.walk.verdict() == Verdict::Pass);
    let flight_linear = entries
        .iter()
        .filter(gated)
        .all(|e| e.flight.verdict() == Verdict::Pass);
    Ok(PhaseScan {
        entries,
        walk_kink,
        flight_linear,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichRow {
    pub t: f64,
    /// `P{T_x(r) ≤ t}`.
    pub lower: f64,
    /// `P{T(r) ≤ t}`.
    pub middle: f64,
    /// `2 P{T_x(r/√2) ≤ t}`.
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub alpha: f64,
    pub n: f64,
    pub c_d: f64,
    pub trials: u64,
    /// DKW half-width of each empirical column.
    pub epsilon: f64,
    pub rows: Vec<SandwichRow>,
}

impl SandwichReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&["t", "lower", "middle", "upper", "pass"]);
        for r in &self.rows {
            csv.row(&[
                Cell::Num(r.t),
                Cell::Num(r.lower),
                Cell::Num(r.middle),
                Cell::Num(r.upper),
                Cell::Bool(r.pass),
            ]);
        }
        csv
    }
}

/// Empirical CDFs behind `P{T_x(r) ≤ t} ≤ P{T(r) ≤ t} ≤ 2 P{T_x(r/√2) ≤ t}`
/// for the flight at `r = c_d √n`.
#[derive(Debug, Clone)]
pub struct SandwichSamples {
    /// `T(r)` and `T_x(r)` from the same trajectories.
    pub planar: EmpiricalFet,
    pub projected: EmpiricalFet,
    /// `T_x(r/√2)` from an independent batch.
    pub projected_inner: EmpiricalFet,
}

pub fn sandwich_samples(
    alpha: f64,
    n: f64,
    c_d: f64,
    trials: u64,
    seed: u64,
) -> Result<SandwichSamples> {
    let law = StepLaw::new(alpha, n)?;
    let r = c_d * n.sqrt();
    let cap = DEFAULT_STEP_CAP;
    let outcomes = par_trials(trials, derive_seed(seed, 0), |rng| {
        mobility::flight_with_projection(&law, r, rng, cap)
    });
    let mut planar = Vec::with_capacity(outcomes.len());
    let mut projected = Vec::with_capacity(outcomes.len());
    let mut abandoned = 0u64;
    for o in outcomes {
        match o {
            Ok(rec) => {
                planar.push(rec.exit_time);
                projected.push(rec.exit_time_x.expect("projection tracked") as f64);
            }
            Err(Error::StepCapExceeded(_)) => abandoned += 1,
            Err(e) => return Err(e),
        }
    }
    let projected_inner =
        fet_mc::projected_batch(&law, r / SQRT_2, trials, derive_seed(seed, 1), cap)?;
    let samples = SandwichSamples {
        planar: EmpiricalFet::from_times(planar, abandoned),
        projected: EmpiricalFet::from_times(projected, abandoned),
        projected_inner,
    };
    samples.planar.validate()?;
    samples.projected_inner.validate()?;
    Ok(samples)
}

/// Checks the sandwich at each `t`. The lower inequality holds pathwise, so
/// it gets no slack; the upper one compares independent batches and is
/// allowed `ε(middle) + 2ε(inner)`.
pub fn sandwich_report(
    alpha: f64,
    n: f64,
    c_d: f64,
    trials: u64,
    t_grid: &[f64],
    seed: u64,
) -> Result<SandwichReport> {
    let s = sandwich_samples(alpha, n, c_d, trials, seed)?;
    Ok(sandwich_from_samples(alpha, n, c_d, &s, t_grid))
}

pub fn sandwich_from_samples(
    alpha: f64,
    n: f64,
    c_d: f64,
    s: &SandwichSamples,
    t_grid: &[f64],
) -> SandwichReport {
    let eps_mid = s.planar.dkw_epsilon(SANDWICH_DELTA);
    let eps_in = s.projected_inner.dkw_epsilon(SANDWICH_DELTA);
    let rows = t_grid
        .iter()
        .map(|&t| {
            let lower = s.projected.cdf_at(t);
            let middle = s.planar.cdf_at(t);
            let upper = 2.0 * s.projected_inner.cdf_at(t);
            SandwichRow {
                t,
                lower,
                middle,
                upper,
                pass: lower <= middle && middle <= upper + eps_mid + 2.0 * eps_in,
            }
        })
        .collect();
    SandwichReport {
        alpha,
        n,
        c_d,
        trials: s.planar.trials(),
        epsilon: eps_mid.max(eps_in),
        rows,
    }
}

/// The nine deciles of `fet`.
pub fn decile_grid(fet: &EmpiricalFet) -> Result<Vec<f64>> {
    (1..=9).map(|k| fet.quantile(k as f64 / 10.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkMeanReport {
    pub alpha: f64,
    pub n: f64,
    pub c_d: f64,
    pub trials: u64,
    pub mean_exit_time: f64,
    pub mean_exit_time_stderr: f64,
    /// Mean number of steps up to exit, `E[N]`.
    pub mean_steps: f64,
    pub mean_steps_stderr: f64,
    /// `E[Z | Z ≤ 2 c_d √n]`.
    pub conditional_mean: f64,
    /// `2 c_d √n + E[Z | Z ≤ 2 c_d √n] E[N]`.
    pub bound: f64,
    pub bound_ratio: f64,
    pub pass: bool,
    /// Mean flight exit time on the same trajectories.
    pub mean_flight_time: f64,
    /// `E[T_LF] ≤ E[N] ≤ E[T_LF] + 1`.
    pub steps_sandwich_pass: bool,
}

/// Compares the walk's mean exit time with the bound built from the mean
/// step count, with 3σ slack on the sampled means.
pub fn walk_mean_bound_report(
    alpha: f64,
    n: f64,
    c_d: f64,
    trials: u64,
    seed: u64,
) -> Result<WalkMeanReport> {
    let law = StepLaw::new(alpha, n)?;
    let r = c_d * n.sqrt();
    let pairs = fet_mc::coupled_batch(&law, r, trials, seed, DEFAULT_STEP_CAP)?;
    let abandoned = pairs.iter().filter(|p| p.is_none()).count() as u64;
    EmpiricalFet::from_times(Vec::new(), abandoned).validate()?;
    let done: Vec<_> = pairs.into_iter().flatten().collect();
    if done.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let walk_t: Vec<f64> = done.iter().map(|(_, w)| w.exit_time).collect();
    let walk_n: Vec<f64> = done.iter().map(|(_, w)| w.step_count as f64).collect();
    let flight_t: Vec<f64> = done.iter().map(|(f, _)| f.exit_time).collect();
    let (mean_t, se_t) = stats::mean_stderr(&walk_t);
    let (mean_n, se_n) = stats::mean_stderr(&walk_n);
    let (mean_f, _) = stats::mean_stderr(&flight_t);
    let conditional_mean = law.conditional_mean_below(2.0 * r)?;
    let bound = 2.0 * r + conditional_mean * mean_n;
    let slack = 3.0 * (se_t * se_t + (conditional_mean * se_n).powi(2)).sqrt();
    Ok(WalkMeanReport {
        alpha,
        n,
        c_d,
        trials,
        mean_exit_time: mean_t,
        mean_exit_time_stderr: se_t,
        mean_steps: mean_n,
        mean_steps_stderr: se_n,
        conditional_mean,
        bound,
        bound_ratio: bound / mean_t,
        pass: mean_t <= bound + slack,
        mean_flight_time: mean_f,
        steps_sandwich_pass: mean_f <= mean_n + 1e-9 * mean_n && mean_n <= mean_f + 1.0,
    })
}
