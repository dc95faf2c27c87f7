// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo first-exit-time distributions.

use serde::{Deserialize, Serialize};

use crate::error::{out_of_domain, Error, Result};
use crate::mobility::{self, ExitRecord, ModelKind, DEFAULT_CD, DEFAULT_STEP_CAP};
use crate::output::{Cell, Csv};
use crate::rng::par_trials;
use crate::stats;
use crate::stepdist::StepLaw;

/// Largest tolerated fraction of abandoned (step-capped) trials.
pub const MAX_ABANDONED_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub model: ModelKind,
    pub alpha: f64,
    pub n: f64,
    pub c_d: f64,
    pub trials: u64,
    pub seed: u64,
    pub sigma: f64,
    pub step_cap: u64,
}

impl BatchConfig {
    pub fn new(model: ModelKind, alpha: f64, n: f64, trials: u64, seed: u64) -> Self {
        Self {
            model,
            alpha,
            n,
            c_d: DEFAULT_CD,
            trials,
            seed,
            sigma: StepLaw::DEFAULT_SIGMA,
            step_cap: DEFAULT_STEP_CAP,
        }
    }

    pub fn law(&self) -> Result<StepLaw> {
        StepLaw::with_sigma(self.alpha, self.n, self.sigma)
    }

    /// Exit radius `c_d √n`.
    pub fn radius(&self) -> f64 {
        self.c_d * self.n.sqrt()
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.c_d > 0.0 && self.c_d < 0.5) {
            return Err(out_of_domain("c_d", self.c_d, "(0, 0.5)"));
        }
        Ok(())
    }
}

/// Sorted exit times of the completed trials of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalFet {
    sorted_times: Vec<f64>,
    trials: u64,
    abandoned: u64,
}

impl EmpiricalFet {
    pub fn from_times(mut times: Vec<f64>, abandoned: u64) -> Self {
        times.sort_by(f64::total_cmp);
        let trials = times.len() as u64 + abandoned;
        Self {
            sorted_times: times,
            trials,
            abandoned,
        }
    }

    pub fn sorted_times(&self) -> &[f64] {
        &self.sorted_times
    }

    /// Trials attempted, including abandoned ones.
    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn abandoned(&self) -> u64 {
        self.abandoned
    }

    /// Number of completed trials.
    pub fn len(&self) -> usize {
        self.sorted_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_times.is_empty()
    }

    /// Left-continuous order statistic: the `⌈q·m⌉`-th smallest of `m`
    /// completed times, clamped to `[1, m]`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(out_of_domain("q", q, "[0, 1]"));
        }
        let m = self.sorted_times.len();
        let rank = ((q * m as f64).ceil() as usize).clamp(1, m);
        Ok(self.sorted_times[rank - 1])
    }

    /// Fraction of completed times `≤ t`.
    pub fn cdf_at(&self, t: f64) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        self.sorted_times.partition_point(|&x| x <= t) as f64 / self.sorted_times.len() as f64
    }

    pub fn mean(&self) -> f64 {
        stats::mean_stderr(&self.sorted_times).0
    }

    pub fn mean_stderr(&self) -> (f64, f64) {
        stats::mean_stderr(&self.sorted_times)
    }

    /// DKW half-width at confidence `1 − delta`.
    pub fn dkw_epsilon(&self, delta: f64) -> f64 {
        stats::dkw_epsilon(self.sorted_times.len().max(1) as u64, delta)
    }

    /// Union of two batches.
    pub fn merge(&self, other: &EmpiricalFet) -> EmpiricalFet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.sorted_times, &other.sorted_times);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        EmpiricalFet {
            sorted_times: out,
            trials: self.trials + other.trials,
            abandoned: self.abandoned + other.abandoned,
        }
    }

    /// Exponential decay rate of the empirical survival function, from a
    /// least-squares line through `ln P{T > t}` at `levels` evenly spaced
    /// quantiles between `lo` and `hi`.
    pub fn tail_decay_rate(&self, lo: f64, hi: f64, levels: usize) -> Result<f64> {
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < lo < hi < 1, got {lo}, {hi}"
            )));
        }
        let mut ts = Vec::with_capacity(levels);
        let mut logs = Vec::with_capacity(levels);
        for k in 0..levels {
            let q = lo + (hi - lo) * k as f64 / (levels.max(2) - 1) as f64;
            let t = self.quantile(q)?;
            let survival = 1.0 - self.cdf_at(t);
            if survival > 0.0 && ts.last() != Some(&t) {
                ts.push(t);
                logs.push(survival.ln());
            }
        }
        if ts.len() < 3 {
            return Err(Error::TooFewRows {
                need: 3,
                got: ts.len(),
            });
        }
        Ok(-stats::ols(&ts, &logs).slope)
    }

    /// Fails when more than 0.1% of the trials were abandoned.
    pub fn validate(&self) -> Result<()> {
        if self.abandoned as f64 > MAX_ABANDONED_FRACTION * self.trials as f64 {
            return Err(Error::TooManyAbandoned {
                abandoned: self.abandoned,
                trials: self.trials,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub config: BatchConfig,
    /// Indexed by trial; `None` marks an abandoned trial.
    pub records: Vec<Option<ExitRecord>>,
    pub fet: EmpiricalFet,
}

/// Runs `config.trials` independent first-exit trials.
///
/// Trial `i` draws from stream `(seed, i)`, so the batch is deterministic
/// for a fixed seed whatever the worker count. Capped trials are counted
/// in `fet.abandoned()` rather than failing the batch.
pub fn run_batch(config: &BatchConfig) -> Result<Batch> {
    config.check()?;
    let law = config.law()?;
    let r = config.radius();
    let (kind, cap) = (config.model, config.step_cap);
    let outcomes = par_trials(config.trials, config.seed, |rng| {
        mobility::first_exit(kind, &law, r, rng, cap)
    });
    let records = collect_outcomes(outcomes)?;
    let times: Vec<f64> = records.iter().flatten().map(|r| r.exit_time).collect();
    let abandoned = records.iter().filter(|r| r.is_none()).count() as u64;
    Ok(Batch {
        config: config.clone(),
        records,
        fet: EmpiricalFet::from_times(times, abandoned),
    })
}

// Keeps cap hits as `None`, propagates every other error.
fn collect_outcomes<T>(outcomes: Vec<Result<T>>) -> Result<Vec<Option<T>>> {
    outcomes
        .into_iter()
        .map(|o| match o {
            Ok(v) => Ok(Some(v)),
            Err(Error::StepCapExceeded(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Exit times of the x-projected flight from `[-r, r]`.
pub fn projected_batch(
    law: &StepLaw,
    r: f64,
    trials: u64,
    seed: u64,
    cap: u64,
) -> Result<EmpiricalFet> {
    let outcomes = par_trials(trials, seed, |rng| {
        mobility::projected_first_exit(law, r, rng, cap).map(|t| t as f64)
    });
    let done = collect_outcomes(outcomes)?;
    let abandoned = done.iter().filter(|t| t.is_none()).count() as u64;
    Ok(EmpiricalFet::from_times(
        done.into_iter().flatten().collect(),
        abandoned,
    ))
}

/// Coupled flight/walk pairs, `None` where the trial hit the cap.
pub fn coupled_batch(
    law: &StepLaw,
    r: f64,
    trials: u64,
    seed: u64,
    cap: u64,
) -> Result<Vec<Option<(ExitRecord, ExitRecord)>>> {
    let outcomes = par_trials(trials, seed, |rng| {
        mobility::coupled_first_exit(law, r, rng, cap)
    });
    collect_outcomes(outcomes)
}

pub const RECORDS_HEADER: [&str; 4] = ["trial_index", "exit_time", "step_count", "truncated_last"];

/// Per-trial CSV. Abandoned trials have no row.
pub fn records_csv(records: &[Option<ExitRecord>]) -> Csv {
    let mut csv = Csv::new(&RECORDS_HEADER);
    for (i, rec) in records.iter().enumerate() {
        if let Some(r) = rec {
            csv.row(&[
                Cell::Int(i as u64),
                Cell::Num(r.exit_time),
                Cell::Int(r.step_count),
                Cell::Num(r.truncated_last),
            ]);
        }
    }
    csv
}

/// JSON sidecar describing a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSidecar {
    pub model: ModelKind,
    pub alpha: f64,
    pub n: f64,
    pub c_d: f64,
    pub trials: u64,
    pub seed: u64,
    pub abandoned: u64,
}

impl Batch {
    pub fn sidecar(&self) -> BatchSidecar {
        BatchSidecar {
            model: self.config.model,
            alpha: self.config.alpha,
            n: self.config.n,
            c_d: self.config.c_d,
            trials: self.config.trials,
            seed: self.config.seed,
            abandoned: self.fet.abandoned(),
        }
    }

    pub fn csv(&self) -> Csv {
        records_csv(&self.records)
    }
}
