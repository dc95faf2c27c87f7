// SPDX-License-Identifier: Apache-2.0

//! The invariant suite behind `levy-exit verify`.

use levy_exit::bounds::hoeffding_comparison;
use levy_exit::fet_analytic::{eta_partial_sum, SurvivalSeries};
use levy_exit::fet_mc;
use levy_exit::mobility::{step, DEFAULT_CD, DEFAULT_STEP_CAP};
use levy_exit::output::save_json;
use levy_exit::projection::{log_grid, ProjectedLaw};
use levy_exit::rng::{derive_seed, par_trials};
use levy_exit::scaling::{
    decile_grid, sandwich_from_samples, sandwich_samples, walk_mean_bound_report,
};
use levy_exit::stats::ks_distance_ccdf;
use levy_exit::{Result, StepLaw};
use serde::Serialize;

use crate::args::{Fault, VerifyArgs};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: u64,
    pub fault: Option<Fault>,
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Runs every check and writes `verify.json`.
pub fn run(a: &VerifyArgs) -> Result<VerifyReport> {
    let seed = a.common.seed();
    let trials = a.trials;
    let sub = |i| derive_seed(seed, i);
    // the law used to drive simulations; the reference law is always honest
    let drive = |alpha: f64, n: f64| -> Result<StepLaw> {
        let law = StepLaw::new(alpha, n)?;
        Ok(match a.inject_fault {
            Some(Fault::Normalization) => law.with_faulty_normalization(1.5),
            None => law,
        })
    };
    let mut checks = Vec::new();

    let partial = eta_partial_sum(1_000_000);
    let cdf0 = SurvivalSeries::new(2.0, 1.0)?.fet_cdf(0.0)?;
    checks.push(check(
        "series",
        (partial - 1.0).abs() <= 1.3e-6 && cdf0 == 0.0,
        format!(
            "|sum eta - 1| = {:.2e}, fet_cdf(0) = {cdf0}",
            (partial - 1.0).abs()
        ),
    ));

    let n16 = 2f64.powi(16);
    let reference = ProjectedLaw::new(StepLaw::new(1.5, n16)?);
    let law = drive(1.5, n16)?;
    let mut xs = par_trials(trials * 10, sub(1), |rng| {
        let s = step(rng, &law);
        s.length * s.angle.cos().abs()
    });
    xs.sort_by(f64::total_cmp);
    let upper = reference.law().upper();
    let ks = ks_distance_ccdf(&xs, |z| reference.ccdf_any(z.min(upper)), 1.0);
    checks.push(check(
        "projection ks",
        ks <= 0.01,
        format!("KS distance {ks:.5} over {} samples", xs.len()),
    ));

    let tail = reference.density_tail_bound_check(&log_grid(1.0, 0.999 * upper, 200))?;
    checks.push(check(
        "projected density bound",
        tail.all_pass,
        format!(
            "{} of 200 grid points within the bound",
            tail.rows.iter().filter(|r| r.pass).count()
        ),
    ));

    let n14 = 2f64.powi(14);
    let law = drive(1.5, n14)?;
    let pairs = fet_mc::coupled_batch(
        &law,
        DEFAULT_CD * n14.sqrt(),
        trials,
        sub(2),
        DEFAULT_STEP_CAP,
    )?;
    let done: Vec<_> = pairs.iter().flatten().collect();
    let floor = DEFAULT_CD * n14.sqrt();
    let steps_ok = done.iter().all(|(f, w)| w.step_count as f64 == f.exit_time);
    let shift_ok = done.iter().all(|(f, w)| w.exit_time >= f.exit_time - 1.0);
    let floor_ok = done.iter().all(|(_, w)| w.exit_time >= floor);
    checks.push(check(
        "coupling",
        steps_ok && shift_ok && done.len() == pairs.len(),
        format!(
            "{} coupled trials, step counts match: {steps_ok}, walk >= flight - 1: {shift_ok}",
            done.len()
        ),
    ));
    checks.push(check(
        "walk floor",
        floor_ok,
        format!("all walk exit times >= {floor}"),
    ));

    let n12 = 2f64.powi(12);
    let samples = sandwich_samples(1.5, n12, DEFAULT_CD, trials, sub(3))?;
    let sandwich = sandwich_from_samples(
        1.5,
        n12,
        DEFAULT_CD,
        &samples,
        &decile_grid(&samples.planar)?,
    );
    checks.push(check(
        "cdf sandwich",
        sandwich.all_pass(),
        format!(
            "{} of 9 deciles pass (DKW eps {:.4})",
            sandwich.rows.iter().filter(|r| r.pass).count(),
            sandwich.epsilon
        ),
    ));

    let hoeffding = hoeffding_comparison(&StepLaw::new(1.0, n14)?, DEFAULT_CD, 64, trials, sub(4))?;
    checks.push(check(
        "hoeffding bounds",
        hoeffding.all_pass(),
        format!(
            "alpha 1, n 2^14, k = 1..64, s2 = {:.3}",
            hoeffding.params.s2
        ),
    ));

    let mean = walk_mean_bound_report(1.5, n12, DEFAULT_CD, trials, sub(5))?;
    checks.push(check(
        "walk mean bound",
        mean.pass && mean.steps_sandwich_pass,
        format!(
            "E[T] = {:.3} <= {:.3}, E[N] = {:.3} vs E[T_LF] = {:.3}",
            mean.mean_exit_time, mean.bound, mean.mean_steps, mean.mean_flight_time
        ),
    ));

    let report = VerifyReport {
        seed,
        trials,
        fault: a.inject_fault,
        pass: checks.iter().all(|c| c.pass),
        checks,
    };
    save_json(&a.common.out.join("verify.json"), &report)?;
    Ok(report)
}
