// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::SQRT_2;
use std::fs;
use std::path::Path;

use levy_exit::bounds::{hoeffding_comparison, pow2_grid, vanishing_check};
use levy_exit::fet_mc::{self, run_batch, BatchConfig, EmpiricalFet};
use levy_exit::mobility::{step, DEFAULT_STEP_CAP};
use levy_exit::output::{save_json, svg_line_plot, Cell, Csv, Series};
use levy_exit::projection::projected_second_moment;
use levy_exit::rng::par_trials;
use levy_exit::scaling::{
    fit_exponent, phase_transition_scan, run_scaling, FitSummary, ScalingTable,
};
use levy_exit::{Error, Result, StepLaw, SurvivalSeries};
use serde::Serialize;

use crate::args::{AnalyticArgs, BoundsArgs, ExitTimesArgs, FitArgs, PhaseScanArgs, SampleArgs};

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    /// Outputs were written but a batch failed validation.
    Invalid(String),
}

fn save_svg(dir: &Path, name: &str, svg: String) -> Result<()> {
    fs::write(dir.join(name), svg)?;
    Ok(())
}

pub fn sample(a: &SampleArgs) -> Result<Status> {
    let law = StepLaw::with_sigma(a.alpha.value(), a.n, a.sigma)?;
    let steps = par_trials(a.trials, a.common.seed(), |rng| step(rng, &law));
    let mut csv = Csv::new(&["z", "theta"]);
    for s in &steps {
        csv.row(&[Cell::Num(s.length), Cell::Num(s.angle)]);
    }
    csv.save(&a.common.out.join("samples.csv"))?;
    Ok(Status::Ok)
}

fn ecdf_points(fet: &EmpiricalFet, points: usize) -> Vec<(f64, f64)> {
    (1..=points)
        .filter_map(|k| {
            let q = k as f64 / points as f64;
            fet.quantile(q).ok().map(|t| (t, fet.cdf_at(t)))
        })
        .collect()
}

pub fn exit_times(a: &ExitTimesArgs) -> Result<Status> {
    let mut cfg = BatchConfig::new(a.model, a.alpha.value(), a.n, a.trials, a.common.seed());
    cfg.c_d = a.c_d;
    cfg.sigma = a.sigma;
    cfg.step_cap = a.step_cap;
    let batch = run_batch(&cfg)?;
    let out = &a.common.out;
    batch.csv().save(&out.join("exit_times.csv"))?;
    save_json(&out.join("exit_times.json"), &batch.sidecar())?;
    if a.common.emit_svg {
        let series = Series {
            label: format!("{} alpha={}", a.model, cfg.alpha),
            points: ecdf_points(&batch.fet, 200),
        };
        save_svg(
            out,
            "exit_times.svg",
            svg_line_plot("Empirical exit-time CDF", "t", "P{T <= t}", &[series]),
        )?;
    }
    println!(
        "{} trials, {} abandoned, median {}",
        batch.fet.trials(),
        batch.fet.abandoned(),
        batch
            .fet
            .quantile(0.5)
            .map(|v| v.to_string())
            .unwrap_or_else(|_| "n/a".into())
    );
    Ok(match batch.fet.validate() {
        Ok(()) => Status::Ok,
        Err(e) => Status::Invalid(e.to_string()),
    })
}

fn log_log_plot(table: &ScalingTable, stat: levy_exit::Statistic) -> String {
    let series = Series {
        label: format!("{} {}", table.model, stat),
        points: table
            .rows
            .iter()
            .map(|r| (r.n.ln(), r.get(stat).ln()))
            .collect(),
    };
    svg_line_plot(
        &format!("{} exit times, alpha = {}", table.model, table.alpha),
        "ln n",
        &format!("ln {stat}"),
        &[series],
    )
}

pub fn fit(a: &FitArgs) -> Result<Status> {
    let out = &a.common.out;
    let alpha = a.alpha.value();
    let table = match &a.table {
        Some(path) => ScalingTable::parse_csv(&fs::read_to_string(path)?, a.model, alpha, a.c_d)?,
        None => {
            let table = run_scaling(a.model, alpha, &a.n_grid, a.c_d, a.trials, a.common.seed())?;
            table.csv().save(&out.join("scaling.csv"))?;
            table
        }
    };
    let fit = fit_exponent(&table, a.statistic)?;
    let summary = FitSummary::new(&table, &fit);
    save_json(&out.join("fit.json"), &summary)?;
    if a.common.emit_svg {
        save_svg(out, "scaling.svg", log_log_plot(&table, a.statistic))?;
    }
    println!(
        "slope {:.4} +- {:.4} (R^2 {:.4}), theory {} -> {:?}",
        fit.slope,
        fit.slope_stderr,
        fit.r_squared,
        fit.theoretical,
        fit.verdict()
    );
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct PhaseSummary<'a> {
    c_d: f64,
    statistic: levy_exit::Statistic,
    walk_kink: bool,
    flight_linear: bool,
    fits: Vec<PhaseFit<'a>>,
}

#[derive(Serialize)]
struct PhaseFit<'a> {
    alpha: f64,
    walk: &'a levy_exit::ExponentFit,
    flight: &'a levy_exit::ExponentFit,
}

pub fn phase_scan(a: &PhaseScanArgs) -> Result<Status> {
    let out = &a.common.out;
    let scan = phase_transition_scan(
        &a.alphas,
        &a.n_grid,
        a.c_d,
        a.trials,
        a.common.seed(),
        a.statistic,
    )?;
    scan.csv().save(&out.join("phase_scan.csv"))?;
    for e in &scan.entries {
        e.walk_table
            .csv()
            .save(&out.join(format!("scaling_walk_alpha{}.csv", e.alpha)))?;
        e.flight_table
            .csv()
            .save(&out.join(format!("scaling_flight_alpha{}.csv", e.alpha)))?;
    }
    let summary = PhaseSummary {
        c_d: a.c_d,
        statistic: a.statistic,
        walk_kink: scan.walk_kink,
        flight_linear: scan.flight_linear,
        fits: scan
            .entries
            .iter()
            .map(|e| PhaseFit {
                alpha: e.alpha,
                walk: &e.walk,
                flight: &e.flight,
            })
            .collect(),
    };
    save_json(&out.join("phase_scan.json"), &summary)?;
    if a.common.emit_svg {
        let line = |label: &str, f: &dyn Fn(&levy_exit::scaling::PhaseEntry) -> f64| Series {
            label: label.into(),
            points: scan.entries.iter().map(|e| (e.alpha, f(e))).collect(),
        };
        let series = [
            line("walk", &|e| e.walk.slope),
            line("flight", &|e| e.flight.slope),
            line("walk theory", &|e| e.walk.theoretical),
        ];
        save_svg(
            out,
            "phase_scan.svg",
            svg_line_plot("Fitted exponents", "alpha", "slope", &series),
        )?;
    }
    for e in &scan.entries {
        println!(
            "alpha {}: walk {:.4}, flight {:.4}",
            e.alpha, e.walk.slope, e.flight.slope
        );
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct AnalyticSummary {
    alpha: f64,
    r: f64,
    diffusion: f64,
    overlay_trials: Option<u64>,
    sup_distance: Option<f64>,
}

pub fn analytic(a: &AnalyticArgs) -> Result<Status> {
    let out = &a.common.out;
    let alpha = a.alpha.value();
    let law = a.n.map(|n| StepLaw::new(alpha, n)).transpose()?;
    let r = match (a.r, a.n) {
        (Some(r), _) => r,
        (None, Some(n)) => a.c_d * n.sqrt() / SQRT_2,
        (None, None) => {
            return Err(Error::InvalidParameter(
                "one of --r or --n is required".into(),
            ))
        }
    };
    let diffusion = match (a.diffusion, &law) {
        (Some(f), _) => f,
        (None, Some(law)) if law.is_gaussian() => projected_second_moment(law) / 2.0,
        _ => levy_exit::fet_analytic::DEFAULT_DIFFUSION,
    };
    let series = SurvivalSeries::with_diffusion(alpha, r, diffusion)?;
    if a.points < 2 {
        return Err(Error::InvalidParameter(
            "--points must be at least 2".into(),
        ));
    }
    let t_max = a.t_max.unwrap_or(3.0 * r.powf(alpha) / diffusion);
    let times: Vec<f64> = (0..a.points)
        .map(|k| t_max * k as f64 / (a.points - 1) as f64)
        .collect();
    series.table(&times)?.save(&out.join("analytic.csv"))?;

    let mut sup_distance = None;
    let mut plot = vec![Series {
        label: "series".into(),
        points: times
            .iter()
            .map(|&t| (t, series.fet_cdf(t).unwrap_or(f64::NAN)))
            .collect(),
    }];
    if let Some(trials) = a.overlay_trials {
        let law =
            law.ok_or_else(|| Error::InvalidParameter("--overlay-trials needs --n".into()))?;
        let fet = fet_mc::projected_batch(&law, r, trials, a.common.seed(), DEFAULT_STEP_CAP)?;
        let mut csv = Csv::new(&["t", "fet_cdf", "empirical"]);
        let mut sup: f64 = 0.0;
        for &t in &times {
            let model = series.fet_cdf(t)?;
            let emp = fet.cdf_at(t);
            sup = sup.max((model - emp).abs());
            csv.row(&[Cell::Num(t), Cell::Num(model), Cell::Num(emp)]);
        }
        csv.save(&out.join("overlay.csv"))?;
        plot.push(Series {
            label: "simulated".into(),
            points: times.iter().map(|&t| (t, fet.cdf_at(t))).collect(),
        });
        println!("sup distance on the grid: {sup:.5}");
        sup_distance = Some(sup);
    }
    save_json(
        &out.join("analytic.json"),
        &AnalyticSummary {
            alpha,
            r,
            diffusion,
            overlay_trials: a.overlay_trials,
            sup_distance,
        },
    )?;
    if a.common.emit_svg {
        save_svg(
            out,
            "analytic.svg",
            svg_line_plot("Projected exit-time CDF", "t", "P{T_x <= t}", &plot),
        )?;
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct BoundsSummary {
    alpha: f64,
    n: f64,
    c_d: f64,
    r: f64,
    s2: f64,
    trials: u64,
    displacement_pass: bool,
    exit_time_pass: bool,
    vanishing_epsilon: Option<f64>,
    vanishing_decreasing_from: Option<f64>,
}

pub fn bounds(a: &BoundsArgs) -> Result<Status> {
    let out = &a.common.out;
    let alpha = a.alpha.value();
    let law = StepLaw::new(alpha, a.n)?;
    let report = hoeffding_comparison(&law, a.c_d, a.horizon, a.trials, a.common.seed())?;
    report.exit_time_csv().save(&out.join("bounds_exit.csv"))?;
    report
        .displacement_csv()
        .save(&out.join("bounds_displacement.csv"))?;
    let mut decreasing_from = None;
    if let Some(eps) = a.epsilon {
        let v = vanishing_check(alpha, eps, &pow2_grid(10, a.vanishing_max_log2, 1), a.c_d)?;
        v.csv().save(&out.join("vanishing.csv"))?;
        decreasing_from = v.decreasing_from.map(|i| v.rows[i].n);
    }
    save_json(
        &out.join("bounds.json"),
        &BoundsSummary {
            alpha,
            n: a.n,
            c_d: a.c_d,
            r: report.params.r,
            s2: report.params.s2,
            trials: report.trials,
            displacement_pass: report.displacement_pass(),
            exit_time_pass: report.exit_time_pass(),
            vanishing_epsilon: a.epsilon,
            vanishing_decreasing_from: decreasing_from,
        },
    )?;
    if a.common.emit_svg {
        let pts = |f: &dyn Fn(&levy_exit::bounds::BoundRow) -> f64| {
            report
                .exit_time
                .iter()
                .map(|r| (r.k as f64, f(r)))
                .collect()
        };
        let series = [
            Series {
                label: "empirical".into(),
                points: pts(&|r| r.empirical),
            },
            Series {
                label: "bound".into(),
                points: pts(&|r| r.bound.min(1.0)),
            },
        ];
        save_svg(
            out,
            "bounds.svg",
            svg_line_plot("P{T_x(r/sqrt 2) <= k}", "k", "probability", &series),
        )?;
    }
    println!(
        "displacement bound {}; exit-time bound {}",
        if report.displacement_pass() {
            "holds"
        } else {
            "violated"
        },
        if report.exit_time_pass() {
            "holds"
        } else {
            "violated"
        }
    );
    Ok(Status::Ok)
}
