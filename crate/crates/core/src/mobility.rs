// SPDX-License-Identifier: Apache-2.0

//! Lévy flight and Lévy walk trajectories with first-exit detection.
//!
//! Both models share the same embedded chain: positions at step starts are
//! partial sums of `Z_i (cos θ_i, sin θ_i)`. A flight spends one time unit
//! per step and is only observed at step ends. A walk moves at unit speed,
//! so a step of length `Z` lasts `Z`, and the walker can leave the disc in
//! the middle of a step.
//!
//! Displacement is measured from the trial's start point in the plane.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_domain, Error, Result};
use crate::stepdist::StepLaw;

pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;
pub const DEFAULT_CD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Every step takes one time unit.
    Flight,
    /// Unit velocity: a step of length `Z` takes time `Z`.
    Walk,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Flight => "flight",
            ModelKind::Walk => "walk",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flight" => Ok(ModelKind::Flight),
            "walk" => Ok(ModelKind::Walk),
            other => Err(Error::InvalidParameter(format!("unknown model {other:?}"))),
        }
    }
}

/// Outcome of one first-exit trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitRecord {
    /// First exit time `T(r)`.
    pub exit_time: f64,
    /// Steps begun up to and including the exiting step.
    pub step_count: u64,
    /// Distance covered inside the exiting step before the crossing. Walk
    /// only; zero for flights.
    pub truncated_last: f64,
    /// First step end with `|X_x| ≥ r`, when the flight was asked to keep
    /// running until its x-projection also exits.
    pub exit_time_x: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub length: f64,
    /// Direction in `[0, 2π)`.
    pub angle: f64,
}

/// Draws one step: length from the law, then an independent uniform angle.
pub fn step<R: Rng + ?Sized>(rng: &mut R, law: &StepLaw) -> Step {
    let length = law.sample(rng);
    let angle = TAU * rng.random::<f64>();
    Step { length, angle }
}

/// Anything that yields a sequence of steps.
pub trait StepSource {
    fn next_step(&mut self) -> Step;
}

/// Steps drawn from a law with a random source.
pub struct LawSteps<'a, R: ?Sized> {
    pub law: &'a StepLaw,
    pub rng: &'a mut R,
}

impl<R: Rng + ?Sized> StepSource for LawSteps<'_, R> {
    fn next_step(&mut self) -> Step {
        step(self.rng, self.law)
    }
}

impl<F: FnMut() -> Step> StepSource for F {
    fn next_step(&mut self) -> Step {
        self()
    }
}

fn check_radius(law: &StepLaw, r: f64) -> Result<()> {
    if !(r > 0.0 && r < 0.5 * law.upper()) {
        return Err(out_of_domain("r", r, format!("(0, {})", 0.5 * law.upper())));
    }
    Ok(())
}

/// Distance along unit vector `(ux, uy)` from `(px, py)` to the circle of
/// radius `r`. The start must be strictly inside, which leaves exactly one
/// positive root.
fn crossing_distance(px: f64, py: f64, ux: f64, uy: f64, r: f64) -> Result<f64> {
    let b = px * ux + py * uy;
    let c = px * px + py * py - r * r;
    if c >= 0.0 {
        return Err(Error::CrossingGeometry(c));
    }
    let root = (b * b - c).sqrt();
    // s² + 2bs + c = 0; pick the cancellation-free form of the positive root
    Ok(if b >= 0.0 { -c / (b + root) } else { root - b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Observe {
    flight: bool,
    walk: bool,
    projection: bool,
}

#[derive(Debug, Default)]
struct Outcome {
    flight: Option<ExitRecord>,
    walk: Option<ExitRecord>,
}

// Single engine behind all 2-D variants. Flight and walk see the same
// positions computed by the same arithmetic, so the walk's step count and
// the flight's exit time coincide exactly.
fn simulate<S: StepSource>(r: f64, source: &mut S, cap: u64, observe: Observe) -> Result<Outcome> {
    let r2 = r * r;
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let mut elapsed = 0.0f64;
    let mut steps = 0u64;
    let mut exit_2d: Option<u64> = None;
    let mut exit_x: Option<u64> = None;
    let mut out = Outcome::default();
    loop {
        if steps >= cap {
            return Err(Error::StepCapExceeded(cap));
        }
        let s = source.next_step();
        steps += 1;
        let (sin, cos) = s.angle.sin_cos();
        let (nx, ny) = (x + s.length * cos, y + s.length * sin);

        if exit_2d.is_none() {
            if nx * nx + ny * ny >= r2 {
                exit_2d = Some(steps);
                if observe.walk {
                    let inside = if steps == 1 {
                        r
                    } else {
                        crossing_distance(x, y, cos, sin, r)?.min(s.length)
                    };
                    out.walk = Some(ExitRecord {
                        exit_time: elapsed + inside,
                        step_count: steps,
                        truncated_last: inside,
                        exit_time_x: None,
                    });
                }
            } else {
                elapsed += s.length;
            }
        }
        if observe.projection && exit_x.is_none() && nx.abs() >= r {
            exit_x = Some(steps);
        }
        x = nx;
        y = ny;

        if let Some(t) = exit_2d {
            if !observe.projection || exit_x.is_some() {
                if observe.flight {
                    out.flight = Some(ExitRecord {
                        exit_time: t as f64,
                        step_count: t,
                        truncated_last: 0.0,
                        exit_time_x: exit_x,
                    });
                }
                return Ok(out);
            }
        }
    }
}

/// First exit from the disc of radius `r` centred on the start point.
pub fn first_exit<R: Rng + ?Sized>(
    kind: ModelKind,
    law: &StepLaw,
    r: f64,
    rng: &mut R,
    cap: u64,
) -> Result<ExitRecord> {
    check_radius(law, r)?;
    first_exit_with(kind, r, &mut LawSteps { law, rng }, cap)
}

/// [`first_exit`] over an arbitrary step source.
pub fn first_exit_with<S: StepSource>(
    kind: ModelKind,
    r: f64,
    source: &mut S,
    cap: u64,
) -> Result<ExitRecord> {
    let observe = Observe {
        flight: kind == ModelKind::Flight,
        walk: kind == ModelKind::Walk,
        projection: false,
    };
    let out = simulate(r, source, cap, observe)?;
    Ok(match kind {
        ModelKind::Flight => out.flight,
        ModelKind::Walk => out.walk,
    }
    .expect("engine returns the observed model"))
}

/// Flight exit that keeps running until the x-projection has also left
/// `[-r, r]`, filling [`ExitRecord::exit_time_x`].
pub fn flight_with_projection<R: Rng + ?Sized>(
    law: &StepLaw,
    r: f64,
    rng: &mut R,
    cap: u64,
) -> Result<ExitRecord> {
    check_radius(law, r)?;
    let observe = Observe {
        flight: true,
        walk: false,
        projection: true,
    };
    let out = simulate(r, &mut LawSteps { law, rng }, cap, observe)?;
    Ok(out.flight.expect("flight observed"))
}

/// Flight and walk replaying one shared step sequence.
pub fn coupled_first_exit<R: Rng + ?Sized>(
    law: &StepLaw,
    r: f64,
    rng: &mut R,
    cap: u64,
) -> Result<(ExitRecord, ExitRecord)> {
    check_radius(law, r)?;
    coupled_first_exit_with(r, &mut LawSteps { law, rng }, cap)
}

pub fn coupled_first_exit_with<S: StepSource>(
    r: f64,
    source: &mut S,
    cap: u64,
) -> Result<(ExitRecord, ExitRecord)> {
    let observe = Observe {
        flight: true,
        walk: true,
        projection: false,
    };
    let out = simulate(r, source, cap, observe)?;
    Ok((out.flight.expect("flight"), out.walk.expect("walk")))
}

/// First integer time with `|Σ Z_i cos θ_i| ≥ r` (flight dynamics).
pub fn projected_first_exit<R: Rng + ?Sized>(
    law: &StepLaw,
    r: f64,
    rng: &mut R,
    cap: u64,
) -> Result<u64> {
    check_radius(law, r)?;
    projected_first_exit_with(r, &mut LawSteps { law, rng }, cap)
}

pub fn projected_first_exit_with<S: StepSource>(r: f64, source: &mut S, cap: u64) -> Result<u64> {
    let mut x = 0.0f64;
    for t in 1..=cap {
        let s = source.next_step();
        x += s.length * s.angle.cos();
        if x.abs() >= r {
            return Ok(t);
        }
    }
    Err(Error::StepCapExceeded(cap))
}

/// Projected displacement `X_x(t)` after each of the first `horizon` steps.
pub fn projected_path<R: Rng + ?Sized>(law: &StepLaw, horizon: usize, rng: &mut R) -> Vec<f64> {
    let mut x = 0.0;
    (0..horizon)
        .map(|_| {
            let s = step(rng, law);
            x += s.length * s.angle.cos();
            x
        })
        .collect()
}
