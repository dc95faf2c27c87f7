// SPDX-License-Identifier: Apache-2.0

//! The x-projection `Z|cos θ|` of a planar step with uniform direction.
//!
//! For `z ≥ 1` the projected CCDF is
//! `(2c(n)/πz^α) ∫₀^{acos(z/√n)} cos^α ϑ dϑ − (2c(n)/π n^{α/2}) acos(z/√n)`,
//! which tends to `c★/z^α` as `n → ∞`, with
//! `c★ = (2/π) ∫₀^{π/2} cos^α ϑ dϑ`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{out_of_domain, Result};
use crate::output::{Cell, Csv};
use crate::quad;
use crate::stepdist::{StepLaw, QUAD_TOL};

/// Tolerance for CCDF evaluations that feed numerical derivatives.
const DERIVATIVE_QUAD_TOL: f64 = 1e-13;
/// Relative central-difference step.
const DIFF_STEP: f64 = 1e-4;
/// Absolute slack when checking the density bound.
pub const TAIL_BOUND_SLACK: f64 = 1e-6;

/// `c★ = (2/π) ∫₀^{π/2} cos^α ϑ dϑ`.
pub fn cstar(alpha: f64) -> f64 {
    2.0 / PI
        * quad::simpson(
            |t: f64| t.cos().max(0.0).powf(alpha),
            0.0,
            FRAC_PI_2,
            QUAD_TOL,
        )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedLaw {
    law: StepLaw,
    cstar: f64,
}

impl ProjectedLaw {
    pub fn new(law: StepLaw) -> Self {
        Self {
            law,
            cstar: cstar(law.alpha()),
        }
    }

    pub fn from_params(alpha: f64, n: f64) -> Result<Self> {
        Ok(Self::new(StepLaw::new(alpha, n)?))
    }

    pub fn law(&self) -> &StepLaw {
        &self.law
    }

    pub fn cstar(&self) -> f64 {
        self.cstar
    }

    /// `P{Z|cos θ| > z}` for `z ∈ [1, √n]`.
    pub fn projected_ccdf(&self, z: f64) -> Result<f64> {
        let hi = self.law.upper();
        if !(z >= 1.0 && z <= hi) {
            return Err(out_of_domain("z", z, format!("[1, {hi}]")));
        }
        Ok(self.ccdf_with_tol(z, QUAD_TOL))
    }

    /// `P{Z|cos θ| > y}` for any `y ≥ 0`, including the region below 1
    /// where part of the angular range always clears `y`.
    pub fn ccdf_any(&self, y: f64) -> f64 {
        self.ccdf_with_tol(y, QUAD_TOL)
    }

    fn ccdf_with_tol(&self, y: f64, tol: f64) -> f64 {
        let upper = self.law.upper();
        if y <= 0.0 {
            return 1.0;
        }
        if y >= upper {
            return 0.0;
        }
        // below acos(y) the whole step clears y; past acos(y/√n) nothing does
        let a_lo = if y < 1.0 { y.acos() } else { 0.0 };
        let a_hi = (y / upper).acos();
        let law = &self.law;
        if law.is_gaussian() {
            let mut breaks = vec![a_lo];
            let fade = y / (1.0 + 40.0 * law.sigma());
            if fade < 1.0 && fade.acos() < a_hi && fade.acos() > a_lo {
                breaks.push(fade.acos());
            }
            breaks.push(a_hi);
            let integral = quad::simpson_pieces(|t: f64| law.ccdf(y / t.cos()), &breaks, tol);
            2.0 / PI * (a_lo + integral)
        } else {
            let a = law.alpha();
            let c = law.normalization();
            let power = quad::simpson(|t: f64| t.cos().max(0.0).powf(a), a_lo, a_hi, tol);
            let tail = upper.powf(-a);
            2.0 / PI * (a_lo + c * y.powf(-a) * power - c * tail * (a_hi - a_lo))
        }
    }

    /// Large-`n` limit `c★ / z^α`.
    pub fn limit_ccdf(&self, z: f64) -> f64 {
        self.cstar * z.powf(-self.law.alpha())
    }

    /// Projected density by central differences of the CCDF.
    pub fn density_numeric(&self, z: f64) -> f64 {
        let h = DIFF_STEP * z;
        (self.ccdf_with_tol(z - h, DERIVATIVE_QUAD_TOL)
            - self.ccdf_with_tol(z + h, DERIVATIVE_QUAD_TOL))
            / (2.0 * h)
    }

    /// `α c★ c(n) / z^{α+1}`.
    pub fn density_bound(&self, z: f64) -> f64 {
        let a = self.law.alpha();
        a * self.cstar * self.law.normalization() * z.powf(-a - 1.0)
    }

    /// Checks `dF/dz ≤ α c★ c(n) / z^{α+1}` at each grid point.
    pub fn density_tail_bound_check(&self, grid: &[f64]) -> Result<TailBoundReport> {
        let hi = self.law.upper();
        let mut rows = Vec::with_capacity(grid.len());
        for &z in grid {
            if !(z >= 1.0 && z < hi) {
                return Err(out_of_domain("z", z, format!("[1, {hi})")));
            }
            let density = self.density_numeric(z);
            let bound = self.density_bound(z);
            rows.push(TailBoundRow {
                z,
                density,
                bound,
                pass: density <= bound + TAIL_BOUND_SLACK,
            });
        }
        let all_pass = rows.iter().all(|r| r.pass);
        Ok(TailBoundReport { rows, all_pass })
    }

    /// CSV `z,ccdf_exact,ccdf_limit,ccdf_empirical` against the projected
    /// samples in `sorted` (ascending).
    pub fn comparison_csv(&self, grid: &[f64], sorted: &[f64]) -> Result<Csv> {
        let mut csv = Csv::new(&["z", "ccdf_exact", "ccdf_limit", "ccdf_empirical"]);
        let m = sorted.len() as f64;
        for &z in grid {
            let above = sorted.len() - sorted.partition_point(|&v| v <= z);
            csv.row(&[
                Cell::Num(z),
                Cell::Num(self.projected_ccdf(z)?),
                Cell::Num(self.limit_ccdf(z)),
                Cell::Num(above as f64 / m),
            ]);
        }
        Ok(csv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundRow {
    pub z: f64,
    pub density: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBoundReport {
    pub rows: Vec<TailBoundRow>,
    pub all_pass: bool,
}

/// `E[(Z cos θ)²] = E[Z²]/2`, using `E[cos² θ] = 1/2` and independence.
pub fn projected_second_moment(law: &StepLaw) -> f64 {
    law.second_moment() / 2.0
}

/// `E[(Z cos θ)²] = ∫₀^{√n} 2y P{Z|cos θ| > y} dy`, by nested quadrature.
/// An independent route to [`projected_second_moment`].
pub fn projected_second_moment_quadrature(law: &StepLaw) -> f64 {
    let p = ProjectedLaw::new(*law);
    let below = quad::simpson(|y| 2.0 * y * p.ccdf_any(y), 0.0, 1.0, 1e-9);
    // log substitution above 1: dy = y ds
    let top = if law.is_gaussian() {
        law.upper().min(1.0 + 40.0 * law.sigma())
    } else {
        law.upper()
    };
    let above = quad::simpson(
        |s: f64| {
            let y = s.exp();
            2.0 * y * y * p.ccdf_any(y)
        },
        0.0,
        top.ln(),
        1e-9,
    );
    below + above
}

/// Log-spaced grid of `points` values in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let last = points - 1;
    (0..points)
        .map(|k| match k {
            0 => lo,
            k if k == last => hi,
            k => (a + (b - a) * k as f64 / last as f64).exp(),
        })
        .collect()
}
