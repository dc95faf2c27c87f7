// SPDX-License-Identifier: Apache-2.0

//! First exit times of Lévy flights and Lévy walks from a disc of radius
//! `c_d √n`, and the scaling of those times with the network size `n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`stepdist`]: the truncated power-law step-length law.
//! * [`mobility`]: flight and walk trajectories with first-exit detection.
//! * [`fet_mc`]: parallel, seed-deterministic batches of exit times.
//! * [`fet_analytic`]: the eigenfunction series for the 1-D exit-time law.
//! * [`projection`]: the x-projected step law and its large-`n` limit.
//! * [`bounds`]: Hoeffding-style tail bounds on the projected process.
//! * [`scaling`]: exponent fits across grids of `n`.

pub mod bounds;
pub mod error;
pub mod fet_analytic;
pub mod fet_mc;
pub mod mobility;
pub mod output;
pub mod projection;
pub mod quad;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod stepdist;

pub use error::{Error, Result};
pub use fet_analytic::SurvivalSeries;
pub use fet_mc::{run_batch, Batch, BatchConfig, EmpiricalFet};
pub use mobility::{ExitRecord, ModelKind};
pub use projection::{cstar, ProjectedLaw};
pub use scaling::{ExponentFit, ScalingTable, Statistic};
pub use stepdist::StepLaw;
