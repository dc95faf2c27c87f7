// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levy_exit::mobility::{ModelKind, DEFAULT_CD, DEFAULT_STEP_CAP};
use levy_exit::scaling::{default_n_grid, Statistic, DEFAULT_TRIALS};
use levy_exit::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "levy-exit",
    version,
    about = "First exit times of Levy flights and Levy walks"
)]
#[command(args_conflicts_with_subcommands = true, arg_required_else_help = true)]
pub struct Cli {
    /// Re-run the configuration stored in a run.json sidecar.
    #[arg(long, value_name = "RUN_JSON")]
    pub replay: Option<PathBuf>,

    /// Output directory for --replay (defaults to the recorded one).
    #[arg(long, requires = "replay")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Draw step lengths and directions.
    Sample(SampleArgs),
    /// Simulate a batch of first exit times.
    ExitTimes(ExitTimesArgs),
    /// Fit the scaling exponent of exit times across network sizes.
    Fit(FitArgs),
    /// Walk and flight exponents across a grid of alpha.
    PhaseScan(PhaseScanArgs),
    /// Evaluate the eigen-series exit-time law of the projected process.
    Analytic(AnalyticArgs),
    /// Compare the Hoeffding-style tail bounds with simulation.
    Bounds(BoundsArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

impl Command {
    pub fn common_mut(&mut self) -> &mut Common {
        match self {
            Command::Sample(a) => &mut a.common,
            Command::ExitTimes(a) => &mut a.common,
            Command::Fit(a) => &mut a.common,
            Command::PhaseScan(a) => &mut a.common,
            Command::Analytic(a) => &mut a.common,
            Command::Bounds(a) => &mut a.common,
            Command::Verify(a) => &mut a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::ExitTimes(_) => "exit-times",
            Command::Fit(_) => "fit",
            Command::PhaseScan(_) => "phase-scan",
            Command::Analytic(_) => "analytic",
            Command::Bounds(_) => "bounds",
            Command::Verify(_) => "verify",
        }
    }

    /// Resolves site presets into alpha values.
    pub fn resolve(&mut self) -> Result<()> {
        match self {
            Command::Sample(a) => a.alpha.resolve(),
            Command::ExitTimes(a) => a.alpha.resolve(),
            Command::Fit(a) => a.alpha.resolve(),
            Command::Analytic(a) => a.alpha.resolve(),
            Command::Bounds(a) => a.alpha.resolve(),
            Command::PhaseScan(_) | Command::Verify(_) => Ok(()),
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// Master seed. A random one is drawn and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Directory for all output files.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads (LEVY_EXIT_WORKERS takes precedence).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Also write SVG plots.
    #[arg(long)]
    pub emit_svg: bool,
}

impl Common {
    pub fn seed(&self) -> u64 {
        self.seed.expect("seed resolved before running")
    }
}

/// Field sites with measured alpha values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Site {
    Kaist,
    Ncsu,
    NewYorkCity,
    DisneyWorld,
    StateFair,
}

impl Site {
    pub fn alpha(self) -> f64 {
        match self {
            Site::Kaist => 0.53,
            Site::Ncsu => 1.27,
            Site::NewYorkCity => 1.62,
            Site::DisneyWorld => 1.20,
            Site::StateFair => 1.81,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AlphaArg {
    /// Step-length exponent in (0, 2].
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Take alpha from a site preset.
    #[arg(long, value_enum, ignore_case = true)]
    pub site: Option<Site>,
}

impl AlphaArg {
    fn resolve(&mut self) -> Result<()> {
        match (self.alpha, self.site) {
            (None, None) => Err(Error::InvalidParameter(
                "one of --alpha or --site is required".into(),
            )),
            (Some(a), Some(s)) if a != s.alpha() => Err(Error::InvalidParameter(format!(
                "--alpha {a} disagrees with --site {s:?} (alpha {})",
                s.alpha()
            ))),
            (_, Some(s)) => {
                self.alpha = Some(s.alpha());
                Ok(())
            }
            (Some(_), None) => Ok(()),
        }
    }

    pub fn value(&self) -> f64 {
        self.alpha.expect("alpha resolved before running")
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,

    /// Network size.
    #[arg(long)]
    pub n: f64,

    /// Number of steps to draw.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,

    /// Scale of the Gaussian law at alpha = 2.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExitTimesArgs {
    /// flight or walk.
    #[arg(long)]
    pub model: ModelKind,

    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,

    #[arg(long)]
    pub n: f64,

    /// Exit radius as a multiple of sqrt(n).
    #[arg(long, default_value_t = DEFAULT_CD)]
    pub c_d: f64,

    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,

    /// Steps after which a trial is abandoned.
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: u64,

    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long)]
    pub model: ModelKind,

    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,

    /// Comma-separated geometric grid of network sizes.
    #[arg(long, value_delimiter = ',', default_values_t = default_n_grid())]
    pub n_grid: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_CD)]
    pub c_d: f64,

    /// Trials per grid point.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,

    /// q10, q50, q90 or mean.
    #[arg(long, default_value_t = Statistic::Q50)]
    pub statistic: Statistic,

    /// Fit an existing table (n,q10,q50,q90,mean,trials,abandoned) instead
    /// of simulating.
    #[arg(long)]
    pub table: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PhaseScanArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.4, 0.7, 1.0, 1.4, 1.8])]
    pub alphas: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_values_t = default_n_grid())]
    pub n_grid: Vec<f64>,

    #[arg(long, default_value_t = DEFAULT_CD)]
    pub c_d: f64,

    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,

    #[arg(long, default_value_t = Statistic::Q50)]
    pub statistic: Statistic,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyticArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,

    /// Half-width of the trapping interval [0, 2r].
    #[arg(long)]
    pub r: Option<f64>,

    /// Network size; sets r = c_d sqrt(n/2) when --r is absent and, at
    /// alpha = 2, the diffusion coefficient to half the projected step
    /// variance.
    #[arg(long)]
    pub n: Option<f64>,

    #[arg(long, default_value_t = DEFAULT_CD)]
    pub c_d: f64,

    /// Diffusion coefficient F.
    #[arg(long)]
    pub diffusion: Option<f64>,

    /// Largest time on the grid (default 3 r^alpha / F).
    #[arg(long)]
    pub t_max: Option<f64>,

    #[arg(long, default_value_t = 201)]
    pub points: usize,

    /// Overlay a simulated projected exit-time CDF with this many trials.
    #[arg(long)]
    pub overlay_trials: Option<u64>,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArg,

    #[arg(long)]
    pub n: f64,

    #[arg(long, default_value_t = DEFAULT_CD)]
    pub c_d: f64,

    /// Largest k compared.
    #[arg(long, default_value_t = 64)]
    pub horizon: u64,

    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    /// Also tabulate the vanishing bound with this epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Largest log2(n) of the vanishing grid, which starts at 2^10.
    #[arg(long, default_value_t = 60)]
    pub vanishing_max_log2: i32,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Sample from a law whose normalization constant is off by 50%.
    Normalization,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Trials per Monte Carlo check.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,

    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,

    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}
