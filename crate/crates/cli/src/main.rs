// SPDX-License-Identifier: Apache-2.0

mod args;
mod commands;
mod verify;

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use levy_exit::output::save_json;
use levy_exit::Error;
use serde::{Deserialize, Serialize};

use args::{Cli, Command};
use commands::Status;

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

pub const WORKERS_ENV: &str = "LEVY_EXIT_WORKERS";

/// Contents of `run.json`: everything needed to repeat a run.
#[derive(Debug, Serialize, Deserialize)]
struct RunRecord {
    tool: String,
    version: String,
    config: Command,
}

fn configure_workers(requested: Option<usize>) -> Result<(), String> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    match from_env.or(requested) {
        Some(0) => Err("worker count must be at least 1".into()),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| e.to_string()),
        None => Ok(()),
    }
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::TooManyAbandoned { .. } => EXIT_VALIDATION,
        _ => EXIT_USAGE,
    }
}

fn execute(mut command: Command) -> ExitCode {
    if let Err(e) = command.resolve() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let common = command.common_mut();
    if common.seed.is_none() {
        common.seed = Some(rand::random());
    }
    if let Err(e) = configure_workers(common.workers) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let out = common.out.clone();
    if let Err(e) = fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(EXIT_USAGE);
    }
    let record = RunRecord {
        tool: "levy-exit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: command.clone(),
    };
    if let Err(e) = save_json(&out.join("run.json"), &record) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }

    let result = match &command {
        Command::Sample(a) => commands::sample(a),
        Command::ExitTimes(a) => commands::exit_times(a),
        Command::Fit(a) => commands::fit(a),
        Command::PhaseScan(a) => commands::phase_scan(a),
        Command::Analytic(a) => commands::analytic(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Verify(a) => {
            return match verify::run(a) {
                Ok(report) => {
                    for c in &report.checks {
                        println!(
                            "{} {}: {}",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.detail
                        );
                    }
                    if report.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_INVARIANT)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_for(&e))
                }
            }
        }
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Invalid(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error ({}): {e}", command.name());
            ExitCode::from(exit_for(&e))
        }
    }
}

fn replay(path: &std::path::Path, out: Option<std::path::PathBuf>) -> ExitCode {
    let record: RunRecord = match fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|s| serde_json::from_str(&s).map_err(|e| e.to_string()))
    {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut command = record.config;
    if let Some(out) = out {
        command.common_mut().out = out;
    }
    execute(command)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match (cli.replay, cli.command) {
        (Some(path), _) => replay(&path, cli.out),
        (None, Some(command)) => execute(command),
        (None, None) => ExitCode::from(EXIT_USAGE),
    }
}
