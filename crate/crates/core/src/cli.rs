//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad arguments, configs, files),
//! 2 on numerical failures, whose error name is printed on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::io::config::{
    parse_run_config, parse_sweep_config, read_file, resolve_out_dir, RunConfig,
};
use crate::io::csv::{strided, write_sweep, write_trajectory};
use crate::io::svg::emit_svg;
use crate::jacobian::Dims;
use crate::model::SystemState;
use crate::scenarios::{preset, run_scenario, run_sweep, RegimeDiagnostics, ScenarioSpec};
use crate::selfcheck;
use crate::stability::{
    classify_equilibrium, find_all_fixed_points, find_fixed_point, StabilityOptions,
    StabilityReport,
};

#[derive(Debug, Parser)]
#[command(
    name = "nevdyn",
    version,
    about = "TFV/NEV adoption dynamics with externality feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a run described by a JSON config and write its artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every k-th record in the CSV and chart (overrides the config).
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run a named preset and print its regime diagnostics.
    Scenario {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Evaluate a parameter grid and write the regime map as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; defaults to the available hardware parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List every fixed point of the fixed-fleet system at the config's N.
    Equilibria {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        /// 3 for (x, pi_F, pi_E), 2 for (x, pi_F) with pi_E = 0.
        #[arg(long, default_value_t = 3)]
        dims: usize,
    },
    /// Locate the fixed point nearest `--at` and report its local stability.
    Stability {
        #[arg(long)]
        config: PathBuf,
        /// Starting guess `x,pi_F,pi_E` (or `x,pi_F` in 2D).
        #[arg(long)]
        at: String,
        #[arg(long, default_value_t = 3)]
        dims: usize,
    },
    /// Run the built-in invariant checks.
    Selfcheck,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            if e.is_usage() {
                1
            } else {
                2
            }
        }
    }
}

fn print_json<S: Serialize>(value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

#[derive(Serialize)]
struct RunReport<'a> {
    scenario: &'a ScenarioSpec,
    records: usize,
    stride: usize,
    diagnostics: &'a RegimeDiagnostics,
}

fn emit_artifacts(
    cfg: &RunConfig,
    spec: &ScenarioSpec,
    trajectory: &Trajectory<f64>,
    diagnostics: &RegimeDiagnostics,
    dir: &Path,
) -> Result<()> {
    ensure_dir(dir)?;
    let stem = dir.join(&spec.name);
    if cfg.emit.csv {
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &trajectory.records, cfg.stride)?;
        write_file(&stem.with_extension("csv"), &buf)?;
    }
    if cfg.emit.svg {
        let rows = strided(&trajectory.records, cfg.stride)?;
        let svg = emit_svg(&rows, &cfg.channels, &spec.name)?;
        write_file(&stem.with_extension("svg"), svg.as_bytes())?;
    }
    if cfg.emit.report {
        let report = RunReport {
            scenario: spec,
            records: trajectory.len(),
            stride: cfg.stride,
            diagnostics,
        };
        let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
        write_file(&stem.with_extension("json"), format!("{text}\n").as_bytes())?;
    }
    Ok(())
}

fn run_config(mut cfg: RunConfig, out: Option<PathBuf>, stride: Option<usize>) -> Result<i32> {
    if let Some(k) = stride {
        cfg.stride = k;
    }
    cfg.validate()?;
    let spec = cfg.scenario()?;
    let (trajectory, diagnostics) = run_scenario(&spec)?;
    let dir = resolve_out_dir(out.as_deref(), cfg.out_dir.as_deref());
    emit_artifacts(&cfg, &spec, &trajectory, &diagnostics, &dir)?;
    print_json(&diagnostics)?;
    Ok(0)
}

fn parse_dims(dims: usize) -> Result<Dims> {
    match dims {
        2 => Ok(Dims::TwoD),
        3 => Ok(Dims::ThreeD),
        other => Err(Error::WrongDims(format!(
            "fixed points exist only for the 2D or 3D fixed-fleet system, got {other}"
        ))),
    }
}

fn parse_at(at: &str, dims: Dims, n: f64) -> Result<SystemState<f64>> {
    let values: Vec<f64> = at
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidConfig(format!("--at {at:?}: {e}")))?;
    match (dims, values.as_slice()) {
        (Dims::TwoD, [x, pi_f]) | (Dims::TwoD, [x, pi_f, _]) => {
            Ok(SystemState::new(*x, *pi_f, 0.0, n))
        }
        (Dims::ThreeD, [x, pi_f, pi_e]) => Ok(SystemState::new(*x, *pi_f, *pi_e, n)),
        _ => Err(Error::InvalidConfig(format!(
            "--at expects x,pi_F,pi_E (or x,pi_F in 2D), got {at:?}"
        ))),
    }
}

#[derive(Serialize)]
struct EquilibriaReport {
    #[serde(rename = "N")]
    n: f64,
    dims: Dims,
    grid: usize,
    equilibria: Vec<StabilityReport<f64>>,
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Simulate {
            config,
            out,
            stride,
        } => {
            let cfg = parse_run_config(&read_file(&config)?)?;
            run_config(cfg, out, stride)
        }
        Command::Scenario { name, out, stride } => {
            preset(&name)?;
            run_config(RunConfig::for_preset(&name), out, stride)
        }
        Command::Sweep { config, jobs, out } => {
            if jobs == Some(0) {
                return Err(Error::InvalidConfig("--jobs must be >= 1".into()));
            }
            let cfg = parse_sweep_config(&read_file(&config)?)?;
            let sweep = cfg.sweep()?;
            let rows = run_sweep(&sweep, jobs)?;
            let dir = resolve_out_dir(out.as_deref(), cfg.out_dir.as_deref());
            ensure_dir(&dir)?;
            let mut buf = Vec::new();
            write_sweep(&mut buf, &sweep, &rows)?;
            write_file(&dir.join("sweep.csv"), &buf)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            print_json(&serde_json::json!({
                "cells": rows.len(),
                "failed": failed,
                "table": dir.join("sweep.csv"),
            }))?;
            Ok(0)
        }
        Command::Equilibria { config, grid, dims } => {
            let spec = parse_run_config(&read_file(&config)?)?.scenario()?;
            let dims = parse_dims(dims)?;
            let opts = StabilityOptions::default();
            let n = spec.initial.n;
            let fps = find_all_fixed_points(&spec.params, n, dims, grid, &opts)?;
            let equilibria = fps
                .iter()
                .map(|fp| classify_equilibrium(&spec.params, fp, &opts))
                .collect::<Result<Vec<_>>>()?;
            print_json(&EquilibriaReport {
                n,
                dims,
                grid,
                equilibria,
            })?;
            Ok(0)
        }
        Command::Stability { config, at, dims } => {
            let spec = parse_run_config(&read_file(&config)?)?.scenario()?;
            let dims = parse_dims(dims)?;
            let guess = parse_at(&at, dims, spec.initial.n)?;
            let opts = StabilityOptions::default();
            let fp = find_fixed_point(&spec.params, &guess, dims, &opts)?;
            print_json(&classify_equilibrium(&spec.params, &fp, &opts)?)?;
            Ok(0)
        }
        Command::Selfcheck => {
            let outcomes = selfcheck::run_all();
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                println!("[{tag}] {}: {}", o.name, o.detail);
            }
            Ok(if outcomes.iter().all(|o| o.passed) {
                0
            } else {
                2
            })
        }
    }
}
