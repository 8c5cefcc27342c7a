//! `canebot` — batch runner for closed-loop following scenarios.
//!
//! Subcommands: `run` for scenario executions, `bench-velocity` for the
//! open-loop plant tracking benchmark, `sweep` for walking-speed series.
//! Exit codes: 0 success, 1 error, 2 threshold violation under `--check`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use canebot_core::runner::{self, run_scenario, run_sweep, run_velocity_benchmark, RunSummary};
use canebot_core::scenario::Scenario;
use canebot_core::sim::PlantParams;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "canebot",
    version,
    about = "Cane-robot following: scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute closed-loop scenario runs (CSV trace + JSON summary each)
    Run {
        /// Scenario JSON files
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Output root; each scenario writes to <out>/<scenario-stem>/
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override every scenario's RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Exit 2 if any run violates the tracking-error bounds
        #[arg(long)]
        check: bool,
        /// Run independent scenarios on worker threads
        #[arg(long)]
        parallel: bool,
    },
    /// Open-loop sinusoidal velocity-tracking benchmark through the plant
    BenchVelocity {
        /// Peak commanded speed, m/s (and rad/s on the yaw axis)
        #[arg(long)]
        vmax: f64,
        /// Sinusoid frequency, Hz
        #[arg(long)]
        freq: f64,
        /// Plant velocity time constant, seconds
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        /// Tick rate, Hz
        #[arg(long, default_value_t = 120.0)]
        rate: f64,
    },
    /// Re-run one scenario across a range of walking speeds
    Sweep {
        /// Base scenario JSON
        scenario: PathBuf,
        /// Speed range as start:end:count, e.g. 0.75:1.45:7
        #[arg(long)]
        speeds: String,
        /// Output root (defaults to the scenario's output directory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 2 if any speed violates the sweep bounds
        #[arg(long)]
        check: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Returns Ok(false) when a `--check` bound was violated.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run {
            scenarios,
            out,
            seed,
            check,
            parallel,
        } => cmd_run(scenarios, out, seed, check, parallel),
        Cmd::BenchVelocity {
            vmax,
            freq,
            tau,
            rate,
        } => cmd_bench(vmax, freq, tau, rate),
        Cmd::Sweep {
            scenario,
            speeds,
            out,
            check,
        } => cmd_sweep(scenario, speeds, out, check),
    }
}

fn load_jobs(
    scenarios: &[PathBuf],
    out: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<Vec<(String, Scenario)>> {
    scenarios
        .iter()
        .map(|path| {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            let mut s =
                Scenario::from_file(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(root) = out {
                s.output = root.join(&name);
            }
            Ok((name, s))
        })
        .collect()
}

fn print_summary(name: &str, s: &RunSummary, check: bool) {
    let verdict = if !check {
        String::new()
    } else if s.within_tracking_bounds() {
        "  [check: pass]".into()
    } else {
        "  [check: FAIL]".into()
    };
    println!(
        "{name}: rows={} mean|emx|={:.4} m mean|emy|={:.4} m mean|emth|={:.4} rad \
         mean_pos={:.4} m max_pos={:.4} m detections={}{verdict}",
        s.rows,
        s.mean_abs_emx,
        s.mean_abs_emy,
        s.mean_abs_emtheta,
        s.mean_pos_error,
        s.max_pos_error,
        s.detections_total,
    );
}

fn cmd_run(
    scenarios: Vec<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    check: bool,
    parallel: bool,
) -> Result<bool> {
    let jobs = load_jobs(&scenarios, out.as_ref(), seed)?;
    let results: Vec<(String, Result<RunSummary>)> = if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|(name, s)| {
                    let name = name.clone();
                    let handle = scope.spawn(move || run_scenario(s));
                    (name, handle)
                })
                .collect();
            handles
                .into_iter()
                .map(|(name, h)| {
                    let res = h
                        .join()
                        .map_err(|_| anyhow::anyhow!("worker panicked"))
                        .and_then(|r| r.map_err(Into::into));
                    (name, res)
                })
                .collect()
        })
    } else {
        jobs.iter()
            .map(|(name, s)| (name.clone(), run_scenario(s).map_err(Into::into)))
            .collect()
    };

    let mut all_ok = true;
    for (name, res) in results {
        let summary = res.with_context(|| format!("running {name}"))?;
        print_summary(&name, &summary, check);
        if check && !summary.within_tracking_bounds() {
            all_ok = false;
        }
    }
    Ok(all_ok)
}

fn cmd_bench(vmax: f64, freq: f64, tau: f64, rate: f64) -> Result<bool> {
    if vmax <= 0.0 || freq <= 0.0 {
        bail!("bench-velocity needs vmax > 0 and freq > 0");
    }
    let plant = PlantParams { tau, tick_hz: rate };
    plant
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid plant: {e}"))?;
    let bench = run_velocity_benchmark(vmax, freq, &plant);
    println!("{}", serde_json::to_string_pretty(&bench)?);
    Ok(true)
}

fn cmd_sweep(scenario: PathBuf, speeds: String, out: Option<PathBuf>, check: bool) -> Result<bool> {
    let speeds = runner::parse_speed_spec(&speeds).map_err(|e| anyhow::anyhow!(e))?;
    let mut base = Scenario::from_file(&scenario)
        .with_context(|| format!("loading {}", scenario.display()))?;
    if let Some(root) = out {
        base.output = root;
    }
    let entries = run_sweep(&base, &speeds)?;
    let mut all_ok = true;
    for e in &entries {
        let ok = e.summary.mean_pos_error <= runner::CHECK_SWEEP_MEAN_POS
            && e.summary.max_pos_error < runner::CHECK_SWEEP_MAX_POS;
        println!(
            "speed {:.3} m/s: mean_pos={:.4} m max_pos={:.4} m{}",
            e.speed,
            e.summary.mean_pos_error,
            e.summary.max_pos_error,
            if !check {
                ""
            } else if ok {
                "  [check: pass]"
            } else {
                "  [check: FAIL]"
            }
        );
        if check && !ok {
            all_ok = false;
        }
    }
    Ok(all_ok)
}
