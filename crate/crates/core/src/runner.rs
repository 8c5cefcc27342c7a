//! Batch scenario execution: the closed-loop tick pipeline, per-tick CSV
//! traces, aggregate summaries, the open-loop velocity benchmark, and the
//! walking-speed sweep.
//!
//! Tick pipeline, in order: render detections → fuse per leg → estimate
//! undetected legs from their sliding windows → midpoint → low-pass filter
//! → PID → saturation → wheel speeds, then the plant integrates the
//! command. One CSV row is written per tick, before the plant step, so row
//! count equals `duration × tick rate` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::control::{inverse_kinematics, pose_error, BodyTwist, PoseController, WheelSpeeds};
use crate::fusion::{fuse_leg, LegState};
use crate::human::{midpoint, FilterError, HumanFilter, LegSource};
use crate::occlusion::{classify, estimate, Condition, LegWindow};
use crate::rig::{LegSide, RigError, TagDetection};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{PlantParams, World};

/// Time constant of the safety decay commanded when the user is lost
/// entirely: the robot coasts to a stop instead of chasing a stale state.
pub const STOP_DECAY_TAU: f64 = 0.3;

/// Thresholds applied by `--check` on a single run.
pub const CHECK_MEAN_ABS_EMX: f64 = 0.04;
pub const CHECK_MEAN_ABS_EMY: f64 = 0.05;
pub const CHECK_MEAN_ABS_EMTHETA: f64 = 0.262;
/// Thresholds applied by `--check` on a speed sweep.
pub const CHECK_SWEEP_MEAN_POS: f64 = 0.06;
pub const CHECK_SWEEP_MAX_POS: f64 = 0.5;

pub const CSV_HEADER: &str = "t,gt_human_x,gt_human_y,gt_human_theta,\
est_human_x,est_human_y,est_human_theta,emx,emy,emtheta,\
cond_left,cond_right,n_detections,v_x_cmd,v_y_cmd,w_z_cmd,w1,w2,w3,w4";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("non-finite state at tick {tick}; run aborted")]
    NonFinite { tick: usize },
    #[error("internal pipeline fault at tick {tick}: {what}")]
    Internal { tick: usize, what: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Occlusion-regime tallies over a run, counted per leg-tick.
#[derive(Debug, Clone, Copy, Default, Serialize, PartialEq, Eq)]
pub struct CondCounts {
    pub mirror: usize,
    pub extrapolate: usize,
    pub hold: usize,
}

/// Aggregate of one scenario run; also serialized to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub duration_s: f64,
    pub rows: usize,
    pub mean_abs_emx: f64,
    pub mean_abs_emy: f64,
    pub mean_abs_emtheta: f64,
    /// Mean Euclidean position error, meters.
    pub mean_pos_error: f64,
    pub max_pos_error: f64,
    pub cond_counts: CondCounts,
    /// Ticks with no human state at all.
    pub absent_ticks: usize,
    pub detections_total: usize,
    /// Detections per camera divided by (ticks × tags).
    pub detection_rate: [f64; 4],
    pub check: Option<bool>,
}

impl RunSummary {
    /// `--check` verdict for a single run.
    pub fn within_tracking_bounds(&self) -> bool {
        self.mean_abs_emx <= CHECK_MEAN_ABS_EMX
            && self.mean_abs_emy <= CHECK_MEAN_ABS_EMY
            && self.mean_abs_emtheta <= CHECK_MEAN_ABS_EMTHETA
    }
}

fn cond_code(c: Condition) -> i32 {
    match c {
        Condition::MirrorOther => 1,
        Condition::Extrapolate => 2,
        Condition::HoldLast => 3,
        Condition::Insufficient => -1,
    }
}

struct LegOutcome {
    state: Option<LegState>,
    source: LegSource,
    /// CSV condition code: 0 detected, 1/2/3 the estimator regimes,
    /// −1 absent.
    code: i32,
}

/// Execute one scenario: writes `trace.csv` and `summary.json` under the
/// scenario's output directory and returns the summary.
pub fn run_scenario(s: &Scenario) -> Result<RunSummary, RunError> {
    s.validate()?;
    let rig = s.load_rig()?;
    let dt = s.plant.dt();
    let n_ticks = (s.duration_s * s.plant.tick_hz).round() as usize;
    let n_settle = (s.settle_s * s.plant.tick_hz).round() as usize;

    let mut world = World::new(s.gait.clone(), s.plant, s.controller.target);
    world.displace_robot(
        s.initial_robot_offset[0],
        s.initial_robot_offset[1],
        s.initial_robot_offset[2],
    );
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut win_left = LegWindow::new(LegSide::Left, s.estimator.window);
    let mut win_right = LegWindow::new(LegSide::Right, s.estimator.window);
    let mut filter = HumanFilter::new(s.filter.cutoff_hz, s.plant.tick_hz)?;
    let mut controller = PoseController::new(s.controller);
    let mut last_cmd = BodyTwist::zero();
    let mut last_est = (0.0, 0.0, 0.0);

    std::fs::create_dir_all(&s.output).map_err(io_err(&s.output))?;
    let csv_path = s.output.join("trace.csv");
    let mut csv = BufWriter::new(File::create(&csv_path).map_err(io_err(&csv_path))?);
    writeln!(csv, "{CSV_HEADER}").map_err(io_err(&csv_path))?;

    let mut sum_emx = 0.0;
    let mut sum_emy = 0.0;
    let mut sum_emtheta = 0.0;
    let mut sum_pos = 0.0;
    let mut max_pos = 0.0_f64;
    let mut counts = CondCounts::default();
    let mut absent_ticks = 0usize;
    let mut per_camera = [0usize; 4];

    for tick in 0..(n_settle + n_ticks) {
        // Pipeline clock runs through the warm-up; the logged time axis
        // starts at zero when measurement begins.
        let t = tick as f64 / s.plant.tick_hz;
        let measured = tick >= n_settle;
        let t_csv = (tick as f64 - n_settle as f64) / s.plant.tick_hz;

        let mut dets = world.render_detections(&rig, &s.noise, &mut rng);
        if let Some(f) = &s.forced_occlusion {
            if t_csv >= f.start_s && t_csv < f.start_s + f.duration_s {
                dets.retain(|d| rig.tag_side(d.tag) != f.side);
            }
        }
        if measured {
            for d in &dets {
                per_camera[d.camera.index()] += 1;
            }
        }

        let outcome = resolve_legs(&rig, s, &dets, &mut win_left, &mut win_right, t, tick)?;
        let (left, right) = outcome;

        let human_raw = match (&left.state, &right.state) {
            (Some(l), Some(r)) => {
                let mut h = midpoint(l, r);
                h.left_source = left.source;
                h.right_source = right.source;
                Some(h)
            }
            _ => None,
        };

        let cmd = match &human_raw {
            Some(raw) => {
                last_est = (raw.x, raw.y, raw.theta);
                let filtered = filter.step(raw);
                let err = pose_error(&filtered, &s.controller);
                controller.step(&err, dt)
            }
            None if left.state.is_some() || right.state.is_some() => last_cmd,
            None => last_cmd.scaled((-dt / STOP_DECAY_TAU).exp()),
        };
        last_cmd = cmd;
        if measured && human_raw.is_none() {
            absent_ticks += 1;
        }

        let wheels = inverse_kinematics(&cmd, &s.kinematics);
        let (emx, emy, emtheta) = world.ground_truth_error(&s.controller.target);

        if !cmd.is_finite()
            || ![emx, emy, emtheta, last_est.0, last_est.1, last_est.2]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(RunError::NonFinite { tick });
        }

        if measured {
            counts.mirror += (left.code == 1) as usize + (right.code == 1) as usize;
            counts.extrapolate += (left.code == 2) as usize + (right.code == 2) as usize;
            counts.hold += (left.code == 3) as usize + (right.code == 3) as usize;
            sum_emx += emx.abs();
            sum_emy += emy.abs();
            sum_emtheta += emtheta.abs();
            let pos = emx.hypot(emy);
            sum_pos += pos;
            max_pos = max_pos.max(pos);

            write_row(
                &mut csv,
                &csv_path,
                RowData {
                    t: t_csv,
                    gt: (
                        emx + s.controller.target[0],
                        emy + s.controller.target[1],
                        crate::geometry::wrap_angle(emtheta + s.controller.target[2]),
                    ),
                    est: last_est,
                    em: (emx, emy, emtheta),
                    cond: (left.code, right.code),
                    n_detections: dets.len(),
                    cmd,
                    wheels,
                },
            )?;
        }

        world.step(&cmd, dt);
    }
    csv.flush().map_err(io_err(&csv_path))?;

    let n = n_ticks as f64;
    let summary = RunSummary {
        seed: s.seed,
        duration_s: s.duration_s,
        rows: n_ticks,
        mean_abs_emx: sum_emx / n,
        mean_abs_emy: sum_emy / n,
        mean_abs_emtheta: sum_emtheta / n,
        mean_pos_error: sum_pos / n,
        max_pos_error: max_pos,
        cond_counts: counts,
        absent_ticks,
        detections_total: per_camera.iter().sum(),
        detection_rate: per_camera.map(|c| c as f64 / (n_ticks as f64 * 4.0)),
        check: None,
    };
    let summary_path = s.output.join("summary.json");
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(&summary_path, text).map_err(io_err(&summary_path))?;
    Ok(summary)
}

/// Fuse both legs, then bridge whichever is undetected. Independent regimes
/// (extrapolate/hold) are resolved first so a mirror estimate can lean on
/// the other leg even when that leg is itself bridged.
fn resolve_legs(
    rig: &crate::rig::RigConfig,
    s: &Scenario,
    dets: &[TagDetection],
    win_left: &mut LegWindow,
    win_right: &mut LegWindow,
    t: f64,
    tick: usize,
) -> Result<(LegOutcome, LegOutcome), RunError> {
    let fused_left = fuse_leg(rig, &s.gate, dets, LegSide::Left, t);
    let fused_right = fuse_leg(rig, &s.gate, dets, LegSide::Right, t);
    for (win, fused) in [
        (&mut *win_left, &fused_left),
        (&mut *win_right, &fused_right),
    ] {
        if let Some(state) = fused {
            win.observe(*state).map_err(|e| RunError::Internal {
                tick,
                what: e.to_string(),
            })?;
        }
    }

    let cond_left = fused_left
        .is_none()
        .then(|| classify(win_left, &s.estimator, t));
    let cond_right = fused_right
        .is_none()
        .then(|| classify(win_right, &s.estimator, t));
    let indep = |win: &LegWindow, cond: &Option<Condition>| match cond {
        Some(Condition::Extrapolate) | Some(Condition::HoldLast) => {
            estimate(win, None, &s.estimator, t)
        }
        _ => None,
    };
    let indep_left = indep(win_left, &cond_left);
    let indep_right = indep(win_right, &cond_right);

    let resolve = |fused: Option<LegState>,
                   cond: Option<Condition>,
                   indep_own: Option<LegState>,
                   other: Option<LegState>,
                   win: &LegWindow| {
        match fused {
            Some(state) => LegOutcome {
                state: Some(state),
                source: LegSource::Detected,
                code: 0,
            },
            None => {
                let cond = cond.expect("classified when undetected");
                let state = match cond {
                    Condition::MirrorOther => estimate(win, other.as_ref(), &s.estimator, t),
                    Condition::Insufficient => None,
                    _ => indep_own,
                };
                LegOutcome {
                    code: if state.is_some() { cond_code(cond) } else { -1 },
                    source: if state.is_some() {
                        LegSource::Estimated
                    } else {
                        LegSource::Absent
                    },
                    state,
                }
            }
        }
    };
    let left = resolve(
        fused_left,
        cond_left,
        indep_left,
        fused_right.or(indep_right),
        win_left,
    );
    let right = resolve(
        fused_right,
        cond_right,
        indep_right,
        fused_left.or(indep_left),
        win_right,
    );
    Ok((left, right))
}

struct RowData {
    t: f64,
    gt: (f64, f64, f64),
    est: (f64, f64, f64),
    em: (f64, f64, f64),
    cond: (i32, i32),
    n_detections: usize,
    cmd: BodyTwist,
    wheels: WheelSpeeds,
}

fn write_row(csv: &mut impl Write, path: &Path, r: RowData) -> Result<(), RunError> {
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.t,
        r.gt.0,
        r.gt.1,
        r.gt.2,
        r.est.0,
        r.est.1,
        r.est.2,
        r.em.0,
        r.em.1,
        r.em.2,
        r.cond.0,
        r.cond.1,
        r.n_detections,
        r.cmd.vx,
        r.cmd.vy,
        r.cmd.wz,
        r.wheels.w1,
        r.wheels.w2,
        r.wheels.w3,
        r.wheels.w4,
    )
    .map_err(io_err(path))
}

/// Open-loop velocity tracking through the plant lag: sinusoidal commands
/// on all three axes for five cycles.
#[derive(Debug, Clone, Serialize)]
pub struct VelocityBenchmark {
    pub vmax: f64,
    pub freq_hz: f64,
    /// Mean absolute tracking error per axis (vx, vy, wz).
    pub mean_abs_err: [f64; 3],
}

pub fn run_velocity_benchmark(vmax: f64, freq_hz: f64, plant: &PlantParams) -> VelocityBenchmark {
    let dt = plant.dt();
    let n = (5.0 / freq_hz * plant.tick_hz).round() as usize;
    let mut actual = [0.0_f64; 3];
    let mut err = [0.0_f64; 3];
    for tick in 0..n {
        let t = tick as f64 * dt;
        let c = vmax * (std::f64::consts::TAU * freq_hz * t).sin();
        let cmd = [c, c, c];
        for axis in 0..3 {
            actual[axis] += dt / plant.tau * (cmd[axis] - actual[axis]);
            err[axis] += (cmd[axis] - actual[axis]).abs();
        }
    }
    VelocityBenchmark {
        vmax,
        freq_hz,
        mean_abs_err: err.map(|e| e / n as f64),
    }
}

/// One entry of a walking-speed sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub speed: f64,
    pub summary: RunSummary,
}

/// Run the base scenario at each speed, outputs under
/// `<output>/sweep_<speed>/`, plus a combined `sweep.json`.
pub fn run_sweep(base: &Scenario, speeds: &[f64]) -> Result<Vec<SweepEntry>, RunError> {
    let mut entries = Vec::with_capacity(speeds.len());
    for (i, &speed) in speeds.iter().enumerate() {
        let mut s = base.clone();
        s.gait.speed = speed;
        s.seed = base.seed.wrapping_add(i as u64);
        s.output = base.output.join(format!("sweep_{speed:.4}"));
        let summary = run_scenario(&s)?;
        entries.push(SweepEntry { speed, summary });
    }
    std::fs::create_dir_all(&base.output).map_err(io_err(&base.output))?;
    let path = base.output.join("sweep.json");
    std::fs::write(&path, serde_json::to_string_pretty(&entries)?).map_err(io_err(&path))?;
    Ok(entries)
}

/// Parse a `start:end:count` speed specification into evenly spaced values.
pub fn parse_speed_spec(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:end:count, got {spec:?}"));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| "bad start value".to_string())?;
    let end: f64 = parts[1].parse().map_err(|_| "bad end value".to_string())?;
    let count: usize = parts[2].parse().map_err(|_| "bad count".to_string())?;
    if count < 1 {
        return Err("count must be >= 1".into());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let step = (end - start) / (count - 1) as f64;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}
