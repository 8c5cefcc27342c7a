//! Close-range human-following stack for a Mecanum-wheel cane robot.
//!
//! The robot localizes the user's lower legs from fiducial tags seen by four
//! body-mounted cameras, fuses the per-camera observations into left/right
//! leg states, bridges occlusion gaps with a sliding-window estimator, tracks
//! the leg midpoint as the human state, and holds a commanded relative pose
//! with a PID controller mapped to wheel speeds through Mecanum inverse
//! kinematics.
//!
//! The crate also ships a deterministic closed-loop simulator: a planar
//! walking-gait model, a camera visibility model with leg-on-leg occlusion
//! and seeded sensor noise, and a first-order velocity plant. The
//! [`runner`] module drives full scenario runs and writes CSV traces and
//! JSON summaries; the `canebot` CLI wraps it.

// Config validation writes `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which a plain `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod fusion;
pub mod geometry;
pub mod human;
pub mod occlusion;
pub mod rig;
pub mod runner;
pub mod scenario;
pub mod sim;

pub use control::{BodyTwist, ControllerParams, KinematicsParams, PoseController, WheelSpeeds};
pub use fusion::{fuse_leg, gate, GateRegion, LegState};
pub use geometry::{wrap_angle, GeometryError, Pose3, Rot3};
pub use human::{midpoint, HumanFilter, HumanState, LegSource};
pub use occlusion::{Condition, EstimatorParams, LegWindow};
pub use rig::{CameraId, LegSide, RigConfig, TagDetection, TagId};
pub use runner::{run_scenario, run_velocity_benchmark, RunSummary};
pub use scenario::Scenario;
pub use sim::{GaitParams, PathSpec, PlantParams, SensorNoise, World};
