//! Scenario configuration: one JSON file describes a full closed-loop run.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::control::{ControllerParams, KinematicsParams};
use crate::fusion::GateRegion;
use crate::human::FilterParams;
use crate::occlusion::EstimatorParams;
use crate::rig::{LegSide, RigConfig, RigError};
use crate::sim::{GaitParams, PlantParams, SensorNoise};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Rig(#[from] RigError),
}

/// Suppress all detections of one leg for a time window. Used to probe how
/// the estimator bridges a known gap; the noise stream is unaffected.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcedOcclusion {
    pub side: LegSide,
    pub start_s: f64,
    pub duration_s: f64,
}

/// Everything a closed-loop run needs. Every field has a default, so `{}`
/// is a valid scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Path to a rig JSON; the built-in default rig when omitted. Relative
    /// paths resolve against the scenario file's directory.
    pub rig: Option<PathBuf>,
    pub gait: GaitParams,
    pub noise: SensorNoise,
    pub gate: GateRegion,
    pub controller: ControllerParams,
    pub kinematics: KinematicsParams,
    pub estimator: EstimatorParams,
    pub plant: PlantParams,
    pub filter: FilterParams,
    pub duration_s: f64,
    /// Warm-up walking time before the measured window: the full pipeline
    /// runs but nothing is logged, mirroring a familiarization stretch
    /// before a trial. Metrics and the trace cover only the measured window.
    pub settle_s: f64,
    pub seed: u64,
    /// Directory receiving `trace.csv` and `summary.json`.
    pub output: PathBuf,
    pub forced_occlusion: Option<ForcedOcclusion>,
    /// Body-frame displacement applied to the robot's starting pose.
    pub initial_robot_offset: [f64; 3],
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            rig: None,
            gait: GaitParams::default(),
            noise: SensorNoise::default(),
            gate: GateRegion::default(),
            controller: ControllerParams::default(),
            kinematics: KinematicsParams::default(),
            estimator: EstimatorParams::default(),
            plant: PlantParams::default(),
            filter: FilterParams::default(),
            duration_s: 60.0,
            settle_s: 5.0,
            seed: 0,
            output: PathBuf::from("out"),
            forced_occlusion: None,
            initial_robot_offset: [0.0; 3],
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Load a scenario file, resolving a relative rig path against the
    /// scenario's own directory.
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut s = Self::from_json(&text)?;
        if let Some(rig) = &s.rig {
            if rig.is_relative() {
                if let Some(dir) = path.parent() {
                    s.rig = Some(dir.join(rig));
                }
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s > 0.0) {
            return Err(ScenarioError::Invalid("duration_s must be > 0".into()));
        }
        if self.settle_s < 0.0 {
            return Err(ScenarioError::Invalid("settle_s must be >= 0".into()));
        }
        for check in [
            self.gait.validate(),
            self.noise.validate(),
            self.gate.validate(),
            self.controller.validate(),
            self.kinematics.validate(),
            self.estimator.validate(),
            self.plant.validate(),
        ] {
            check.map_err(ScenarioError::Invalid)?;
        }
        if let Some(f) = &self.forced_occlusion {
            if !(f.duration_s > 0.0) || f.start_s < 0.0 {
                return Err(ScenarioError::Invalid(
                    "forced_occlusion needs start_s >= 0 and duration_s > 0".into(),
                ));
            }
        }
        Ok(())
    }

    /// The rig this scenario runs with.
    pub fn load_rig(&self) -> Result<RigConfig, ScenarioError> {
        match &self.rig {
            None => Ok(RigConfig::default()),
            Some(path) => Ok(RigConfig::from_file(path)?),
        }
    }
}
