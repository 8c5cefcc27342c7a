//! Fixed geometry of the sensing rig: the two-faced tag attachment worn on
//! each lower leg and the four camera extrinsics on the robot body.
//!
//! Frames follow one convention throughout: `x` forward, `y` left, `z` up,
//! with the body frame on the robot chassis at camera height. A camera frame
//! is the body frame rotated by the camera's mounting yaw, so the boresight
//! is the camera's +X axis.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::geometry::{Pose3, Rot3};

pub const NUM_CAMERAS: usize = 4;
pub const NUM_TAGS: usize = 4;

#[derive(Debug, Error)]
pub enum RigError {
    #[error("camera id {0} out of range (expected 0..4)")]
    UnknownCamera(usize),
    #[error("tag id {0} out of range (expected 0..4)")]
    UnknownTag(usize),
    #[error("invalid rig config: {0}")]
    InvalidConfig(String),
    #[error("failed to read rig config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse rig config: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Which leg a tag is strapped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegSide {
    Left,
    Right,
}

impl LegSide {
    pub fn other(self) -> LegSide {
        match self {
            LegSide::Left => LegSide::Right,
            LegSide::Right => LegSide::Left,
        }
    }
}

/// Validated camera index (0..4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CameraId(u8);

impl CameraId {
    pub fn new(id: usize) -> Result<Self, RigError> {
        if id < NUM_CAMERAS {
            Ok(CameraId(id as u8))
        } else {
            Err(RigError::UnknownCamera(id))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Validated tag index (0..4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagId(u8);

impl TagId {
    pub fn new(id: usize) -> Result<Self, RigError> {
        if id < NUM_TAGS {
            Ok(TagId(id as u8))
        } else {
            Err(RigError::UnknownTag(id))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One observation of a tag by a camera: the tag pose expressed in the
/// camera frame, stamped with the capture time.
///
/// "Tag not seen" is represented by the absence of a `TagDetection` for the
/// (camera, tag) pair, not by a sentinel pose.
#[derive(Debug, Clone, Copy)]
pub struct TagDetection {
    pub camera: CameraId,
    pub tag: TagId,
    /// Tag pose in the camera frame.
    pub pose: Pose3,
    /// Capture time, seconds on the tick clock.
    pub timestamp: f64,
}

/// Rig geometry: attachment size parameters, camera extrinsics, tag-to-leg
/// assignment. Immutable after load.
#[derive(Debug, Clone)]
pub struct RigConfig {
    /// Lower-leg radius, meters.
    pub leg_radius: f64,
    /// Wedge face length parameter, meters.
    pub attachment_arm: f64,
    /// In-face offset of the tag center, meters.
    pub attachment_offset: f64,
    cameras: [Pose3; NUM_CAMERAS],
    tag_map: [LegSide; NUM_TAGS],
}

impl Default for RigConfig {
    /// Default rig: four cameras fanned across the forward arc at yaws
    /// {+45°, +15°, −15°, −45°} on a 0.10 m radius, tags 0/1 on the left
    /// leg and 2/3 on the right.
    fn default() -> Self {
        let radius = 0.10;
        let yaws_deg = [45.0, 15.0, -15.0, -45.0];
        let cameras = yaws_deg.map(|deg: f64| {
            let yaw = deg.to_radians();
            Pose3::new(
                Rot3::rot_z(yaw),
                Vector3::new(radius * yaw.cos(), radius * yaw.sin(), 0.0),
            )
        });
        RigConfig {
            leg_radius: 0.05,
            attachment_arm: 0.04,
            attachment_offset: 0.02,
            cameras,
            tag_map: [LegSide::Left, LegSide::Left, LegSide::Right, LegSide::Right],
        }
    }
}

impl RigConfig {
    /// Camera pose in the body frame.
    pub fn camera_pose(&self, camera: CameraId) -> &Pose3 {
        &self.cameras[camera.index()]
    }

    /// Leg a tag belongs to.
    pub fn tag_side(&self, tag: TagId) -> LegSide {
        self.tag_map[tag.index()]
    }

    /// The two tags worn on `side`, in ascending id order.
    pub fn tags_for_side(&self, side: LegSide) -> impl Iterator<Item = TagId> + '_ {
        (0..NUM_TAGS)
            .map(|i| TagId(i as u8))
            .filter(move |t| self.tag_map[t.index()] == side)
    }

    /// Load and validate a rig from its JSON schema:
    /// `{"l_l": m, "l_t": m, "d_t": m, "cameras": [{"id", "xyz", "yaw_deg"}],
    ///   "tag_map": {"0": "left", ...}}`.
    pub fn from_json(text: &str) -> Result<Self, RigError> {
        let file: RigFile = serde_json::from_str(text)?;
        file.validate()
    }

    pub fn from_file(path: &Path) -> Result<Self, RigError> {
        let text = std::fs::read_to_string(path).map_err(|source| RigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Deserialize)]
struct RigFile {
    l_l: f64,
    l_t: f64,
    d_t: f64,
    cameras: Vec<CameraEntry>,
    tag_map: BTreeMap<String, LegSide>,
}

#[derive(Deserialize)]
struct CameraEntry {
    id: usize,
    xyz: [f64; 3],
    yaw_deg: f64,
}

impl RigFile {
    fn validate(self) -> Result<RigConfig, RigError> {
        if !(self.l_l > 0.0) {
            return Err(RigError::InvalidConfig("l_l must be > 0".into()));
        }
        if !(self.l_t > 0.0) {
            return Err(RigError::InvalidConfig("l_t must be > 0".into()));
        }
        if !(self.d_t >= 0.0) {
            return Err(RigError::InvalidConfig("d_t must be >= 0".into()));
        }
        if self.cameras.len() != NUM_CAMERAS {
            return Err(RigError::InvalidConfig(format!(
                "expected exactly {NUM_CAMERAS} cameras, got {}",
                self.cameras.len()
            )));
        }
        let mut cameras = [Pose3::identity(); NUM_CAMERAS];
        let mut seen = [false; NUM_CAMERAS];
        for cam in &self.cameras {
            if cam.id >= NUM_CAMERAS {
                return Err(RigError::UnknownCamera(cam.id));
            }
            if seen[cam.id] {
                return Err(RigError::InvalidConfig(format!(
                    "duplicate camera id {}",
                    cam.id
                )));
            }
            seen[cam.id] = true;
            cameras[cam.id] = Pose3::new(
                Rot3::rot_z(cam.yaw_deg.to_radians()),
                Vector3::new(cam.xyz[0], cam.xyz[1], cam.xyz[2]),
            );
        }
        let mut tag_map = [LegSide::Left; NUM_TAGS];
        let mut tag_seen = [false; NUM_TAGS];
        for (key, side) in &self.tag_map {
            let id: usize = key
                .parse()
                .map_err(|_| RigError::InvalidConfig(format!("bad tag key {key:?}")))?;
            if id >= NUM_TAGS {
                return Err(RigError::UnknownTag(id));
            }
            tag_seen[id] = true;
            tag_map[id] = *side;
        }
        if tag_seen != [true; NUM_TAGS] {
            return Err(RigError::InvalidConfig(
                "tag_map must assign every tag 0..4 to a leg".into(),
            ));
        }
        Ok(RigConfig {
            leg_radius: self.l_l,
            attachment_arm: self.l_t,
            attachment_offset: self.d_t,
            cameras,
            tag_map,
        })
    }
}

/// Pose of a tag face in its leg frame.
///
/// The attachment is a wedge strapped to the shin with two faces angled
/// ±30° off the leg axis plane; tags 0/2 share the forward face, tags 1/3
/// the mirrored one. Entries use exact `√3/2` and `1/2` so the rotation
/// block is exactly orthonormal.
pub fn tag_in_leg_frame(cfg: &RigConfig, tag: TagId) -> Pose3 {
    let s = cfg.leg_radius + cfg.attachment_arm;
    let half = 0.5 * s;
    let height = 3.0_f64.sqrt() / 2.0 * s;
    let c30 = 3.0_f64.sqrt() / 2.0;
    // Tags 0 and 2 are the first face; 1 and 3 the sign-mirrored face.
    let first_face = tag.index().is_multiple_of(2);
    let (sign, x) = if first_face {
        (1.0, half - cfg.attachment_offset)
    } else {
        (-1.0, -half + cfg.attachment_offset)
    };
    let rot = Rot3::from_matrix_unchecked(Matrix3::new(
        c30,
        -sign * 0.5,
        0.0,
        0.0,
        0.0,
        -1.0,
        sign * 0.5,
        c30,
        0.0,
    ));
    Pose3::new(rot, Vector3::new(x, 0.0, height))
}

/// Pose of the leg frame expressed in a tag's frame: the inverse of
/// [`tag_in_leg_frame`]. Fusion composes this onto body-frame tag poses to
/// recover the leg pose.
pub fn leg_in_tag_frame(cfg: &RigConfig, tag: TagId) -> Pose3 {
    tag_in_leg_frame(cfg, tag).inverse()
}

/// Tag pose in the body frame: camera extrinsic composed with the detection.
///
/// No gating is applied here; outlier rejection happens in the fusion stage.
pub fn tag_to_body(cfg: &RigConfig, det: &TagDetection) -> Pose3 {
    cfg.camera_pose(det.camera).compose(&det.pose)
}
