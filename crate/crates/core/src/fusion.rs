//! Per-tick gating and fusion: reject tag observations outside the
//! plausible body-frame region, then average every surviving observation of
//! a leg into a single state.

use serde::Deserialize;

use crate::geometry::{wrap_angle, Pose3};
use crate::rig::{leg_in_tag_frame, tag_to_body, LegSide, RigConfig, TagDetection};
use crate::rig::{NUM_CAMERAS, NUM_TAGS};

/// Fused (or estimated) state of one leg in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegState {
    pub x: f64,
    pub y: f64,
    /// Heading in the body frame, wrapped to (−π, π].
    pub theta: f64,
    pub side: LegSide,
    pub timestamp: f64,
}

/// Axis-aligned acceptance box in the body frame. Tag positions outside it
/// are discarded as outliers.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct GateRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for GateRegion {
    fn default() -> Self {
        GateRegion {
            x_min: 0.10,
            x_max: 1.20,
            y_min: -0.80,
            y_max: 0.80,
        }
    }
}

impl GateRegion {
    pub fn validate(&self) -> Result<(), String> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err("gate region must have x_min < x_max and y_min < y_max".into())
        }
    }
}

/// True iff the pose's x-y position lies inside the closed box. Height is
/// unconstrained: tags ride at camera height, so z carries no gating
/// information.
pub fn gate(region: &GateRegion, body_pose: &Pose3) -> bool {
    let p = &body_pose.trans;
    p.x >= region.x_min && p.x <= region.x_max && p.y >= region.y_min && p.y <= region.y_max
}

/// Fuse all detections of `side`'s tags taken this tick into one leg state.
///
/// Every (camera, tag) pair contributes at most one observation (the latest
/// by timestamp). Observations are gated on the tag's body-frame position,
/// mapped to the leg frame, and averaged: arithmetic mean on x and y, a
/// circular mean on heading so the ±π seam averages correctly. Returns
/// `None` when nothing survives — absence is a value here, not an error.
///
/// Pairs are accumulated in (camera, tag) index order, which makes the
/// result independent of the input list order.
pub fn fuse_leg(
    cfg: &RigConfig,
    region: &GateRegion,
    dets: &[TagDetection],
    side: LegSide,
    now: f64,
) -> Option<LegState> {
    let mut latest: [[Option<&TagDetection>; NUM_TAGS]; NUM_CAMERAS] =
        [[None; NUM_TAGS]; NUM_CAMERAS];
    for det in dets {
        if cfg.tag_side(det.tag) != side {
            continue;
        }
        let slot = &mut latest[det.camera.index()][det.tag.index()];
        match slot {
            Some(prev) if det.timestamp <= prev.timestamp => {}
            _ => *slot = Some(det),
        }
    }

    let mut n = 0u32;
    let (mut sum_x, mut sum_y) = (0.0, 0.0);
    let (mut sum_sin, mut sum_cos) = (0.0, 0.0);
    for cam_slots in &latest {
        for det in cam_slots.iter().flatten() {
            let tag_in_body = tag_to_body(cfg, det);
            if !gate(region, &tag_in_body) {
                continue;
            }
            let leg_in_body = tag_in_body.compose(&leg_in_tag_frame(cfg, det.tag));
            let Ok(theta) = leg_in_body.rot.yaw() else {
                // Degenerate orientation: treat like any other outlier.
                continue;
            };
            sum_x += leg_in_body.trans.x;
            sum_y += leg_in_body.trans.y;
            sum_sin += theta.sin();
            sum_cos += theta.cos();
            n += 1;
        }
    }

    if n == 0 {
        return None;
    }
    Some(LegState {
        x: sum_x / n as f64,
        y: sum_y / n as f64,
        theta: wrap_angle(sum_sin.atan2(sum_cos)),
        side,
        timestamp: now,
    })
}
