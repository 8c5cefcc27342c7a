//! Deterministic synthetic world: a walking human modeled as two
//! alternating-stance legs on a planar path, a camera visibility model with
//! leg-on-leg occlusion and seeded noise, and a first-order velocity plant
//! for the robot base.
//!
//! Everything is a closed-form function of time and the seeded RNG, so a
//! run is reproducible bit-for-bit.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::control::BodyTwist;
use crate::geometry::{wrap_angle, Pose3, Rot3};
use crate::rig::{tag_in_leg_frame, CameraId, LegSide, RigConfig, TagDetection};
use crate::rig::{NUM_CAMERAS, NUM_TAGS};

/// Fraction of the way up the shank (foot → hip) where the tag band sits,
/// i.e. how much of the body's motion the tracked leg point inherits. The
/// foot pins to the ground in stance while the hip keeps moving, so the
/// tracked point advances smoothly through stance instead of freezing with
/// the foot. Calibrated so the leg-midpoint sway matches the tracking
/// envelope a shin-mounted band exhibits on a real walker.
const SHANK_BLEND: f64 = 0.55;

/// A pose in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl PlanarPose {
    pub fn to_pose3(&self) -> Pose3 {
        Pose3::planar(self.x, self.y, self.heading)
    }

    /// Point offset `d` meters to the left of the heading.
    fn offset_left(&self, d: f64) -> (f64, f64) {
        (
            self.x - d * self.heading.sin(),
            self.y + d * self.heading.cos(),
        )
    }
}

/// Walking route of the simulated human, parameterized by arclength.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PathSpec {
    #[default]
    Straight,
    /// Left-turning circular arc of the given radius, capped at `angle`
    /// radians of total turn; the path continues straight past the cap.
    Arc { radius: f64, angle: f64 },
    /// Piecewise-linear route; continues along the last segment's heading
    /// past the final waypoint.
    Waypoints { points: Vec<[f64; 2]> },
}

impl PathSpec {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            PathSpec::Straight => Ok(()),
            PathSpec::Arc { radius, angle } => {
                if *radius > 0.0 && *angle > 0.0 {
                    Ok(())
                } else {
                    Err("arc path needs radius > 0 and angle > 0".into())
                }
            }
            PathSpec::Waypoints { points } => {
                if points.len() < 2 {
                    return Err("waypoint path needs at least 2 points".into());
                }
                for pair in points.windows(2) {
                    let (dx, dy) = (pair[1][0] - pair[0][0], pair[1][1] - pair[0][1]);
                    if (dx * dx + dy * dy).sqrt() < 1e-9 {
                        return Err("waypoint path has coincident points".into());
                    }
                }
                Ok(())
            }
        }
    }

    /// Centerline pose at arclength `s ≥ 0`.
    pub fn sample(&self, s: f64) -> PlanarPose {
        match self {
            PathSpec::Straight => PlanarPose {
                x: s,
                y: 0.0,
                heading: 0.0,
            },
            PathSpec::Arc { radius, angle } => {
                let turn = (s / radius).min(*angle);
                let end = PlanarPose {
                    x: radius * turn.sin(),
                    y: radius * (1.0 - turn.cos()),
                    heading: turn,
                };
                let rest = s - radius * turn;
                if rest <= 0.0 {
                    end
                } else {
                    PlanarPose {
                        x: end.x + rest * end.heading.cos(),
                        y: end.y + rest * end.heading.sin(),
                        heading: end.heading,
                    }
                }
            }
            PathSpec::Waypoints { points } => {
                let mut remaining = s.max(0.0);
                for pair in points.windows(2) {
                    let (dx, dy) = (pair[1][0] - pair[0][0], pair[1][1] - pair[0][1]);
                    let len = (dx * dx + dy * dy).sqrt();
                    let heading = dy.atan2(dx);
                    if remaining <= len {
                        return PlanarPose {
                            x: pair[0][0] + remaining * heading.cos(),
                            y: pair[0][1] + remaining * heading.sin(),
                            heading,
                        };
                    }
                    remaining -= len;
                }
                let last = points[points.len() - 2..].to_vec();
                let (dx, dy) = (last[1][0] - last[0][0], last[1][1] - last[0][1]);
                let heading = dy.atan2(dx);
                PlanarPose {
                    x: last[1][0] + remaining * heading.cos(),
                    y: last[1][1] + remaining * heading.sin(),
                    heading,
                }
            }
        }
    }
}

/// Gait shape of the simulated walker.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitParams {
    /// Forward speed along the path, m/s.
    pub speed: f64,
    /// Distance between successive opposite-foot placements, meters. One
    /// full cycle covers a stride of twice this.
    pub step_length: f64,
    /// Lateral distance between the two legs, meters.
    pub lateral_separation: f64,
    /// Fraction of the cycle each leg spends in stance.
    pub duty_factor: f64,
    pub path: PathSpec,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            speed: 1.0,
            step_length: 0.60,
            lateral_separation: 0.20,
            duty_factor: 0.6,
            path: PathSpec::Straight,
        }
    }
}

impl GaitParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.speed < 0.0 {
            return Err("gait speed must be >= 0".into());
        }
        if !(self.step_length > 0.0) {
            return Err("step_length must be > 0".into());
        }
        if !(self.duty_factor >= 0.5 && self.duty_factor < 1.0) {
            return Err("duty_factor must lie in [0.5, 1)".into());
        }
        if !(self.lateral_separation > 0.0) {
            return Err("lateral_separation must be > 0".into());
        }
        self.path.validate()
    }
}

/// Closed-form two-leg gait: the stance foot pins to the ground while the
/// swing foot advances one stride with a smoothed sinusoidal profile, legs
/// offset half the lateral separation to each side of the centerline.
#[derive(Debug, Clone)]
pub struct GaitModel {
    params: GaitParams,
}

impl GaitModel {
    pub fn new(params: GaitParams) -> Self {
        GaitModel { params }
    }

    pub fn params(&self) -> &GaitParams {
        &self.params
    }

    /// Full gait cycle duration: one stride (two steps) at walking speed.
    pub fn cycle_time(&self) -> f64 {
        if self.params.speed <= 0.0 {
            f64::INFINITY
        } else {
            2.0 * self.params.step_length / self.params.speed
        }
    }

    pub fn swing_time(&self) -> f64 {
        (1.0 - self.params.duty_factor) * self.cycle_time()
    }

    /// Centerline arclength at time `t`.
    pub fn center_arclength(&self, t: f64) -> f64 {
        self.params.speed * t
    }

    /// Arclength of a foot along the path. Constant while the foot is
    /// planted; advances one stride per swing.
    pub fn foot_arclength(&self, side: LegSide, t: f64) -> f64 {
        let v = self.params.speed;
        if v <= 0.0 {
            return 0.0;
        }
        let step = self.params.step_length;
        let stride = 2.0 * step;
        let duty = self.params.duty_factor;
        let cycle = self.cycle_time();
        let offset = match side {
            LegSide::Left => 0.0,
            LegSide::Right => 0.5,
        };
        let u_total = t / cycle + offset;
        let k = u_total.floor();
        let phase = u_total - k;
        // Touchdown leads the body by half of the stance sweep.
        let touchdown = stride * (k - offset) + duty * step;
        if phase < duty {
            touchdown
        } else {
            let u = (phase - duty) / (1.0 - duty);
            let sigma = 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
            touchdown + stride * sigma
        }
    }

    /// Tag-height point of the lower leg and its heading.
    pub fn leg_planar(&self, side: LegSide, t: f64) -> PlanarPose {
        let lat = match side {
            LegSide::Left => self.params.lateral_separation / 2.0,
            LegSide::Right => -self.params.lateral_separation / 2.0,
        };
        let path = &self.params.path;
        let center = path.sample(self.center_arclength(t));
        let foot = path.sample(self.foot_arclength(side, t));
        let (fx, fy) = foot.offset_left(lat);
        let (hx, hy) = center.offset_left(lat);
        PlanarPose {
            x: fx + SHANK_BLEND * (hx - fx),
            y: fy + SHANK_BLEND * (hy - fy),
            heading: center.heading,
        }
    }
}

/// Sensing imperfections and the visibility model switches.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorNoise {
    /// Std-dev of the per-axis position noise on a detection, meters.
    pub position_sigma: f64,
    /// Std-dev of the heading noise on a detection, radians.
    pub heading_sigma: f64,
    /// Probability a visible (camera, tag) pair is dropped this tick.
    pub dropout: f64,
    /// Model leg-on-leg line-of-sight blocking.
    pub occlusion: bool,
    /// Camera cone half-angle about the boresight, degrees.
    pub fov_half_angle_deg: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        SensorNoise {
            position_sigma: 0.006,
            heading_sigma: 0.02,
            dropout: 0.05,
            occlusion: true,
            fov_half_angle_deg: 40.0,
        }
    }
}

impl SensorNoise {
    pub fn validate(&self) -> Result<(), String> {
        if self.position_sigma < 0.0 || self.heading_sigma < 0.0 {
            return Err("noise sigmas must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err("dropout must lie in [0, 1]".into());
        }
        if !(self.fov_half_angle_deg > 0.0 && self.fov_half_angle_deg < 90.0) {
            return Err("fov_half_angle_deg must lie in (0, 90)".into());
        }
        Ok(())
    }
}

/// Robot base actuation model: per-axis first-order velocity lag at a fixed
/// tick rate.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub tau: f64,
    pub tick_hz: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            tau: 0.05,
            tick_hz: 120.0,
        }
    }
}

impl PlantParams {
    pub fn dt(&self) -> f64 {
        1.0 / self.tick_hz
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau > 0.0) {
            return Err("plant tau must be > 0".into());
        }
        if !(self.tick_hz > 0.0) {
            return Err("tick rate must be > 0".into());
        }
        if self.dt() >= self.tau {
            return Err("tick period must be below the plant time constant".into());
        }
        Ok(())
    }
}

/// Full simulation state. The human side is a pure function of time; only
/// the robot pose and its lagged velocity are integrated.
#[derive(Debug, Clone)]
pub struct World {
    gait: GaitModel,
    plant: PlantParams,
    time: f64,
    robot: PlanarPose,
    robot_twist: BodyTwist,
}

impl World {
    /// Start a world with the robot placed so the human midpoint sits
    /// exactly at the commanded relative pose.
    pub fn new(gait: GaitParams, plant: PlantParams, target: [f64; 3]) -> World {
        let gait = GaitModel::new(gait);
        let mut w = World {
            gait,
            plant,
            time: 0.0,
            robot: PlanarPose {
                x: 0.0,
                y: 0.0,
                heading: 0.0,
            },
            robot_twist: BodyTwist::zero(),
        };
        let human = w.human_truth();
        let yaw = wrap_angle(human.heading - target[2]);
        let (s, c) = yaw.sin_cos();
        w.robot = PlanarPose {
            x: human.x - (c * target[0] - s * target[1]),
            y: human.y - (s * target[0] + c * target[1]),
            heading: yaw,
        };
        w
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn gait(&self) -> &GaitModel {
        &self.gait
    }

    pub fn robot_pose(&self) -> PlanarPose {
        self.robot
    }

    pub fn robot_twist(&self) -> BodyTwist {
        self.robot_twist
    }

    /// Shift the robot in its own body frame (test and scenario hook).
    pub fn displace_robot(&mut self, dx: f64, dy: f64, dyaw: f64) {
        let (s, c) = self.robot.heading.sin_cos();
        self.robot.x += c * dx - s * dy;
        self.robot.y += s * dx + c * dy;
        self.robot.heading = wrap_angle(self.robot.heading + dyaw);
    }

    /// True pose of a leg's tag-height point in the world.
    pub fn leg_truth(&self, side: LegSide) -> PlanarPose {
        self.gait.leg_planar(side, self.time)
    }

    /// Smooth centerline pose of the walker (not the leg midpoint).
    pub fn human_center(&self) -> PlanarPose {
        self.gait
            .params()
            .path
            .sample(self.gait.center_arclength(self.time))
    }

    /// True human state: midpoint of the two legs with the mean heading.
    pub fn human_truth(&self) -> PlanarPose {
        let l = self.leg_truth(LegSide::Left);
        let r = self.leg_truth(LegSide::Right);
        let sin = l.heading.sin() + r.heading.sin();
        let cos = l.heading.cos() + r.heading.cos();
        PlanarPose {
            x: 0.5 * (l.x + r.x),
            y: 0.5 * (l.y + r.y),
            heading: wrap_angle(sin.atan2(cos)),
        }
    }

    /// Advance one tick: the robot velocity lags the command, the pose
    /// integrates the lagged twist, the human side follows the clock.
    pub fn step(&mut self, commanded: &BodyTwist, dt: f64) {
        let a = dt / self.plant.tau;
        self.robot_twist.vx += a * (commanded.vx - self.robot_twist.vx);
        self.robot_twist.vy += a * (commanded.vy - self.robot_twist.vy);
        self.robot_twist.wz += a * (commanded.wz - self.robot_twist.wz);
        let (s, c) = self.robot.heading.sin_cos();
        self.robot.x += dt * (self.robot_twist.vx * c - self.robot_twist.vy * s);
        self.robot.y += dt * (self.robot_twist.vx * s + self.robot_twist.vy * c);
        self.robot.heading = wrap_angle(self.robot.heading + dt * self.robot_twist.wz);
        self.time += dt;
    }

    /// Render the detections all four cameras produce this tick.
    pub fn render_detections<R: Rng>(
        &self,
        rig: &RigConfig,
        noise: &SensorNoise,
        rng: &mut R,
    ) -> Vec<TagDetection> {
        render_from_geometry(
            &self.robot,
            &self.leg_truth(LegSide::Left),
            &self.leg_truth(LegSide::Right),
            rig,
            noise,
            self.time,
            rng,
        )
    }

    /// Signed deviation of the true human state (in the true body frame)
    /// from the commanded relative pose.
    pub fn ground_truth_error(&self, target: &[f64; 3]) -> (f64, f64, f64) {
        let human = self.human_truth();
        let dx = human.x - self.robot.x;
        let dy = human.y - self.robot.y;
        let (s, c) = self.robot.heading.sin_cos();
        let rel_x = c * dx + s * dy;
        let rel_y = -s * dx + c * dy;
        (
            rel_x - target[0],
            rel_y - target[1],
            wrap_angle(human.heading - self.robot.heading - target[2]),
        )
    }
}

/// Shortest distance from point `p` to the segment `a`–`b` (2D).
fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (p.0 - a.0, p.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * abx - p.0, a.1 + t * aby - p.1);
    (cx * cx + cy * cy).sqrt()
}

/// Visibility and measurement model for explicit geometry. A (camera, tag)
/// pair yields a detection iff the tag lies inside the camera's cone, the
/// sight line is not cut by the *other* leg's cylinder, and the dropout
/// coin-flip passes; the reported pose is then perturbed by the seeded
/// Gaussian noise.
pub fn render_from_geometry<R: Rng>(
    robot: &PlanarPose,
    left_leg: &PlanarPose,
    right_leg: &PlanarPose,
    rig: &RigConfig,
    noise: &SensorNoise,
    time: f64,
    rng: &mut R,
) -> Vec<TagDetection> {
    let robot3 = robot.to_pose3();
    let cos_fov = noise.fov_half_angle_deg.to_radians().cos();
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal is well-formed");
    let mut out = Vec::new();
    for cam_idx in 0..NUM_CAMERAS {
        let camera = CameraId::new(cam_idx).expect("index in range");
        let cam_world = robot3.compose(rig.camera_pose(camera));
        let cam_world_inv = cam_world.inverse();
        let cam_xy = (cam_world.trans.x, cam_world.trans.y);
        for tag_idx in 0..NUM_TAGS {
            let tag = crate::rig::TagId::new(tag_idx).expect("index in range");
            let (leg, other) = match rig.tag_side(tag) {
                LegSide::Left => (left_leg, right_leg),
                LegSide::Right => (right_leg, left_leg),
            };
            let tag_world = leg.to_pose3().compose(&tag_in_leg_frame(rig, tag));
            let in_cam = cam_world_inv.compose(&tag_world);
            let range = in_cam.trans.norm();
            if range < 1e-9 || in_cam.trans.x / range < cos_fov {
                continue;
            }
            if noise.occlusion {
                let blocked = point_segment_distance(
                    (other.x, other.y),
                    cam_xy,
                    (tag_world.trans.x, tag_world.trans.y),
                ) <= rig.leg_radius;
                if blocked {
                    continue;
                }
            }
            if noise.dropout > 0.0 && rng.random::<f64>() < noise.dropout {
                continue;
            }
            let mut pose = in_cam;
            if noise.position_sigma > 0.0 {
                pose.trans += Vector3::new(
                    noise.position_sigma * unit_normal.sample(rng),
                    noise.position_sigma * unit_normal.sample(rng),
                    noise.position_sigma * unit_normal.sample(rng),
                );
            }
            if noise.heading_sigma > 0.0 {
                // Camera z is vertical, so this jitters the extracted
                // heading directly.
                let eps = noise.heading_sigma * unit_normal.sample(rng);
                pose.rot = Rot3::rot_z(eps).mul(&pose.rot);
            }
            out.push(TagDetection {
                camera,
                tag,
                pose,
                timestamp: time,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::{fuse_leg, GateRegion};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet_noise() -> SensorNoise {
        SensorNoise {
            position_sigma: 0.0,
            heading_sigma: 0.0,
            dropout: 0.0,
            occlusion: false,
            ..SensorNoise::default()
        }
    }

    fn target() -> [f64; 3] {
        [0.35, 0.45, 0.0]
    }

    #[test]
    fn zero_command_keeps_the_robot_still() {
        let mut w = World::new(GaitParams::default(), PlantParams::default(), target());
        let start = w.robot_pose();
        for _ in 0..600 {
            w.step(&BodyTwist::zero(), 1.0 / 120.0);
        }
        assert_eq!(w.robot_pose(), start);
    }

    #[test]
    fn centerline_advances_with_the_clock() {
        let mut w = World::new(GaitParams::default(), PlantParams::default(), target());
        for _ in 0..1200 {
            w.step(&BodyTwist::zero(), 1.0 / 120.0);
        }
        assert_abs_diff_eq!(w.time(), 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.gait().center_arclength(w.time()), 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.human_center().x, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn gait_timing_arithmetic() {
        let g = GaitModel::new(GaitParams::default());
        assert_abs_diff_eq!(g.cycle_time(), 1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(g.swing_time(), 0.48, epsilon = 1e-12);
    }

    #[test]
    fn stance_foot_is_pinned_and_strides_once_per_cycle() {
        let g = GaitModel::new(GaitParams::default());
        // Left stance covers the first 60% of its cycle.
        let planted = g.foot_arclength(LegSide::Left, 0.0);
        for i in 0..70 {
            let t = i as f64 * 0.01;
            assert_eq!(g.foot_arclength(LegSide::Left, t), planted, "t={t}");
        }
        // One cycle later the foot has advanced exactly one stride.
        let next = g.foot_arclength(LegSide::Left, 1.2 + 0.3);
        let this = g.foot_arclength(LegSide::Left, 0.3);
        assert_abs_diff_eq!(next - this, 1.2, epsilon = 1e-12);
    }

    #[test]
    fn standing_world_is_static() {
        let gait = GaitParams {
            speed: 0.0,
            ..GaitParams::default()
        };
        let w = World::new(gait, PlantParams::default(), target());
        let l = w.leg_truth(LegSide::Left);
        let r = w.leg_truth(LegSide::Right);
        assert_abs_diff_eq!(l.x, r.x, epsilon = 1e-12);
        assert_abs_diff_eq!(l.y - r.y, 0.20, epsilon = 1e-12);
        let h = w.human_truth();
        assert_abs_diff_eq!(h.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn world_starts_with_human_on_target() {
        for path in [
            PathSpec::Straight,
            PathSpec::Arc {
                radius: 15.0,
                angle: std::f64::consts::TAU,
            },
        ] {
            let gait = GaitParams {
                path,
                ..GaitParams::default()
            };
            let w = World::new(gait, PlantParams::default(), target());
            let (ex, ey, et) = w.ground_truth_error(&target());
            assert_abs_diff_eq!(ex, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ey, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(et, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn ground_truth_error_single_axis_cases() {
        let mut w = World::new(GaitParams::default(), PlantParams::default(), target());
        w.displace_robot(-0.05, 0.0, 0.0);
        let (ex, ey, _) = w.ground_truth_error(&target());
        assert_abs_diff_eq!(ex, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(ey, 0.0, epsilon = 1e-12);

        let mut w = World::new(GaitParams::default(), PlantParams::default(), target());
        w.displace_robot(0.0, 0.0, -0.1);
        let (_, _, et) = w.ground_truth_error(&target());
        assert_abs_diff_eq!(et, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_rendering_round_trips_through_fusion() {
        let rig = RigConfig::default();
        let mut w = World::new(GaitParams::default(), PlantParams::default(), target());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..240 {
            w.step(&BodyTwist::zero(), 1.0 / 120.0);
            // Zero command: errors grow as the human walks away, so only
            // check the first strides while legs remain in view.
            if w.time() > 0.35 {
                break;
            }
            let dets = w.render_detections(&rig, &quiet_noise(), &mut rng);
            for side in [LegSide::Left, LegSide::Right] {
                let fused = fuse_leg(&rig, &GateRegion::default(), &dets, side, w.time()).unwrap();
                let truth = w.leg_truth(side);
                let rel = w
                    .robot_pose()
                    .to_pose3()
                    .inverse()
                    .compose(&truth.to_pose3());
                assert_abs_diff_eq!(fused.x, rel.trans.x, epsilon = 1e-9);
                assert_abs_diff_eq!(fused.y, rel.trans.y, epsilon = 1e-9);
                assert_abs_diff_eq!(fused.theta, rel.rot.yaw().unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn blocker_on_the_sight_line_suppresses_the_detection() {
        let rig = RigConfig::default();
        let robot = PlanarPose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        };
        let left = PlanarPose {
            x: 0.45,
            y: 0.45,
            heading: 0.0,
        };
        // Tag 0's world position for this left-leg pose.
        let tag_world = left
            .to_pose3()
            .compose(&tag_in_leg_frame(&rig, crate::rig::TagId::new(0).unwrap()));
        let cam0 = rig.camera_pose(CameraId::new(0).unwrap()).trans;
        // Park the right leg exactly on the camera-0 → tag-0 segment.
        let right = PlanarPose {
            x: 0.5 * (cam0.x + tag_world.trans.x),
            y: 0.5 * (cam0.y + tag_world.trans.y),
            heading: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut noise = quiet_noise();
        noise.occlusion = true;
        let dets = render_from_geometry(&robot, &left, &right, &rig, &noise, 0.0, &mut rng);
        assert!(
            !dets
                .iter()
                .any(|d| d.camera.index() == 0 && d.tag.index() == 0),
            "camera 0 should lose tag 0 behind the blocker"
        );
        // Without the occlusion model the pair is visible again.
        noise.occlusion = false;
        let dets = render_from_geometry(&robot, &left, &right, &rig, &noise, 0.0, &mut rng);
        assert!(dets
            .iter()
            .any(|d| d.camera.index() == 0 && d.tag.index() == 0));
    }

    #[test]
    fn full_dropout_yields_nothing() {
        let rig = RigConfig::default();
        let w = World::new(GaitParams::default(), PlantParams::default(), target());
        let noise = SensorNoise {
            dropout: 1.0,
            ..SensorNoise::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(w.render_detections(&rig, &noise, &mut rng).is_empty());
    }

    #[test]
    fn identical_seeds_render_identical_streams() {
        let rig = RigConfig::default();
        let noise = SensorNoise::default();
        let mut w1 = World::new(GaitParams::default(), PlantParams::default(), target());
        let mut w2 = w1.clone();
        let mut r1 = ChaCha8Rng::seed_from_u64(99);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..120 {
            let d1 = w1.render_detections(&rig, &noise, &mut r1);
            let d2 = w2.render_detections(&rig, &noise, &mut r2);
            assert_eq!(d1.len(), d2.len());
            for (a, b) in d1.iter().zip(&d2) {
                assert_eq!(a.camera, b.camera);
                assert_eq!(a.tag, b.tag);
                assert_eq!(a.pose.trans, b.pose.trans);
                assert_eq!(a.pose.rot.matrix(), b.pose.rot.matrix());
            }
            w1.step(&BodyTwist::zero(), 1.0 / 120.0);
            w2.step(&BodyTwist::zero(), 1.0 / 120.0);
        }
    }

    #[test]
    fn lagged_velocity_decays_monotonically() {
        let mut w = World::new(GaitParams::default(), PlantParams::default(), target());
        w.step(
            &BodyTwist {
                vx: 1.0,
                vy: -0.5,
                wz: 0.8,
            },
            1.0 / 120.0,
        );
        let mut prev = w.robot_twist().vx.abs();
        for _ in 0..400 {
            w.step(&BodyTwist::zero(), 1.0 / 120.0);
            let cur = w.robot_twist().vx.abs();
            assert!(cur <= prev);
            prev = cur;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn point_segment_distance_cases() {
        assert_abs_diff_eq!(
            point_segment_distance((0.0, 1.0), (-1.0, 0.0), (1.0, 0.0)),
            1.0,
            epsilon = 1e-15
        );
        // Beyond the endpoint the distance is to the endpoint.
        assert_abs_diff_eq!(
            point_segment_distance((2.0, 0.0), (-1.0, 0.0), (1.0, 0.0)),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            point_segment_distance((0.5, 0.0), (-1.0, 0.0), (1.0, 0.0)),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn arc_path_wraps_into_a_straight_tail() {
        let p = PathSpec::Arc {
            radius: 2.0,
            angle: std::f64::consts::FRAC_PI_2,
        };
        let quarter = p.sample(2.0 * std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(quarter.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quarter.y, 2.0, epsilon = 1e-12);
        let past = p.sample(2.0 * std::f64::consts::FRAC_PI_2 + 1.0);
        assert_abs_diff_eq!(past.x, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(past.y, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(past.heading, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn waypoint_path_walks_segments() {
        let p = PathSpec::Waypoints {
            points: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]],
        };
        let mid = p.sample(0.5);
        assert_abs_diff_eq!(mid.x, 0.5, epsilon = 1e-12);
        let turn = p.sample(1.5);
        assert_abs_diff_eq!(turn.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(turn.y, 0.5, epsilon = 1e-12);
        let beyond = p.sample(4.0);
        assert_abs_diff_eq!(beyond.y, 3.0, epsilon = 1e-12);
    }
}
