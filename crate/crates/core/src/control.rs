//! Pose-holding controller: PID on the relative-pose error, velocity
//! saturation, and the Mecanum wheel mapping.

use serde::Deserialize;

use crate::geometry::wrap_angle;
use crate::human::HumanState;

/// Planar body velocity command: forward, leftward, and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyTwist {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

impl BodyTwist {
    pub fn zero() -> Self {
        BodyTwist {
            vx: 0.0,
            vy: 0.0,
            wz: 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        BodyTwist {
            vx: self.vx * k,
            vy: self.vy * k,
            wz: self.wz * k,
        }
    }

    /// Per-axis saturation to the velocity limits.
    pub fn clamped(&self, v_max: f64, w_max: f64) -> Self {
        BodyTwist {
            vx: self.vx.clamp(-v_max, v_max),
            vy: self.vy.clamp(-v_max, v_max),
            wz: self.wz.clamp(-w_max, w_max),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.wz.is_finite()
    }
}

/// Angular speeds of the four wheel motors, rad/s, in mounting order
/// front-left, front-right, rear-left, rear-right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelSpeeds {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

/// Controller configuration: the commanded relative pose of the user in the
/// body frame, per-axis PID gains, and the safety velocity limits.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    /// Desired user pose in the body frame: x, y in meters, heading in rad.
    pub target: [f64; 3],
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub v_max: f64,
    pub w_max: f64,
    pub integral_clamp: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            target: [0.350, 0.450, 0.0],
            kp: 2.5,
            ki: 2.0,
            kd: 0.1,
            v_max: 1.6,
            w_max: 1.5,
            integral_clamp: 2.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 {
            return Err("PID gains must be >= 0".into());
        }
        if !(self.v_max > 0.0 && self.w_max > 0.0) {
            return Err("velocity limits must be > 0".into());
        }
        if self.integral_clamp < 0.0 {
            return Err("integral clamp must be >= 0".into());
        }
        Ok(())
    }
}

/// Relative-pose error of the user with respect to the commanded pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl PoseError {
    fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }
}

/// Error between the estimated human state and the commanded relative pose,
/// heading wrapped to (−π, π].
pub fn pose_error(h: &HumanState, p: &ControllerParams) -> PoseError {
    PoseError {
        x: h.x - p.target[0],
        y: h.y - p.target[1],
        theta: wrap_angle(h.theta - p.target[2]),
    }
}

/// Per-axis PID with conditional integration: while an axis output sits at
/// its saturation limit the integral is frozen, so long occlusion gaps do
/// not wind it up.
#[derive(Debug, Clone)]
pub struct PoseController {
    params: ControllerParams,
    integral: [f64; 3],
    prev_error: Option<[f64; 3]>,
}

impl PoseController {
    pub fn new(params: ControllerParams) -> Self {
        PoseController {
            params,
            integral: [0.0; 3],
            prev_error: None,
        }
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn integral(&self) -> [f64; 3] {
        self.integral
    }

    /// One fixed-rate PID update. The derivative is a first difference on
    /// the error (zero on the first call).
    pub fn step(&mut self, err: &PoseError, dt: f64) -> BodyTwist {
        let p = &self.params;
        let e = err.as_array();
        let prev = self.prev_error.unwrap_or(e);
        let limits = [p.v_max, p.v_max, p.w_max];
        let mut u = [0.0; 3];
        for axis in 0..3 {
            let de = (e[axis] - prev[axis]) / dt;
            let raw = p.kp * e[axis] + p.ki * self.integral[axis] + p.kd * de;
            let lim = limits[axis];
            let sat = raw.clamp(-lim, lim);
            if sat == raw {
                self.integral[axis] =
                    (self.integral[axis] + e[axis] * dt).clamp(-p.integral_clamp, p.integral_clamp);
            }
            u[axis] = sat;
        }
        self.prev_error = Some(e);
        BodyTwist {
            vx: u[0],
            vy: u[1],
            wz: u[2],
        }
    }
}

/// Wheel geometry. Only the wheel radius and the lever arm `a + b`
/// (half-track plus half-wheelbase) enter the mapping.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct KinematicsParams {
    pub wheel_radius: f64,
    pub half_track: f64,
    pub half_wheelbase: f64,
}

impl Default for KinematicsParams {
    /// Sized for a 42 × 29 cm wheelbase footprint.
    fn default() -> Self {
        KinematicsParams {
            wheel_radius: 0.05,
            half_track: 0.21,
            half_wheelbase: 0.145,
        }
    }
}

impl KinematicsParams {
    pub fn lever(&self) -> f64 {
        self.half_track + self.half_wheelbase
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.wheel_radius > 0.0 && self.half_track > 0.0 && self.half_wheelbase > 0.0 {
            Ok(())
        } else {
            Err("kinematics parameters must all be > 0".into())
        }
    }
}

/// Body twist to wheel speeds:
///
/// ```text
/// [w1]       [ 1  -1   (a+b)] [vx]
/// [w2] = 1/r [ 1   1  -(a+b)] [vy]
/// [w3]       [ 1  -1  -(a+b)] [wz]
/// [w4]       [ 1   1   (a+b)]
/// ```
pub fn inverse_kinematics(t: &BodyTwist, k: &KinematicsParams) -> WheelSpeeds {
    let l = k.lever();
    let r = k.wheel_radius;
    WheelSpeeds {
        w1: (t.vx - t.vy + l * t.wz) / r,
        w2: (t.vx + t.vy - l * t.wz) / r,
        w3: (t.vx - t.vy - l * t.wz) / r,
        w4: (t.vx + t.vy + l * t.wz) / r,
    }
}

/// Wheel speeds back to a body twist via the least-squares pseudo-inverse
/// of the wheel matrix (closed form; the normal matrix is diagonal).
pub fn forward_kinematics(w: &WheelSpeeds, k: &KinematicsParams) -> BodyTwist {
    let l = k.lever();
    let r = k.wheel_radius;
    BodyTwist {
        vx: r * (w.w1 + w.w2 + w.w3 + w.w4) / 4.0,
        vy: r * (-w.w1 + w.w2 - w.w3 + w.w4) / 4.0,
        wz: r * (w.w1 - w.w2 - w.w3 + w.w4) / (4.0 * l),
    }
}
