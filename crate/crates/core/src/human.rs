//! Human state: the point between the two legs (point-foot model) plus a
//! second-order Butterworth smoother for each channel.

use serde::Deserialize;
use thiserror::Error;

use crate::fusion::LegState;
use crate::geometry::wrap_angle;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("cutoff must satisfy 0 < fc < fs/2, got fc={fc} fs={fs}")]
    BadCutoff { fc: f64, fs: f64 },
    #[error("designed filter is unstable (pole magnitude {0} >= 1)")]
    Unstable(f64),
}

/// Where a leg state came from this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegSource {
    Detected,
    Estimated,
    Absent,
}

/// Human state in the body frame: the leg midpoint and its heading.
#[derive(Debug, Clone, Copy)]
pub struct HumanState {
    pub x: f64,
    pub y: f64,
    /// Wrapped to (−π, π].
    pub theta: f64,
    pub timestamp: f64,
    pub left_source: LegSource,
    pub right_source: LegSource,
}

/// Midpoint of the two legs: component-wise mean on position, circular mean
/// on heading. Callers stamp the per-leg provenance afterwards.
///
/// Requires both legs (detected or estimated); when either is absent there
/// is simply no human state this tick and the controller holds its last
/// command.
pub fn midpoint(left: &LegState, right: &LegState) -> HumanState {
    let sin = left.theta.sin() + right.theta.sin();
    let cos = left.theta.cos() + right.theta.cos();
    HumanState {
        x: 0.5 * (left.x + right.x),
        y: 0.5 * (left.y + right.y),
        theta: wrap_angle(sin.atan2(cos)),
        timestamp: left.timestamp.max(right.timestamp),
        left_source: LegSource::Detected,
        right_source: LegSource::Detected,
    }
}

/// Filter design parameters. The sample rate is the control tick rate.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    pub cutoff_hz: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams { cutoff_hz: 5.0 }
    }
}

/// Second-order low-pass Butterworth coefficients, discretized by the
/// bilinear transform with the cutoff prewarped so the digital corner lands
/// exactly at `fc`.
#[derive(Debug, Clone, Copy)]
pub struct Butterworth2 {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Butterworth2 {
    pub fn design(cutoff_hz: f64, sample_hz: f64) -> Result<Self, FilterError> {
        if !(cutoff_hz > 0.0 && sample_hz > 0.0 && cutoff_hz < sample_hz / 2.0) {
            return Err(FilterError::BadCutoff {
                fc: cutoff_hz,
                fs: sample_hz,
            });
        }
        let k = (std::f64::consts::PI * cutoff_hz / sample_hz).tan();
        let sqrt2 = std::f64::consts::SQRT_2;
        let d = k * k + sqrt2 * k + 1.0;
        let c = Butterworth2 {
            b0: k * k / d,
            b1: 2.0 * k * k / d,
            b2: k * k / d,
            a1: 2.0 * (k * k - 1.0) / d,
            a2: (k * k - sqrt2 * k + 1.0) / d,
        };
        let rho = c.max_pole_magnitude();
        if rho >= 1.0 {
            return Err(FilterError::Unstable(rho));
        }
        Ok(c)
    }

    /// Largest magnitude among the roots of `z² + a1·z + a2`.
    pub fn max_pole_magnitude(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            self.a2.sqrt()
        } else {
            let r = disc.sqrt();
            let p1 = (-self.a1 + r) / 2.0;
            let p2 = (-self.a1 - r) / 2.0;
            p1.abs().max(p2.abs())
        }
    }

    /// Gain at zero frequency: `(b0+b1+b2) / (1+a1+a2)`.
    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }
}

/// One filter channel (direct form I) with two samples of memory.
///
/// The state is primed with the first input so a constant signal passes
/// through without a startup transient.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    c: Butterworth2,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
    primed: bool,
}

impl Biquad {
    pub fn new(c: Butterworth2) -> Self {
        Biquad {
            c,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
            primed: false,
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        if !self.primed {
            self.x1 = x;
            self.x2 = x;
            self.y1 = x;
            self.y2 = x;
            self.primed = true;
        }
        let c = &self.c;
        let y = c.b0 * x + c.b1 * self.x1 + c.b2 * self.x2 - c.a1 * self.y1 - c.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Low-pass smoothing of the human state: x and y filtered directly, the
/// heading filtered on its unwrapped (continuous) angle and re-normalized.
#[derive(Debug, Clone)]
pub struct HumanFilter {
    fx: Biquad,
    fy: Biquad,
    ftheta: Biquad,
    theta_cont: Option<f64>,
}

impl HumanFilter {
    pub fn new(cutoff_hz: f64, sample_hz: f64) -> Result<Self, FilterError> {
        let c = Butterworth2::design(cutoff_hz, sample_hz)?;
        Ok(HumanFilter {
            fx: Biquad::new(c),
            fy: Biquad::new(c),
            ftheta: Biquad::new(c),
            theta_cont: None,
        })
    }

    pub fn step(&mut self, raw: &HumanState) -> HumanState {
        let cont = match self.theta_cont {
            None => raw.theta,
            Some(prev) => prev + wrap_angle(raw.theta - wrap_angle(prev)),
        };
        self.theta_cont = Some(cont);
        HumanState {
            x: self.fx.step(raw.x),
            y: self.fy.step(raw.y),
            theta: wrap_angle(self.ftheta.step(cont)),
            ..*raw
        }
    }
}
