//! Occlusion bridging: each leg keeps a sliding window of fused states, and
//! when the leg drops out of view the estimator picks one of three regimes
//! based on how stale the history is.
//!
//! With `Δt_k` the time since the last detection and `Δt_{k−1}` the gap
//! between the last two detections:
//!
//! * `Δt_k > T1` — the leg has been hidden long enough that the user has
//!   likely stopped with one leg shadowing the other: mirror the other leg
//!   sideways by the standing stance width `d`.
//! * `Δt_k ≤ T1`, `Δt_{k−1} ≤ T2` — fresh history: extrapolate linearly
//!   along the last inter-detection slope.
//! * `Δt_k ≤ T1`, `Δt_{k−1} > T2` — stale history makes the slope
//!   unreliable: hold the last state.
//!
//! Estimated states are never written back into the window; only fused
//! detections are, which keeps extrapolation from feeding on itself.

use std::collections::VecDeque;

use serde::Deserialize;
use thiserror::Error;

use crate::fusion::LegState;
use crate::geometry::wrap_angle;
use crate::rig::LegSide;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("observation at t={got} is not after the newest stored t={newest}")]
    NonMonotonicTimestamp { newest: f64, got: f64 },
}

/// Thresholds for the occlusion regimes.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct EstimatorParams {
    /// Seconds of total absence before the "user stopped" mirror applies.
    pub t1: f64,
    /// Freshness bound on the last inter-detection gap for extrapolation.
    pub t2: f64,
    /// Standing lateral distance between the legs, meters.
    pub d: f64,
    /// Sliding-window capacity; only the last two entries drive estimation,
    /// the rest support diagnostics.
    pub window: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            t1: 0.100,
            t2: 0.060,
            d: 0.20,
            window: 10,
        }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t1 > self.t2 && self.t2 > 0.0) {
            return Err("estimator needs t1 > t2 > 0".into());
        }
        if !(self.d > 0.0) {
            return Err("estimator needs d > 0".into());
        }
        if self.window < 2 {
            return Err("estimator window must hold at least 2 states".into());
        }
        Ok(())
    }
}

/// Which estimation regime applies at a given query time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Long absence: mirror the opposite leg sideways.
    MirrorOther,
    /// Fresh history: linear extrapolation.
    Extrapolate,
    /// Stale history: hold the last state.
    HoldLast,
    /// Fewer than two stored detections.
    Insufficient,
}

/// Per-leg ring of fused states with strictly increasing timestamps.
#[derive(Debug, Clone)]
pub struct LegWindow {
    side: LegSide,
    buf: VecDeque<LegState>,
    capacity: usize,
}

impl LegWindow {
    pub fn new(side: LegSide, capacity: usize) -> Self {
        LegWindow {
            side,
            buf: VecDeque::with_capacity(capacity),
            capacity: capacity.max(2),
        }
    }

    pub fn side(&self) -> LegSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Most recent stored detection.
    pub fn latest(&self) -> Option<&LegState> {
        self.buf.back()
    }

    /// Second most recent stored detection.
    pub fn previous(&self) -> Option<&LegState> {
        self.buf.iter().rev().nth(1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LegState> {
        self.buf.iter()
    }

    /// Store a fused detection. Rejects out-of-order timestamps; evicts the
    /// oldest entry once the capacity is reached.
    pub fn observe(&mut self, s: LegState) -> Result<(), WindowError> {
        if let Some(newest) = self.latest() {
            if s.timestamp <= newest.timestamp {
                return Err(WindowError::NonMonotonicTimestamp {
                    newest: newest.timestamp,
                    got: s.timestamp,
                });
            }
        }
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(s);
        Ok(())
    }
}

/// Pick the estimation regime for an undetected leg at time `now`.
pub fn classify(win: &LegWindow, params: &EstimatorParams, now: f64) -> Condition {
    let (Some(latest), Some(previous)) = (win.latest(), win.previous()) else {
        return Condition::Insufficient;
    };
    let dt_k = now - latest.timestamp;
    let dt_prev = latest.timestamp - previous.timestamp;
    if dt_k > params.t1 {
        Condition::MirrorOther
    } else if dt_prev <= params.t2 {
        Condition::Extrapolate
    } else {
        Condition::HoldLast
    }
}

/// Estimate the state of an undetected leg at time `now`.
///
/// `other_leg` is the opposite leg's state this tick (fused or itself
/// estimated), if any. Returns `None` when no estimate is possible.
pub fn estimate(
    win: &LegWindow,
    other_leg: Option<&LegState>,
    params: &EstimatorParams,
    now: f64,
) -> Option<LegState> {
    match classify(win, params, now) {
        Condition::Insufficient => None,
        Condition::MirrorOther => {
            let other = other_leg?;
            // The left leg stands at +d from the right along body y.
            let offset = match win.side {
                LegSide::Left => params.d,
                LegSide::Right => -params.d,
            };
            Some(LegState {
                x: other.x,
                y: other.y + offset,
                theta: other.theta,
                side: win.side,
                timestamp: now,
            })
        }
        Condition::Extrapolate => {
            let z1 = win.latest().expect("classify guarantees two states");
            let z2 = win.previous().expect("classify guarantees two states");
            let dt_prev = z1.timestamp - z2.timestamp;
            let dt_k = now - z1.timestamp;
            let scale = dt_k / dt_prev;
            let dtheta = wrap_angle(z1.theta - z2.theta);
            Some(LegState {
                x: z1.x + (z1.x - z2.x) * scale,
                y: z1.y + (z1.y - z2.y) * scale,
                theta: wrap_angle(z1.theta + dtheta * scale),
                side: win.side,
                timestamp: now,
            })
        }
        Condition::HoldLast => {
            let z1 = win.latest().expect("classify guarantees two states");
            Some(LegState {
                timestamp: now,
                ..*z1
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn leg(x: f64, y: f64, theta: f64, t: f64) -> LegState {
        LegState {
            x,
            y,
            theta,
            side: LegSide::Left,
            timestamp: t,
        }
    }

    fn params() -> EstimatorParams {
        EstimatorParams::default()
    }

    #[test]
    fn observe_grows_then_rings() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.3, 0.1, 0.0, 0.0)).unwrap();
        assert_eq!(win.len(), 1);
        for i in 1..11 {
            win.observe(leg(0.3, 0.1, 0.0, i as f64 * 0.01)).unwrap();
        }
        assert_eq!(win.len(), 10);
        // Oldest (t = 0.0) evicted.
        assert_abs_diff_eq!(win.iter().next().unwrap().timestamp, 0.01, epsilon = 0.0);
    }

    #[test]
    fn observe_rejects_stale_timestamps() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.3, 0.1, 0.0, 1.0)).unwrap();
        let err = win.observe(leg(0.3, 0.1, 0.0, 1.0)).unwrap_err();
        assert_eq!(
            err,
            WindowError::NonMonotonicTimestamp {
                newest: 1.0,
                got: 1.0
            }
        );
        assert!(win.observe(leg(0.3, 0.1, 0.0, 0.5)).is_err());
        assert_eq!(win.len(), 1);
    }

    #[test]
    fn classify_truth_table() {
        // Last two detections 40 ms apart, absence of 120 ms: long gap.
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.3, 0.1, 0.0, 0.00)).unwrap();
        win.observe(leg(0.3, 0.1, 0.0, 0.04)).unwrap();
        assert_eq!(classify(&win, &params(), 0.16), Condition::MirrorOther);
        // 50 ms absence, 40 ms history gap: extrapolate.
        assert_eq!(classify(&win, &params(), 0.09), Condition::Extrapolate);
        // 50 ms absence, 80 ms history gap: hold.
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.3, 0.1, 0.0, 0.00)).unwrap();
        win.observe(leg(0.3, 0.1, 0.0, 0.08)).unwrap();
        assert_eq!(classify(&win, &params(), 0.13), Condition::HoldLast);
    }

    #[test]
    fn classify_needs_two_states() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        assert_eq!(classify(&win, &params(), 1.0), Condition::Insufficient);
        win.observe(leg(0.3, 0.1, 0.0, 0.0)).unwrap();
        assert_eq!(classify(&win, &params(), 1.0), Condition::Insufficient);
        assert_eq!(estimate(&win, None, &params(), 1.0), None);
    }

    #[test]
    fn mirror_estimate_offsets_the_other_leg() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.3, 0.1, 0.0, 0.00)).unwrap();
        win.observe(leg(0.3, 0.1, 0.0, 0.01)).unwrap();
        let right = LegState {
            x: 0.35,
            y: -0.10,
            theta: 0.0,
            side: LegSide::Right,
            timestamp: 0.2,
        };
        let est = estimate(&win, Some(&right), &params(), 0.2).unwrap();
        assert_abs_diff_eq!(est.x, 0.35, epsilon = 0.0);
        assert_abs_diff_eq!(est.y, 0.10, epsilon = 1e-15);
        assert_eq!(est.theta, 0.0);
        assert_eq!(est.side, LegSide::Left);
        // No opposite leg available: nothing to mirror.
        assert_eq!(estimate(&win, None, &params(), 0.2), None);
    }

    #[test]
    fn linear_extrapolation_example() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.30, 0.10, 0.0, 0.00)).unwrap();
        win.observe(leg(0.35, 0.10, 0.0, 0.05)).unwrap();
        let est = estimate(&win, None, &params(), 0.10).unwrap();
        assert_abs_diff_eq!(est.x, 0.40, epsilon = 1e-12);
        assert_abs_diff_eq!(est.y, 0.10, epsilon = 1e-12);
        assert_abs_diff_eq!(est.theta, 0.0, epsilon = 0.0);
    }

    #[test]
    fn extrapolation_takes_the_short_heading_arc() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.3, 0.1, 3.10, 0.00)).unwrap();
        win.observe(leg(0.3, 0.1, -3.12, 0.05)).unwrap();
        // Crossing the seam upward by wrap(−3.12 − 3.10) ≈ +0.063 per 50 ms.
        let est = estimate(&win, None, &params(), 0.10).unwrap();
        let expected = wrap_angle(-3.12 + wrap_angle(-3.12 - 3.10));
        assert_abs_diff_eq!(est.theta, expected, epsilon = 1e-12);
    }

    #[test]
    fn hold_last_example() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.30, 0.10, 0.0, 0.00)).unwrap();
        win.observe(leg(0.33, 0.12, 0.1, 0.08)).unwrap();
        let est = estimate(&win, None, &params(), 0.13).unwrap();
        assert_eq!((est.x, est.y, est.theta), (0.33, 0.12, 0.1));
        assert_eq!(est.timestamp, 0.13);
    }

    #[test]
    fn mirror_is_an_involution_across_sides() {
        let p = params();
        let mut left_win = LegWindow::new(LegSide::Left, 10);
        left_win.observe(leg(0.1, 0.2, 0.0, 0.0)).unwrap();
        left_win.observe(leg(0.1, 0.2, 0.0, 0.01)).unwrap();
        let mut right_win = LegWindow::new(LegSide::Right, 10);
        right_win
            .observe(LegState {
                side: LegSide::Right,
                ..leg(0.1, 0.2, 0.0, 0.0)
            })
            .unwrap();
        right_win
            .observe(LegState {
                side: LegSide::Right,
                ..leg(0.1, 0.2, 0.0, 0.01)
            })
            .unwrap();

        let right = LegState {
            x: 0.42,
            y: -0.07,
            theta: 0.3,
            side: LegSide::Right,
            timestamp: 0.5,
        };
        let left_est = estimate(&left_win, Some(&right), &p, 0.5).unwrap();
        let right_back = estimate(&right_win, Some(&left_est), &p, 0.5).unwrap();
        assert_abs_diff_eq!(right_back.x, right.x, epsilon = 0.0);
        assert_abs_diff_eq!(right_back.y, right.y, epsilon = 1e-15);
        assert_eq!(right_back.theta, right.theta);
    }

    #[test]
    fn extrapolation_is_continuous_at_zero_gap() {
        let mut win = LegWindow::new(LegSide::Left, 10);
        win.observe(leg(0.30, 0.10, 0.25, 0.00)).unwrap();
        win.observe(leg(0.35, 0.14, 0.30, 0.05)).unwrap();
        let est = estimate(&win, None, &params(), 0.05 + 1e-12).unwrap();
        assert_abs_diff_eq!(est.x, 0.35, epsilon = 1e-9);
        assert_abs_diff_eq!(est.y, 0.14, epsilon = 1e-9);
        assert_abs_diff_eq!(est.theta, 0.30, epsilon = 1e-9);
    }

    proptest! {
        /// With two stored states, exactly one of the three regimes applies
        /// for any positive interval pair.
        #[test]
        fn dispatch_is_exhaustive(dt_k in 1e-6..1.0f64, dt_prev in 1e-6..1.0f64) {
            let mut win = LegWindow::new(LegSide::Left, 10);
            win.observe(leg(0.3, 0.1, 0.0, 0.0)).unwrap();
            win.observe(leg(0.3, 0.1, 0.0, dt_prev)).unwrap();
            let now = dt_prev + dt_k;
            let p = params();
            let cond = classify(&win, &p, now);
            let expected = if dt_k > p.t1 {
                Condition::MirrorOther
            } else if dt_prev <= p.t2 {
                Condition::Extrapolate
            } else {
                Condition::HoldLast
            };
            prop_assert_eq!(cond, expected);
            prop_assert_ne!(cond, Condition::Insufficient);
        }
    }
}
