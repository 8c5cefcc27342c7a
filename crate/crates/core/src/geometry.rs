//! Minimal rigid-body math: rotation matrices, homogeneous transforms,
//! composition/inversion, and planar yaw extraction.
//!
//! Everything here is a pure value type; poses are safe to copy around and
//! share between threads.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Tolerance for the SO(3) membership checks (`RᵀR = I`, `det R = 1`).
pub const ROT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    /// The matrix is not orthonormal with determinant +1.
    #[error("matrix is not a rotation: max |R'R - I| or |det - 1| = {defect:.3e}")]
    NotARotation { defect: f64 },
    /// Pitch is at ±90°, so yaw about the body Z axis is undefined.
    /// Callers treat the offending observation as an outlier.
    #[error("degenerate orientation: |r31| = {r31:.6} leaves yaw undefined")]
    DegenerateOrientation { r31: f64 },
}

/// Normalize an angle to the half-open interval (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w -= std::f64::consts::TAU;
    }
    w
}

/// A 3×3 rotation matrix (member of SO(3)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3 {
    m: Matrix3<f64>,
}

impl Rot3 {
    pub fn identity() -> Self {
        Rot3 {
            m: Matrix3::identity(),
        }
    }

    /// Rotation by `angle` about the X axis.
    pub fn rot_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rot3 {
            m: Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        }
    }

    /// Rotation by `angle` about the Y axis.
    pub fn rot_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rot3 {
            m: Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        }
    }

    /// Rotation by `angle` about the Z axis.
    pub fn rot_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rot3 {
            m: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        }
    }

    /// Validate and wrap a raw matrix.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let r = Rot3 { m };
        let defect = r.orthonormality_error();
        if defect > ROT_TOL {
            return Err(GeometryError::NotARotation { defect });
        }
        Ok(r)
    }

    /// Wrap a matrix that is known to be a rotation (e.g. built from exact
    /// trigonometric constants).
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rot3 { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Inverse rotation (the transpose).
    pub fn transpose(&self) -> Self {
        Rot3 {
            m: self.m.transpose(),
        }
    }

    /// Composition `self · other`.
    pub fn mul(&self, other: &Rot3) -> Self {
        Rot3 {
            m: self.m * other.m,
        }
    }

    /// Rotate a vector.
    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// Max elementwise deviation from `RᵀR = I`, combined with `|det R − 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.m.transpose() * self.m - Matrix3::identity();
        let ortho = gram.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        ortho.max((self.m.determinant() - 1.0).abs())
    }

    /// Project onto the nearest rotation (Frobenius sense) via SVD.
    ///
    /// Long composition chains accumulate float drift; callers that compose
    /// thousands of rotations re-project when [`orthonormality_error`]
    /// exceeds their budget.
    ///
    /// [`orthonormality_error`]: Rot3::orthonormality_error
    pub fn renormalize(&self) -> Self {
        let svd = self.m.svd(true, true);
        let u = svd.u.expect("svd of 3x3 always yields U");
        let v_t = svd.v_t.expect("svd of 3x3 always yields V^T");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            // Flip the least-significant singular direction to stay in SO(3).
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Rot3 { m: r }
    }

    /// Yaw (rotation about Z) of the intrinsic Z-Y-X Euler decomposition,
    /// in (−π, π].
    ///
    /// Fails when pitch is at ±90° (`|r31| ≈ 1`), where yaw and roll are
    /// indistinguishable.
    pub fn yaw(&self) -> Result<f64, GeometryError> {
        let r31 = self.m[(2, 0)];
        if r31.abs() >= 1.0 - 1e-9 {
            return Err(GeometryError::DegenerateOrientation { r31 });
        }
        Ok(wrap_angle(self.m[(1, 0)].atan2(self.m[(0, 0)])))
    }
}

/// Yaw Euler angle of a rotation; see [`Rot3::yaw`].
pub fn yaw_of(r: &Rot3) -> Result<f64, GeometryError> {
    r.yaw()
}

/// A rigid transform: rotation plus translation in meters.
///
/// `Pose3` doubles as "pose of frame B expressed in frame A": composing
/// `a_from_b.compose(&b_from_c)` yields `a_from_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3 {
    pub rot: Rot3,
    pub trans: Vector3<f64>,
}

impl Pose3 {
    pub fn identity() -> Self {
        Pose3 {
            rot: Rot3::identity(),
            trans: Vector3::zeros(),
        }
    }

    pub fn new(rot: Rot3, trans: Vector3<f64>) -> Self {
        Pose3 { rot, trans }
    }

    /// Ground-plane pose: yaw about Z at height `z = 0`.
    pub fn planar(x: f64, y: f64, yaw: f64) -> Self {
        Pose3 {
            rot: Rot3::rot_z(yaw),
            trans: Vector3::new(x, y, 0.0),
        }
    }

    /// Composition `self ∘ other` (matrix product of the homogeneous forms).
    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3 {
            rot: self.rot.mul(&other.rot),
            trans: self.rot.apply(&other.trans) + self.trans,
        }
    }

    /// Inverse transform: `(Rᵀ, −Rᵀt)`.
    pub fn inverse(&self) -> Pose3 {
        let rt = self.rot.transpose();
        Pose3 {
            trans: -rt.apply(&self.trans),
            rot: rt,
        }
    }

    /// Map a point from the source frame into the destination frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rot.apply(p) + self.trans
    }
}

/// Composition of two poses; see [`Pose3::compose`].
pub fn compose(a: &Pose3, b: &Pose3) -> Pose3 {
    a.compose(b)
}

/// Inverse of a pose; see [`Pose3::inverse`].
pub fn inverse(p: &Pose3) -> Pose3 {
    p.inverse()
}
