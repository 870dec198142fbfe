//! Shared domain types: Euler poses, filter states, covariances, and frames.
//!
//! Angles are degrees everywhere, and the component order at every interface
//! is `(pitch, yaw, roll)`. Angle normalization to `[-180, 180)` happens at
//! ingestion boundaries only; filter arithmetic assumes the working range is
//! far from the wrap point.

use crate::{Error, Result};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};

/// The three rotation axes, in canonical order.
pub const AXES: [Axis; 3] = [Axis::Pitch, Axis::Yaw, Axis::Roll];

/// One rotation axis of the head pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Pitch,
    Yaw,
    Roll,
}

impl Axis {
    /// Position of this axis in the canonical `(pitch, yaw, roll)` order.
    pub fn index(self) -> usize {
        match self {
            Axis::Pitch => 0,
            Axis::Yaw => 1,
            Axis::Roll => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
            Axis::Roll => "roll",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Wrap an angle in degrees into `[-180, 180)`.
///
/// The result differs from the input by an exact multiple of 360 and the
/// operation is idempotent. Non-finite input is rejected.
pub fn normalize_angle(raw: f64) -> Result<f64> {
    if !raw.is_finite() {
        return Err(Error::NonFinite {
            what: "angle",
            value: raw,
        });
    }
    // In-range values pass through bit-identically; the shift-and-wrap
    // arithmetic below would disturb their low-order bits.
    if (-180.0..180.0).contains(&raw) {
        return Ok(raw);
    }
    let wrapped = (raw + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can land exactly on 360.0 - 180.0 through rounding.
    Ok(if wrapped >= 180.0 { -180.0 } else { wrapped })
}

/// A head pose as Euler angles in degrees: `(pitch, yaw, roll)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerPose {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl EulerPose {
    pub const ZERO: EulerPose = EulerPose {
        pitch: 0.0,
        yaw: 0.0,
        roll: 0.0,
    };

    pub fn new(pitch: f64, yaw: f64, roll: f64) -> Self {
        Self { pitch, yaw, roll }
    }

    pub fn axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Pitch => self.pitch,
            Axis::Yaw => self.yaw,
            Axis::Roll => self.roll,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pitch.is_finite() && self.yaw.is_finite() && self.roll.is_finite()
    }

    pub(crate) fn ensure_finite(&self, what: &'static str) -> Result<()> {
        for axis in AXES {
            let v = self.axis(axis);
            if !v.is_finite() {
                return Err(Error::NonFinite { what, value: v });
            }
        }
        Ok(())
    }

    /// Normalize each component into `[-180, 180)`.
    pub fn normalized(self) -> Result<Self> {
        Ok(Self {
            pitch: normalize_angle(self.pitch)?,
            yaw: normalize_angle(self.yaw)?,
            roll: normalize_angle(self.roll)?,
        })
    }

    /// Euclidean norm of the componentwise difference, in degrees.
    pub fn distance(&self, other: &EulerPose) -> f64 {
        let d = *self - *other;
        (d.pitch * d.pitch + d.yaw * d.yaw + d.roll * d.roll).sqrt()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.pitch, self.yaw, self.roll)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for EulerPose {
    type Output = EulerPose;
    fn add(self, rhs: EulerPose) -> EulerPose {
        EulerPose::new(
            self.pitch + rhs.pitch,
            self.yaw + rhs.yaw,
            self.roll + rhs.roll,
        )
    }
}

impl Sub for EulerPose {
    type Output = EulerPose;
    fn sub(self, rhs: EulerPose) -> EulerPose {
        EulerPose::new(
            self.pitch - rhs.pitch,
            self.yaw - rhs.yaw,
            self.roll - rhs.roll,
        )
    }
}

impl Mul<f64> for EulerPose {
    type Output = EulerPose;
    fn mul(self, rhs: f64) -> EulerPose {
        EulerPose::new(self.pitch * rhs, self.yaw * rhs, self.roll * rhs)
    }
}

/// Full filter state: pose angles plus angular velocities in degrees/second,
/// ordered `(pitch, yaw, roll, v_pitch, v_yaw, v_roll)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub pose: EulerPose,
    pub velocity: [f64; 3],
}

impl StateVector {
    pub fn new(pose: EulerPose, velocity: [f64; 3]) -> Self {
        Self { pose, velocity }
    }

    /// A state at the given pose with zero angular velocity.
    pub fn at_rest(pose: EulerPose) -> Self {
        Self::new(pose, [0.0; 3])
    }

    pub fn is_finite(&self) -> bool {
        self.pose.is_finite() && self.velocity.iter().all(|v| v.is_finite())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.pose.pitch,
            self.pose.yaw,
            self.pose.roll,
            self.velocity[0],
            self.velocity[1],
            self.velocity[2],
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            pose: EulerPose::new(v[0], v[1], v[2]),
            velocity: [v[3], v[4], v[5]],
        }
    }
}

/// Symmetric 6x6 state covariance.
///
/// Construction re-symmetrizes, so the stored matrix is symmetric by
/// invariant; positive semidefiniteness is maintained by the filter and
/// checked in tests via [`CovarianceMatrix::min_eigenvalue`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix6<f64>);

impl CovarianceMatrix {
    pub fn from_diagonal(diag: &[f64; 6]) -> Self {
        Self(Matrix6::from_diagonal(&Vector6::from_row_slice(diag)))
    }

    /// Force symmetry as `(m + m^T) / 2` and wrap.
    pub fn from_matrix(m: Matrix6<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix6<f64> {
        self.0
    }

    /// Top-left 3x3 block: the pose-angle covariance.
    pub fn pose_block(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    /// Largest absolute difference between the matrix and its transpose.
    pub fn max_asymmetry(&self) -> f64 {
        let d = self.0 - self.0.transpose();
        d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Smallest eigenvalue; negative values beyond tolerance indicate a
    /// covariance that is no longer positive semidefinite.
    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(*v))
    }
}

/// One timestamped pose sample, optionally paired with ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    /// Seconds; strictly increasing within a stream after ingestion.
    pub t: f64,
    pub pose: EulerPose,
    pub ground_truth: Option<EulerPose>,
}

impl FrameRecord {
    pub fn new(t: f64, pose: EulerPose) -> Self {
        Self {
            t,
            pose,
            ground_truth: None,
        }
    }

    pub fn with_truth(t: f64, pose: EulerPose, truth: EulerPose) -> Self {
        Self {
            t,
            pose,
            ground_truth: Some(truth),
        }
    }
}
