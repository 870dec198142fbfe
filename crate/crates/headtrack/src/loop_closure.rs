//! Origin loop closure: pin the stream near a calibrated resting pose.
//!
//! Whenever an observation lands within a threshold `theta` of the origin
//! pose `kappa`, it is blended toward that origin:
//!
//! ```text
//! z' = xi * z + (1 - xi) * kappa    if ||z - kappa|| <= theta
//! z' = z                            otherwise
//! ```
//!
//! The blend is discontinuous at the threshold boundary; the jump there has
//! magnitude `(1 - xi) * theta`. Outside the threshold the observation
//! passes through untouched.

use crate::pose::{EulerPose, AXES};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default fusion factor.
pub const DEFAULT_XI: f64 = 0.618;
/// Default threshold, degrees.
pub const DEFAULT_THETA: f64 = 2.0;
/// Default number of leading observations averaged into the origin.
pub const DEFAULT_CALIBRATION_FRAMES: usize = 30;

/// How the threshold test interprets the distance to the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NormMode {
    /// Euclidean norm over the `(pitch, yaw, roll)` difference vector; the
    /// blend applies to all three axes at once.
    #[serde(rename = "euclidean_3d")]
    #[default]
    Euclidean3d,
    /// Each axis is tested and blended independently against its own origin
    /// component.
    #[serde(rename = "per_axis")]
    PerAxis,
}

/// Resolved blend parameters with a known origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopClosureConfig {
    /// Origin pose `kappa`, degrees.
    pub kappa: EulerPose,
    /// Fusion factor in `(0, 1]`.
    pub xi: f64,
    /// Threshold in degrees; the boundary itself takes the blend branch.
    pub theta: f64,
    pub norm_mode: NormMode,
}

impl LoopClosureConfig {
    pub fn new(kappa: EulerPose) -> Self {
        Self {
            kappa,
            xi: DEFAULT_XI,
            theta: DEFAULT_THETA,
            norm_mode: NormMode::Euclidean3d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kappa.ensure_finite("loop-closure origin")?;
        if !self.xi.is_finite() || self.xi <= 0.0 || self.xi > 1.0 {
            return Err(Error::Config(format!(
                "xi must be in (0, 1], got {}",
                self.xi
            )));
        }
        if !self.theta.is_finite() || self.theta < 0.0 {
            return Err(Error::Config(format!(
                "theta must be >= 0, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    /// Blend `z` toward the origin when it is within the threshold.
    pub fn apply(&self, z: EulerPose) -> Result<EulerPose> {
        z.ensure_finite("loop-closure observation")?;
        Ok(match self.norm_mode {
            NormMode::Euclidean3d => {
                if z.distance(&self.kappa) <= self.theta {
                    z * self.xi + self.kappa * (1.0 - self.xi)
                } else {
                    z
                }
            }
            NormMode::PerAxis => {
                let mut out = z;
                for axis in AXES {
                    let za = z.axis(axis);
                    let ka = self.kappa.axis(axis);
                    if (za - ka).abs() <= self.theta {
                        let blended = self.xi * za + (1.0 - self.xi) * ka;
                        match axis {
                            crate::pose::Axis::Pitch => out.pitch = blended,
                            crate::pose::Axis::Yaw => out.yaw = blended,
                            crate::pose::Axis::Roll => out.roll = blended,
                        }
                    }
                }
                out
            }
        })
    }
}

/// Componentwise mean of the given observations; the usual origin estimate
/// over the first N frames of a stream.
pub fn calibrate_origin(observations: &[EulerPose]) -> Result<EulerPose> {
    if observations.is_empty() {
        return Err(Error::EmptyInput(
            "origin calibration needs at least one observation",
        ));
    }
    let mut sum = EulerPose::ZERO;
    for (i, obs) in observations.iter().enumerate() {
        obs.ensure_finite("calibration observation")
            .map_err(|e| e.at_frame(i))?;
        sum = sum + *obs;
    }
    Ok(sum * (1.0 / observations.len() as f64))
}

/// Where the origin comes from when a session starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OriginMode {
    /// Use this pose directly.
    Fixed(EulerPose),
    /// Average the first `n` observations, then start blending.
    Calibrate { frames: usize },
}

/// Loop-closure parameters for a session whose origin may still need
/// calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopClosureSetup {
    pub xi: f64,
    pub theta: f64,
    pub norm_mode: NormMode,
    pub origin: OriginMode,
}

impl LoopClosureSetup {
    pub fn fixed(kappa: EulerPose) -> Self {
        Self {
            xi: DEFAULT_XI,
            theta: DEFAULT_THETA,
            norm_mode: NormMode::Euclidean3d,
            origin: OriginMode::Fixed(kappa),
        }
    }

    pub fn calibrating(frames: usize) -> Self {
        Self {
            xi: DEFAULT_XI,
            theta: DEFAULT_THETA,
            norm_mode: NormMode::Euclidean3d,
            origin: OriginMode::Calibrate { frames },
        }
    }

    pub fn with_norm_mode(mut self, norm_mode: NormMode) -> Self {
        self.norm_mode = norm_mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let kappa = match self.origin {
            OriginMode::Fixed(k) => k,
            OriginMode::Calibrate { frames } => {
                if frames == 0 {
                    return Err(Error::Config(
                        "loop-closure calibration needs at least one frame".into(),
                    ));
                }
                EulerPose::ZERO
            }
        };
        LoopClosureConfig {
            kappa,
            xi: self.xi,
            theta: self.theta,
            norm_mode: self.norm_mode,
        }
        .validate()
    }
}

/// Per-session loop-closure state: collects calibration frames, then blends.
#[derive(Debug, Clone)]
pub struct LoopClosureRuntime {
    setup: LoopClosureSetup,
    kappa: Option<EulerPose>,
    calibration_sum: EulerPose,
    calibration_count: usize,
}

impl LoopClosureRuntime {
    pub fn new(setup: LoopClosureSetup) -> Result<Self> {
        setup.validate()?;
        let kappa = match setup.origin {
            OriginMode::Fixed(k) => Some(k),
            OriginMode::Calibrate { .. } => None,
        };
        Ok(Self {
            setup,
            kappa,
            calibration_sum: EulerPose::ZERO,
            calibration_count: 0,
        })
    }

    /// The origin, once known.
    pub fn origin(&self) -> Option<EulerPose> {
        self.kappa
    }

    /// Feed one observation through: during calibration the observation
    /// passes unchanged and is folded into the origin average; once the
    /// origin is fixed, the blend applies.
    pub fn observe(&mut self, z: EulerPose) -> Result<EulerPose> {
        match self.kappa {
            Some(kappa) => LoopClosureConfig {
                kappa,
                xi: self.setup.xi,
                theta: self.setup.theta,
                norm_mode: self.setup.norm_mode,
            }
            .apply(z),
            None => {
                z.ensure_finite("loop-closure observation")?;
                self.calibration_sum = self.calibration_sum + z;
                self.calibration_count += 1;
                if let OriginMode::Calibrate { frames } = self.setup.origin {
                    if self.calibration_count >= frames {
                        self.kappa =
                            Some(self.calibration_sum * (1.0 / self.calibration_count as f64));
                    }
                }
                Ok(z)
            }
        }
    }
}
