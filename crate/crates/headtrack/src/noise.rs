//! Angle-dependent observation noise.
//!
//! An upstream pose estimator is typically accurate near the resting pose and
//! degrades toward extreme angles. Each axis carries a Gaussian-with-offset
//! curve
//!
//! ```text
//! R(x) = tau - lambda * exp(-(x - mu)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)
//! ```
//!
//! evaluated at the incoming observation angle `x`, so the filter trusts the
//! estimator most where it is known to be good. Raw fitted parameters can be
//! numerically extreme (roll fits in particular are near-degenerate with
//! `tau ~ lambda`), so evaluation clamps into `[r_min, r_max]` while the
//! fitted parameters themselves are preserved.

use crate::pose::{Axis, EulerPose, AXES};
use crate::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Default evaluation clamp, degrees^2.
pub const DEFAULT_R_MIN: f64 = 0.5;
pub const DEFAULT_R_MAX: f64 = 500.0;

/// Gaussian probability density at `x` for mean `mu` and std `sigma`.
pub(crate) fn gaussian_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let d = (x - mu) / sigma;
    (-0.5 * d * d).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

/// One axis of the observation-noise curve plus its evaluation clamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Amplitude factor of the Gaussian dip (opaque fitted coefficient).
    pub lambda: f64,
    /// Center of the dip, degrees.
    pub mu: f64,
    /// Width of the dip, degrees; must be positive.
    pub sigma: f64,
    /// Offset reached far from the center, degrees^2.
    pub tau: f64,
    /// Lower evaluation clamp, degrees^2; must be positive.
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    /// Upper evaluation clamp, degrees^2.
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

fn default_r_min() -> f64 {
    DEFAULT_R_MIN
}

fn default_r_max() -> f64 {
    DEFAULT_R_MAX
}

impl NoiseModel {
    pub fn new(lambda: f64, mu: f64, sigma: f64, tau: f64) -> Self {
        Self {
            lambda,
            mu,
            sigma,
            tau,
            r_min: DEFAULT_R_MIN,
            r_max: DEFAULT_R_MAX,
        }
    }

    pub fn with_bounds(mut self, r_min: f64, r_max: f64) -> Self {
        self.r_min = r_min;
        self.r_max = r_max;
        self
    }

    /// A constant curve: `lambda = 0`, so every angle sees the same value.
    pub fn constant(tau: f64) -> Self {
        Self::new(0.0, 0.0, 1.0, tau)
    }

    /// Build a curve from its value at the center and its tail offset:
    /// `eval_raw(mu) = center_value` and `eval_raw(+-inf) = tail_value`.
    pub fn from_extremes(mu: f64, sigma: f64, center_value: f64, tail_value: f64) -> Self {
        let lambda = (tail_value - center_value) * (2.0 * std::f64::consts::PI).sqrt() * sigma;
        Self::new(lambda, mu, sigma, tail_value)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("r_min", self.r_min),
            ("r_max", self.r_max),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { what, value: v });
            }
        }
        if self.sigma <= 0.0 {
            return Err(Error::Config(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.r_min <= 0.0 {
            return Err(Error::Config(format!(
                "r_min must be > 0, got {}",
                self.r_min
            )));
        }
        if self.r_max < self.r_min {
            return Err(Error::Config(format!(
                "r_max ({}) must be >= r_min ({})",
                self.r_max, self.r_min
            )));
        }
        Ok(())
    }

    /// The curve value before clamping. May be non-positive for degenerate
    /// fitted parameters; use [`NoiseModel::eval`] for filter input.
    pub fn eval_raw(&self, x: f64) -> f64 {
        self.tau - self.lambda * gaussian_density(x, self.mu, self.sigma)
    }

    /// Clamped evaluation: always in `[r_min, r_max]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: "noise-model input angle",
                value: x,
            });
        }
        Ok(self.eval_raw(x).clamp(self.r_min, self.r_max))
    }
}

/// Per-axis noise curves characterizing one upstream pose estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorProfile {
    pub name: String,
    pub pitch: NoiseModel,
    pub yaw: NoiseModel,
    pub roll: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProfileProvenance>,
}

/// Fit provenance carried along when a profile is exported from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileProvenance {
    /// Error samples that backed the fit.
    pub sample_count: usize,
    /// Count-weighted residual RMS per axis, degrees: `(pitch, yaw, roll)`.
    pub residual_rms: [f64; 3],
}

impl EstimatorProfile {
    pub fn new(
        name: impl Into<String>,
        pitch: NoiseModel,
        yaw: NoiseModel,
        roll: NoiseModel,
    ) -> Self {
        Self {
            name: name.into(),
            pitch,
            yaw,
            roll,
            provenance: None,
        }
    }

    pub fn model(&self, axis: Axis) -> &NoiseModel {
        match axis {
            Axis::Pitch => &self.pitch,
            Axis::Yaw => &self.yaw,
            Axis::Roll => &self.roll,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pitch.validate()?;
        self.yaw.validate()?;
        self.roll.validate()
    }

    /// Assemble the 3x3 diagonal observation covariance for one observation.
    /// Each diagonal entry depends only on its own axis of `z`.
    pub fn observation_covariance(&self, z: &EulerPose) -> Result<Matrix3<f64>> {
        let mut diag = Vector3::zeros();
        for axis in AXES {
            diag[axis.index()] = self.model(axis).eval(z.axis(axis))?;
        }
        Ok(Matrix3::from_diagonal(&diag))
    }

    /// Fitted parameters for the FSA-Net estimator on the AFLW2000 benchmark.
    pub fn fsa_net() -> Self {
        Self::new(
            "fsa-net",
            NoiseModel::new(312.07, -5.19, 132.41, 315.43),
            NoiseModel::new(4.11, -0.35, 30.87, 7.64),
            NoiseModel::new(3.29e5, -5.62e-1, 4.44e3, 3.29e5),
        )
    }

    /// Fitted parameters for the Hopenet estimator on the AFLW2000 benchmark.
    pub fn hopenet() -> Self {
        Self::new(
            "hopenet",
            NoiseModel::new(229.18, -8.30, 101.37, 232.88),
            NoiseModel::new(7.017, -5.57, 48.28, 10.74),
            NoiseModel::new(9.35e4, 4.76e-2, 2.219e3, 9.35e4),
        )
    }

    /// Look up a built-in profile by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "fsa-net" => Some(Self::fsa_net()),
            "hopenet" => Some(Self::hopenet()),
            _ => None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let profile: Self =
            toml::from_str(s).map_err(|e| Error::Config(format!("profile parse error: {e}")))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("profile serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }
}
