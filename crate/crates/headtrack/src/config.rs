//! Run configuration: one TOML document wiring the filter, the noise
//! profile, loop closure, and stream I/O.
//!
//! ```toml
//! [kalman]
//! process_noise_q = [0.01, 0.01, 0.01, 0.1, 0.1, 0.1]
//! initial_covariance_p0 = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0]
//! dt_mode = "from_timestamps"   # or "fixed" with fixed_dt
//! fixed_dt = 0.033333333333333333
//! joseph_form = false
//! noise_eval_point = "blended"  # or "raw"
//!
//! [noise]
//! profile = "fsa-net"           # built-in name or a profile file path
//!
//! [loop_closure]
//! enabled = false
//! xi = 0.618
//! theta = 2.0
//! norm_mode = "euclidean_3d"    # or "per_axis"
//! # kappa = [0.0, 0.0, 0.0]     # (pitch, yaw, roll); omit to calibrate
//! calibration_frames = 30
//!
//! [io]
//! # input = "stream.jsonl"      # exactly one of input / listen
//! # listen = "127.0.0.1:9000"
//! # output = "filtered.jsonl"
//! # metrics = "metrics.json"
//! format = "jsonl"              # or "csv"
//! settle_epsilon = 3.0
//! ```
//!
//! Every key is optional; the defaults above apply. An inline profile can
//! replace the reference: `[noise.inline]` with `name` plus
//! `[noise.inline.pitch]`, `[noise.inline.yaw]`, `[noise.inline.roll]`
//! tables carrying `lambda`, `mu`, `sigma`, `tau`, `r_min`, `r_max`.

use crate::kalman::{DtMode, FilterSession, KalmanConfig, NoiseEvalPoint, DEFAULT_FIXED_DT};
use crate::loop_closure::{
    LoopClosureSetup, NormMode, OriginMode, DEFAULT_CALIBRATION_FRAMES, DEFAULT_THETA, DEFAULT_XI,
};
use crate::noise::EstimatorProfile;
use crate::pose::EulerPose;
use crate::stream::StreamFormat;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable consulted for the config path when none is given on
/// the command line.
pub const CONFIG_ENV_VAR: &str = "HPT_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DtModeKey {
    #[default]
    FromTimestamps,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseEvalKey {
    #[default]
    Blended,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanSection {
    pub process_noise_q: [f64; 6],
    pub initial_covariance_p0: [f64; 6],
    pub dt_mode: DtModeKey,
    pub fixed_dt: f64,
    pub joseph_form: bool,
    pub noise_eval_point: NoiseEvalKey,
}

impl Default for KalmanSection {
    fn default() -> Self {
        Self {
            process_noise_q: crate::kalman::DEFAULT_PROCESS_NOISE,
            initial_covariance_p0: crate::kalman::DEFAULT_INITIAL_COVARIANCE,
            dt_mode: DtModeKey::FromTimestamps,
            fixed_dt: DEFAULT_FIXED_DT,
            joseph_form: false,
            noise_eval_point: NoiseEvalKey::Blended,
        }
    }
}

impl KalmanSection {
    pub fn to_kalman_config(&self) -> Result<KalmanConfig> {
        let config = KalmanConfig {
            process_noise_q: self.process_noise_q,
            initial_covariance_p0: self.initial_covariance_p0,
            dt_mode: match self.dt_mode {
                DtModeKey::FromTimestamps => DtMode::FromTimestamps,
                DtModeKey::Fixed => DtMode::Fixed(self.fixed_dt),
            },
            joseph_form: self.joseph_form,
            noise_eval: match self.noise_eval_point {
                NoiseEvalKey::Blended => NoiseEvalPoint::BlendedObservation,
                NoiseEvalKey::Raw => NoiseEvalPoint::RawObservation,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Built-in profile name (`fsa-net`, `hopenet`) or a profile file path.
    pub profile: Option<String>,
    /// Full profile given inline instead of by reference.
    pub inline: Option<EstimatorProfile>,
}

impl NoiseSection {
    pub fn resolve(&self) -> Result<EstimatorProfile> {
        match (&self.profile, &self.inline) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either noise.profile or noise.inline, not both".into(),
            )),
            (None, Some(inline)) => {
                inline.validate()?;
                Ok(inline.clone())
            }
            (Some(reference), None) => match EstimatorProfile::builtin(reference) {
                Some(profile) => Ok(profile),
                None => {
                    let path = Path::new(reference);
                    if path.exists() {
                        EstimatorProfile::load(path)
                    } else {
                        Err(Error::Config(format!(
                            "noise profile {reference:?} is neither built-in nor a readable file"
                        )))
                    }
                }
            },
            (None, None) => Ok(EstimatorProfile::fsa_net()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopClosureSection {
    pub enabled: bool,
    pub xi: f64,
    pub theta: f64,
    pub norm_mode: NormMode,
    /// Explicit origin `(pitch, yaw, roll)`; omitted means calibrate from
    /// the first `calibration_frames` observations.
    pub kappa: Option<[f64; 3]>,
    pub calibration_frames: usize,
}

impl Default for LoopClosureSection {
    fn default() -> Self {
        Self {
            enabled: false,
            xi: DEFAULT_XI,
            theta: DEFAULT_THETA,
            norm_mode: NormMode::Euclidean3d,
            kappa: None,
            calibration_frames: DEFAULT_CALIBRATION_FRAMES,
        }
    }
}

impl LoopClosureSection {
    pub fn to_setup(&self) -> Result<Option<LoopClosureSetup>> {
        if !self.enabled {
            return Ok(None);
        }
        let setup = LoopClosureSetup {
            xi: self.xi,
            theta: self.theta,
            norm_mode: self.norm_mode,
            origin: match self.kappa {
                Some([p, y, r]) => OriginMode::Fixed(EulerPose::new(p, y, r)),
                None => OriginMode::Calibrate {
                    frames: self.calibration_frames,
                },
            },
        };
        setup.validate()?;
        Ok(Some(setup))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// TCP listen address for the frame server.
    pub listen: Option<String>,
    pub format: StreamFormat,
    pub metrics: Option<PathBuf>,
    /// Radius of the settle band around the loop-closure origin, degrees.
    pub settle_epsilon: f64,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            input: None,
            output: None,
            listen: None,
            format: StreamFormat::Jsonl,
            metrics: None,
            settle_epsilon: 3.0,
        }
    }
}

/// The whole run configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kalman: KalmanSection,
    pub noise: NoiseSection,
    pub loop_closure: LoopClosureSection,
    pub io: IoSection,
}

/// Everything needed to start identical filter sessions: the offline
/// pipeline and the frame server both build sessions from this, which is
/// what keeps their outputs interchangeable.
#[derive(Debug, Clone)]
pub struct SessionBlueprint {
    pub kalman: KalmanConfig,
    pub profile: EstimatorProfile,
    pub loop_closure: Option<LoopClosureSetup>,
}

impl SessionBlueprint {
    pub fn session(&self, first_observation: EulerPose, t0: f64) -> Result<FilterSession> {
        FilterSession::new(
            self.kalman,
            first_observation,
            t0,
            self.profile.clone(),
            self.loop_closure,
        )
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        // Surface section-level problems eagerly.
        config.blueprint()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Resolve sections into ready-to-use session parts.
    pub fn blueprint(&self) -> Result<SessionBlueprint> {
        Ok(SessionBlueprint {
            kalman: self.kalman.to_kalman_config()?,
            profile: self.noise.resolve()?,
            loop_closure: self.loop_closure.to_setup()?,
        })
    }

    /// The single-input-source rule for offline runs.
    pub fn input_path(&self) -> Result<&Path> {
        match (&self.io.input, &self.io.listen) {
            (Some(path), None) => Ok(path),
            (None, Some(_)) => Err(Error::Config(
                "config selects a listen address; this run needs io.input".into(),
            )),
            (Some(_), Some(_)) => Err(Error::Config(
                "exactly one input source: io.input or io.listen, not both".into(),
            )),
            (None, None) => Err(Error::Config("no input: set io.input".into())),
        }
    }

    /// The single-input-source rule for server runs.
    pub fn listen_address(&self) -> Result<&str> {
        match (&self.io.input, &self.io.listen) {
            (None, Some(addr)) => Ok(addr),
            (Some(_), None) => Err(Error::Config(
                "config selects io.input; serving needs io.listen".into(),
            )),
            (Some(_), Some(_)) => Err(Error::Config(
                "exactly one input source: io.input or io.listen, not both".into(),
            )),
            (None, None) => Err(Error::Config("no listen address: set io.listen".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let config = RunConfig::default();
        let text = config.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, back);
        let bp = back.blueprint().unwrap();
        assert_eq!(bp.profile.name, "fsa-net");
        assert!(bp.loop_closure.is_none());
    }

    #[test]
    fn full_document_parses() {
        let text = r#"
            [kalman]
            process_noise_q = [0.01, 0.01, 0.01, 0.1, 0.1, 0.1]
            initial_covariance_p0 = [10.0, 10.0, 10.0, 10.0, 10.0, 10.0]
            dt_mode = "fixed"
            fixed_dt = 0.02
            joseph_form = true
            noise_eval_point = "raw"

            [noise]
            profile = "hopenet"

            [loop_closure]
            enabled = true
            xi = 0.618
            theta = 2.0
            norm_mode = "per_axis"
            kappa = [0.0, 1.0, 0.0]
            calibration_frames = 10

            [io]
            input = "in.jsonl"
            output = "out.jsonl"
            format = "jsonl"
            settle_epsilon = 2.5
        "#;
        let config = RunConfig::from_toml_str(text).unwrap();
        let bp = config.blueprint().unwrap();
        assert_eq!(bp.profile.name, "hopenet");
        assert_eq!(bp.kalman.dt_mode, DtMode::Fixed(0.02));
        assert!(bp.kalman.joseph_form);
        assert_eq!(bp.kalman.noise_eval, NoiseEvalPoint::RawObservation);
        let lc = bp.loop_closure.unwrap();
        assert_eq!(lc.norm_mode, NormMode::PerAxis);
        assert_eq!(lc.origin, OriginMode::Fixed(EulerPose::new(0.0, 1.0, 0.0)));
        assert_eq!(config.input_path().unwrap(), Path::new("in.jsonl"));
        assert!(config.listen_address().is_err());
    }

    #[test]
    fn inline_profile_and_reference_conflict() {
        let text = r#"
            [noise]
            profile = "fsa-net"

            [noise.inline]
            name = "x"
            [noise.inline.pitch]
            lambda = 0.0
            mu = 0.0
            sigma = 1.0
            tau = 1.0
            [noise.inline.yaw]
            lambda = 0.0
            mu = 0.0
            sigma = 1.0
            tau = 1.0
            [noise.inline.roll]
            lambda = 0.0
            mu = 0.0
            sigma = 1.0
            tau = 1.0
        "#;
        assert!(RunConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("[kalman]\nprocess_noise = 1.0\n").is_err());
    }

    #[test]
    fn missing_profile_reference_fails() {
        let text = "[noise]\nprofile = \"/definitely/not/a/file.toml\"\n";
        assert!(RunConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn invalid_kalman_values_fail() {
        let text = "[kalman]\nprocess_noise_q = [0.0, 0.01, 0.01, 0.1, 0.1, 0.1]\n";
        assert!(RunConfig::from_toml_str(text).is_err());
    }
}
