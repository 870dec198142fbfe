//! Adaptive Kalman filtering for head-pose streams.
//!
//! A pose estimator watching a person's head produces a noisy
//! `(pitch, yaw, roll)` stream whose error grows with the rotation angle.
//! This crate smooths such streams with a constant-velocity Kalman filter
//! whose observation noise adapts to the current angle through fitted
//! Gaussian-with-offset curves, and optionally pins the output near a
//! calibrated resting pose (origin loop closure). Alongside the filter it
//! ships the tooling to produce and evaluate those noise curves: error
//! binning and curve fitting, synthetic benchmark streams, stream metrics,
//! file formats, a filtering pipeline, and a line-delimited JSON TCP server
//! for live sessions.
//!
//! ```
//! use headtrack::kalman::{FilterSession, KalmanConfig};
//! use headtrack::noise::EstimatorProfile;
//! use headtrack::pose::{EulerPose, FrameRecord};
//!
//! let profile = EstimatorProfile::fsa_net();
//! let mut session = FilterSession::new(
//!     KalmanConfig::default(),
//!     EulerPose::new(0.0, 0.0, 0.0),
//!     0.0,
//!     profile,
//!     None,
//! )?;
//! let posterior = session.step(&FrameRecord::new(1.0 / 30.0, EulerPose::new(0.4, -0.2, 0.1)))?;
//! assert!(posterior.pose.yaw.abs() < 0.2);
//! # Ok::<(), headtrack::Error>(())
//! ```

pub mod config;
mod error;
pub mod fit;
pub mod kalman;
pub mod loop_closure;
pub mod noise;
pub mod pipeline;
pub mod pose;
pub mod server;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
pub use kalman::{FilterSession, KalmanConfig};
pub use noise::{EstimatorProfile, NoiseModel};
pub use pose::{normalize_angle, Axis, CovarianceMatrix, EulerPose, FrameRecord, StateVector};

#[cfg(doctest)]
mod book;
