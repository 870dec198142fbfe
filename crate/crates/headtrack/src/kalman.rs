//! Constant-velocity Kalman filter over `(pitch, yaw, roll)` plus angular
//! rates.
//!
//! The state is the 6-vector `(p, y, r, v_p, v_y, v_r)`; only the three
//! angles are observed, so the measurement matrix is `H = [I3 0]` and the
//! velocities are estimated purely through the motion model. Per frame the
//! session optionally blends the observation toward the loop-closure origin,
//! evaluates the angle-dependent observation covariance, predicts across the
//! elapsed time, and runs the measurement update. Covariances are forcibly
//! re-symmetrized after every predict and update.

use crate::loop_closure::{LoopClosureRuntime, LoopClosureSetup};
use crate::noise::EstimatorProfile;
use crate::pose::{CovarianceMatrix, EulerPose, FrameRecord, StateVector};
use crate::{Error, Result};
use nalgebra::{Matrix3, Matrix3x6, Matrix6, Matrix6x3, Vector6};

/// Condition-number ceiling beyond which the innovation covariance is
/// treated as singular and the session flags itself for re-initialization.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Default per-step process noise: pose entries in degrees^2, velocity
/// entries in (degrees/s)^2. Tuning values, not fitted ones.
pub const DEFAULT_PROCESS_NOISE: [f64; 6] = [0.01, 0.01, 0.01, 0.1, 0.1, 0.1];

/// Default initial covariance diagonal; large enough that the first few
/// observations dominate the prior.
pub const DEFAULT_INITIAL_COVARIANCE: [f64; 6] = [10.0; 6];

/// Fallback frame period for timestamp-free streams, seconds.
pub const DEFAULT_FIXED_DT: f64 = 1.0 / 30.0;

/// How the per-step time delta is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtMode {
    /// Difference of consecutive frame timestamps; regressions are rejected.
    FromTimestamps,
    /// A fixed period in seconds, for streams without usable timestamps.
    Fixed(f64),
}

/// Which observation the noise curve is evaluated at when loop closure is
/// active: the blended observation actually fed to the update (default), or
/// the raw estimator output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseEvalPoint {
    BlendedObservation,
    RawObservation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    /// Per-step process noise diagonal, `(pose x3, velocity x3)`.
    pub process_noise_q: [f64; 6],
    /// Initial covariance diagonal.
    pub initial_covariance_p0: [f64; 6],
    pub dt_mode: DtMode,
    /// Use the Joseph-form covariance update instead of `(I - K H) P`.
    pub joseph_form: bool,
    pub noise_eval: NoiseEvalPoint,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            process_noise_q: DEFAULT_PROCESS_NOISE,
            initial_covariance_p0: DEFAULT_INITIAL_COVARIANCE,
            dt_mode: DtMode::FromTimestamps,
            joseph_form: false,
            noise_eval: NoiseEvalPoint::BlendedObservation,
        }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in self
            .process_noise_q
            .iter()
            .map(|v| ("process noise entry", *v))
            .chain(
                self.initial_covariance_p0
                    .iter()
                    .map(|v| ("initial covariance entry", *v)),
            )
        {
            if !v.is_finite() {
                return Err(Error::NonFinite { what, value: v });
            }
            if v <= 0.0 {
                return Err(Error::Config(format!("{what} must be > 0, got {v}")));
            }
        }
        if let DtMode::Fixed(dt) = self.dt_mode {
            if !dt.is_finite() || dt <= 0.0 {
                return Err(Error::Config(format!("fixed dt must be > 0, got {dt}")));
            }
        }
        Ok(())
    }
}

/// State-transition matrix for a constant-velocity step of length `dt`:
/// identity blocks with `dt * I3` coupling pose to velocity.
pub fn transition_matrix(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
    }
    f
}

fn observation_matrix() -> Matrix3x6<f64> {
    let mut h = Matrix3x6::zeros();
    for i in 0..3 {
        h[(i, i)] = 1.0;
    }
    h
}

/// Propagate state and covariance across `dt` seconds:
/// `x' = F x`, `P' = F P F^T + Q`, re-symmetrized.
pub fn predict(
    state: &StateVector,
    covariance: &CovarianceMatrix,
    dt: f64,
    process_noise_q: &[f64; 6],
) -> Result<(StateVector, CovarianceMatrix)> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Config(format!("predict dt must be > 0, got {dt}")));
    }
    let f = transition_matrix(dt);
    let x = f * state.to_vector();
    let q = Matrix6::from_diagonal(&Vector6::from_row_slice(process_noise_q));
    let p = f * covariance.matrix() * f.transpose() + q;
    Ok((
        StateVector::from_vector(&x),
        CovarianceMatrix::from_matrix(p),
    ))
}

/// Kalman gain for the pose-only measurement: `K = P H^T S^{-1}` with
/// `S = H P H^T + R`, solved rather than inverted explicitly.
pub fn kalman_gain(
    prior_covariance: &CovarianceMatrix,
    r: &Matrix3<f64>,
) -> Result<Matrix6x3<f64>> {
    let s = prior_covariance.pose_block() + r;
    let eigen = s.symmetric_eigen();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in eigen.eigenvalues.iter() {
        min = min.min(*v);
        max = max.max(*v);
    }
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if min <= 0.0 || condition > MAX_INNOVATION_CONDITION {
        return Err(Error::DegradedCovariance { condition });
    }
    let p_ht = prior_covariance
        .matrix()
        .fixed_view::<6, 3>(0, 0)
        .into_owned();
    let chol = s
        .cholesky()
        .ok_or(Error::DegradedCovariance { condition })?;
    // K^T = S^{-1} (P H^T)^T, using symmetry of S.
    Ok(chol.solve(&p_ht.transpose()).transpose())
}

/// Measurement update: fold the observation `z` into the prior.
pub fn update(
    prior_state: &StateVector,
    prior_covariance: &CovarianceMatrix,
    z: &EulerPose,
    r: &Matrix3<f64>,
    joseph_form: bool,
) -> Result<(StateVector, CovarianceMatrix)> {
    z.ensure_finite("observation")?;
    for i in 0..3 {
        let v = r[(i, i)];
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Config(format!(
                "observation noise diagonal must be > 0, got {v}"
            )));
        }
    }
    let k = kalman_gain(prior_covariance, r)?;
    let innovation = z.to_vector() - prior_state.pose.to_vector();
    let x = prior_state.to_vector() + k * innovation;
    let ikh = Matrix6::identity() - k * observation_matrix();
    let p = if joseph_form {
        ikh * prior_covariance.matrix() * ikh.transpose() + k * r * k.transpose()
    } else {
        ikh * prior_covariance.matrix()
    };
    Ok((
        StateVector::from_vector(&x),
        CovarianceMatrix::from_matrix(p),
    ))
}

/// A live filtering session: one per stream, stepped strictly in timestamp
/// order. Sessions are independent of each other and single-owner.
#[derive(Debug, Clone)]
pub struct FilterSession {
    config: KalmanConfig,
    profile: EstimatorProfile,
    loop_closure: Option<LoopClosureRuntime>,
    state: StateVector,
    covariance: CovarianceMatrix,
    last_timestamp: f64,
    degraded: bool,
}

impl FilterSession {
    /// Initialize from the first observation: the state starts at that pose
    /// with zero velocity and the covariance at `diag(p0)`.
    pub fn new(
        config: KalmanConfig,
        first_observation: EulerPose,
        t0: f64,
        profile: EstimatorProfile,
        loop_closure: Option<LoopClosureSetup>,
    ) -> Result<Self> {
        config.validate()?;
        profile.validate()?;
        first_observation.ensure_finite("first observation")?;
        if !t0.is_finite() {
            return Err(Error::NonFinite {
                what: "initial timestamp",
                value: t0,
            });
        }
        let loop_closure = loop_closure.map(LoopClosureRuntime::new).transpose()?;
        let mut session = Self {
            covariance: CovarianceMatrix::from_diagonal(&config.initial_covariance_p0),
            state: StateVector::at_rest(first_observation),
            last_timestamp: t0,
            config,
            profile,
            loop_closure,
            degraded: false,
        };
        // The first observation also counts toward origin calibration.
        if let Some(lc) = session.loop_closure.as_mut() {
            lc.observe(first_observation)?;
        }
        Ok(session)
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.covariance
    }

    pub fn last_timestamp(&self) -> f64 {
        self.last_timestamp
    }

    pub fn config(&self) -> &KalmanConfig {
        &self.config
    }

    /// True once a step failed on a singular innovation covariance; the
    /// session refuses further steps until [`FilterSession::reset`].
    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    /// The loop-closure origin, once calibrated or fixed.
    pub fn origin(&self) -> Option<EulerPose> {
        self.loop_closure.as_ref().and_then(|lc| lc.origin())
    }

    /// Re-initialize state, covariance, and timestamp in place, clearing a
    /// degraded flag. Loop-closure calibration is not restarted.
    pub fn reset(&mut self, first_observation: EulerPose, t0: f64) -> Result<()> {
        first_observation.ensure_finite("first observation")?;
        self.state = StateVector::at_rest(first_observation);
        self.covariance = CovarianceMatrix::from_diagonal(&self.config.initial_covariance_p0);
        self.last_timestamp = t0;
        self.degraded = false;
        Ok(())
    }

    /// Prior state and covariance `dt` seconds ahead, without mutating.
    pub fn predict(&self, dt: f64) -> Result<(StateVector, CovarianceMatrix)> {
        predict(
            &self.state,
            &self.covariance,
            dt,
            &self.config.process_noise_q,
        )
    }

    /// Process one frame and return the posterior state.
    pub fn step(&mut self, frame: &FrameRecord) -> Result<StateVector> {
        if self.degraded {
            return Err(Error::SessionDegraded);
        }
        frame.pose.ensure_finite("observation")?;
        if !frame.t.is_finite() {
            return Err(Error::NonFinite {
                what: "frame timestamp",
                value: frame.t,
            });
        }
        let dt = match self.config.dt_mode {
            DtMode::FromTimestamps => {
                if frame.t <= self.last_timestamp {
                    return Err(Error::TimestampOrder {
                        previous: self.last_timestamp,
                        current: frame.t,
                    });
                }
                frame.t - self.last_timestamp
            }
            DtMode::Fixed(dt) => dt,
        };
        let raw = frame.pose;
        let z = match self.loop_closure.as_mut() {
            Some(lc) => lc.observe(raw)?,
            None => raw,
        };
        let noise_point = match self.config.noise_eval {
            NoiseEvalPoint::BlendedObservation => z,
            NoiseEvalPoint::RawObservation => raw,
        };
        let r = self.profile.observation_covariance(&noise_point)?;
        let (prior_state, prior_covariance) = predict(
            &self.state,
            &self.covariance,
            dt,
            &self.config.process_noise_q,
        )?;
        match update(
            &prior_state,
            &prior_covariance,
            &z,
            &r,
            self.config.joseph_form,
        ) {
            Ok((state, covariance)) => {
                self.state = state;
                self.covariance = covariance;
                self.last_timestamp = frame.t;
                Ok(self.state)
            }
            Err(e) => {
                if matches!(e, Error::DegradedCovariance { .. }) {
                    self.degraded = true;
                }
                Err(e)
            }
        }
    }
}
