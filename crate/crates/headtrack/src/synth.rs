//! Synthetic trajectories, estimator-noise corruption, and stream metrics.
//!
//! This is the desk-scale stand-in for a live estimator: ground truth comes
//! from sums of sinusoids (optionally with dwell-at-origin spans), the
//! "estimator" is a seeded angle-dependent Gaussian corruption, and the
//! metrics quantify what filtering buys: accuracy (RMSE), smoothness
//! (jitter), and how quickly a stream pins to a target (settle time).

use crate::noise::NoiseModel;
use crate::pose::{Axis, EulerPose, FrameRecord, AXES};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// One sinusoidal component of an axis motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    /// Degrees.
    pub amplitude: f64,
    /// Hz.
    pub frequency: f64,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
}

impl Sinusoid {
    pub fn new(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase: 0.0,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.amplitude * (std::f64::consts::TAU * self.frequency * t + self.phase).sin()
    }
}

/// Sum-of-sinusoids motion for one axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisMotion {
    #[serde(default)]
    pub sinusoids: Vec<Sinusoid>,
}

impl AxisMotion {
    pub fn single(amplitude: f64, frequency: f64) -> Self {
        Self {
            sinusoids: vec![Sinusoid::new(amplitude, frequency)],
        }
    }

    fn eval(&self, t: f64) -> f64 {
        // A fold from +0.0: the empty Sum identity is -0.0, which would
        // leak into output files for motionless axes.
        self.sinusoids.iter().fold(0.0, |acc, s| acc + s.eval(t))
    }
}

/// A time span during which the trajectory holds at the origin. The motion
/// blends continuously into and out of the span over
/// [`TrajectorySpec::dwell_transition`] seconds on either side; heads do not
/// teleport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellSegment {
    pub start: f64,
    pub end: f64,
}

pub const DEFAULT_DWELL_TRANSITION: f64 = 3.0;

fn default_dwell_transition() -> f64 {
    DEFAULT_DWELL_TRANSITION
}

/// Deterministic ground-truth trajectory description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    /// Seconds.
    pub duration: f64,
    /// Frames per second.
    pub rate: f64,
    #[serde(default)]
    pub pitch: AxisMotion,
    #[serde(default)]
    pub yaw: AxisMotion,
    #[serde(default)]
    pub roll: AxisMotion,
    /// Dwell-at-origin spans, `[start, end)` in seconds.
    #[serde(default)]
    pub dwell: Vec<DwellSegment>,
    /// Ramp length on either side of each dwell span, seconds.
    #[serde(default = "default_dwell_transition")]
    pub dwell_transition: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.duration <= 0.0 || !self.duration.is_finite() {
            return Err(Error::Config(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        if self.rate <= 0.0 || !self.rate.is_finite() {
            return Err(Error::Config(format!(
                "rate must be > 0, got {}",
                self.rate
            )));
        }
        for motion in [&self.pitch, &self.yaw, &self.roll] {
            for s in &motion.sinusoids {
                if !s.amplitude.is_finite() || !s.frequency.is_finite() || !s.phase.is_finite() {
                    return Err(Error::Config("non-finite sinusoid parameter".into()));
                }
            }
        }
        for d in &self.dwell {
            if !d.start.is_finite() || !d.end.is_finite() || d.start >= d.end {
                return Err(Error::Config(format!(
                    "bad dwell segment [{}, {})",
                    d.start, d.end
                )));
            }
        }
        if !self.dwell_transition.is_finite() || self.dwell_transition < 0.0 {
            return Err(Error::Config(format!(
                "dwell transition must be >= 0, got {}",
                self.dwell_transition
            )));
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.rate).round() as usize
    }

    /// Motion attenuation from dwell segments: exactly 0 inside a span,
    /// cosine-ramped over `dwell_transition` seconds on either side, 1
    /// elsewhere.
    fn dwell_weight(&self, t: f64) -> f64 {
        let mut w = 1.0_f64;
        let ramp = self.dwell_transition;
        for d in &self.dwell {
            if t >= d.start && t < d.end {
                return 0.0;
            }
            if ramp > 0.0 {
                if t >= d.start - ramp && t < d.start {
                    let u = (t - (d.start - ramp)) / ramp;
                    w = w.min(0.5 * (1.0 + (std::f64::consts::PI * u).cos()));
                } else if t >= d.end && t < d.end + ramp {
                    let u = (t - d.end) / ramp;
                    w = w.min(0.5 * (1.0 - (std::f64::consts::PI * u).cos()));
                }
            }
        }
        w
    }

    /// Ground-truth pose at time `t`: the sinusoid sums, attenuated to the
    /// origin across dwell segments.
    pub fn truth_at(&self, t: f64) -> EulerPose {
        let w = self.dwell_weight(t);
        if w == 0.0 {
            return EulerPose::ZERO;
        }
        EulerPose::new(
            w * self.pitch.eval(t),
            w * self.yaw.eval(t),
            w * self.roll.eval(t),
        )
    }
}

/// Generate the trajectory: uniform timestamps at `1/rate`, pose initially
/// equal to ground truth.
pub fn gen_trajectory(spec: &TrajectorySpec) -> Result<Vec<FrameRecord>> {
    spec.validate()?;
    let n = spec.frame_count();
    if n == 0 {
        return Err(Error::Config("trajectory has no frames".into()));
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / spec.rate;
            let truth = spec.truth_at(t);
            FrameRecord::with_truth(t, truth, truth)
        })
        .collect())
}

/// Angle-dependent corruption standing in for a pose estimator: per axis,
/// a Gaussian draw whose standard deviation follows a noise-model-shaped
/// curve of the true angle, plus a constant bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub pitch: NoiseModel,
    pub yaw: NoiseModel,
    pub roll: NoiseModel,
    /// Constant offset per axis, degrees.
    #[serde(default)]
    pub bias: [f64; 3],
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn model(&self, axis: Axis) -> &NoiseModel {
        match axis {
            Axis::Pitch => &self.pitch,
            Axis::Yaw => &self.yaw,
            Axis::Roll => &self.roll,
        }
    }

    /// Looser than the filter-side noise-model validation: a noise spec may
    /// describe exactly-zero noise.
    pub fn validate(&self) -> Result<()> {
        for axis in AXES {
            let m = self.model(axis);
            for (what, v) in [
                ("lambda", m.lambda),
                ("mu", m.mu),
                ("sigma", m.sigma),
                ("tau", m.tau),
                ("r_min", m.r_min),
                ("r_max", m.r_max),
            ] {
                if !v.is_finite() {
                    return Err(Error::NonFinite { what, value: v });
                }
            }
            if m.sigma <= 0.0 {
                return Err(Error::Config("noise curve width must be > 0".into()));
            }
            if m.r_min < 0.0 || m.r_max < m.r_min {
                return Err(Error::Config("bad noise std clamp".into()));
            }
        }
        for b in self.bias {
            if !b.is_finite() {
                return Err(Error::NonFinite {
                    what: "bias",
                    value: b,
                });
            }
        }
        Ok(())
    }

    /// Noise standard deviation for one axis at the given true angle.
    pub fn sigma(&self, axis: Axis, angle: f64) -> f64 {
        let m = self.model(axis);
        m.eval_raw(angle).clamp(m.r_min, m.r_max)
    }
}

/// Corrupt the pose field of a ground-truth stream. Draws are seeded and
/// reproducible; the stream itself is unchanged apart from the pose.
pub fn corrupt(frames: &[FrameRecord], noise: &NoiseSpec) -> Result<Vec<FrameRecord>> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let truth = frame.ground_truth.ok_or_else(|| {
                Error::Config("corrupt needs ground truth on every frame".into()).at_frame(i)
            })?;
            let mut pose = truth;
            for axis in AXES {
                let sigma = noise.sigma(axis, truth.axis(axis));
                let draw: f64 = StandardNormal.sample(&mut rng);
                let noisy = truth.axis(axis) + noise.bias[axis.index()] + sigma * draw;
                match axis {
                    Axis::Pitch => pose.pitch = noisy,
                    Axis::Yaw => pose.yaw = noisy,
                    Axis::Roll => pose.roll = noisy,
                }
            }
            Ok(FrameRecord::with_truth(frame.t, pose, truth))
        })
        .collect()
}

/// Per-axis root-mean-square difference between two aligned pose series.
pub fn rmse(estimates: &[EulerPose], truth: &[EulerPose]) -> Result<[f64; 3]> {
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truth.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::EmptyInput("rmse over empty streams"));
    }
    let mut acc = [0.0; 3];
    for (e, t) in estimates.iter().zip(truth) {
        for axis in AXES {
            let d = e.axis(axis) - t.axis(axis);
            acc[axis.index()] += d * d;
        }
    }
    let n = estimates.len() as f64;
    Ok(acc.map(|s| (s / n).sqrt()))
}

/// Per-axis mean absolute frame-to-frame change: the volatility proxy.
pub fn jitter(stream: &[EulerPose]) -> Result<[f64; 3]> {
    if stream.len() < 2 {
        return Err(Error::NotEnoughData(
            "jitter needs at least two frames".into(),
        ));
    }
    let mut acc = [0.0; 3];
    for pair in stream.windows(2) {
        for axis in AXES {
            acc[axis.index()] += (pair[1].axis(axis) - pair[0].axis(axis)).abs();
        }
    }
    let n = (stream.len() - 1) as f64;
    Ok(acc.map(|s| s / n))
}

/// Jitter restricted to adjacent frame pairs where both ends are selected
/// by the mask (e.g. frames whose true angle exceeds a threshold).
pub fn jitter_masked(stream: &[EulerPose], mask: &[bool]) -> Result<[f64; 3]> {
    if stream.len() != mask.len() {
        return Err(Error::LengthMismatch {
            left: stream.len(),
            right: mask.len(),
        });
    }
    let mut acc = [0.0; 3];
    let mut pairs = 0usize;
    for i in 1..stream.len() {
        if mask[i - 1] && mask[i] {
            pairs += 1;
            for axis in AXES {
                acc[axis.index()] += (stream[i].axis(axis) - stream[i - 1].axis(axis)).abs();
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NotEnoughData(
            "mask selects no adjacent frame pairs".into(),
        ));
    }
    Ok(acc.map(|s| s / pairs as f64))
}

/// Elapsed seconds from the start of `frames` until the stream permanently
/// enters the `epsilon`-ball (Euclidean 3-norm) around `target`; `None` when
/// it never settles.
pub fn settle_time(frames: &[FrameRecord], target: &EulerPose, epsilon: f64) -> Option<f64> {
    let mut start = None;
    for (i, f) in frames.iter().enumerate().rev() {
        if f.pose.distance(target) <= epsilon {
            start = Some(i);
        } else {
            break;
        }
    }
    start.map(|i| frames[i].t - frames[0].t)
}

/// The fixed benchmark trajectory used by the end-to-end acceptance runs:
/// yaw +-60 deg at 0.05 Hz, pitch +-20 deg at 0.08 Hz, roll +-15 deg at
/// 0.06 Hz, 60 s at 30 Hz, with a 10 s dwell at the origin mid-stream.
/// Treat as versioned: changing it invalidates recorded benchmark numbers.
pub fn benchmark_trajectory() -> TrajectorySpec {
    TrajectorySpec {
        duration: 60.0,
        rate: 30.0,
        pitch: AxisMotion::single(20.0, 0.08),
        yaw: AxisMotion::single(60.0, 0.05),
        roll: AxisMotion::single(15.0, 0.06),
        dwell: vec![DwellSegment {
            start: 25.0,
            end: 35.0,
        }],
        dwell_transition: DEFAULT_DWELL_TRANSITION,
        seed: 42,
    }
}

/// Dwell span of [`benchmark_trajectory`], seconds.
pub const BENCHMARK_DWELL: (f64, f64) = (25.0, 35.0);

/// Synthetic noise with the character of a strong estimator: accurate near
/// the resting pose, degrading toward large angles. Curve centers and widths
/// follow the corresponding fitted noise-curve rows.
pub fn fsa_net_like_noise(seed: u64) -> NoiseSpec {
    NoiseSpec {
        pitch: NoiseModel::from_extremes(-5.19, 132.41, 7.0, 9.0).with_bounds(0.05, 50.0),
        yaw: NoiseModel::from_extremes(-0.35, 30.87, 2.0, 5.0).with_bounds(0.05, 50.0),
        roll: NoiseModel::from_extremes(-0.562, 4440.0, 4.0, 6.0).with_bounds(0.05, 50.0),
        bias: [0.0; 3],
        seed,
    }
}

/// A weaker estimator: larger errors everywhere, same angle dependence
/// structure.
pub fn hopenet_like_noise(seed: u64) -> NoiseSpec {
    NoiseSpec {
        pitch: NoiseModel::from_extremes(-8.30, 101.37, 10.0, 12.0).with_bounds(0.05, 50.0),
        yaw: NoiseModel::from_extremes(-5.57, 48.28, 4.0, 8.0).with_bounds(0.05, 50.0),
        roll: NoiseModel::from_extremes(0.0476, 2219.0, 6.0, 8.0).with_bounds(0.05, 50.0),
        bias: [0.0; 3],
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn yaw_spec() -> TrajectorySpec {
        TrajectorySpec {
            duration: 10.0,
            rate: 30.0,
            pitch: AxisMotion::default(),
            yaw: AxisMotion::single(30.0, 0.1),
            roll: AxisMotion::default(),
            dwell: vec![],
            dwell_transition: DEFAULT_DWELL_TRANSITION,
            seed: 1,
        }
    }

    #[test]
    fn zero_amplitude_is_constant_origin() {
        let spec = TrajectorySpec {
            yaw: AxisMotion::default(),
            ..yaw_spec()
        };
        let frames = gen_trajectory(&spec).unwrap();
        assert!(frames.iter().all(|f| f.pose == EulerPose::ZERO));
    }

    #[test]
    fn sinusoid_matches_closed_form() {
        let frames = gen_trajectory(&yaw_spec()).unwrap();
        assert_eq!(frames.len(), 300);
        let mut max_yaw: f64 = 0.0;
        for (i, f) in frames.iter().enumerate() {
            let t = i as f64 / 30.0;
            assert_abs_diff_eq!(f.t, t, epsilon = 1e-12);
            let expected = 30.0 * (std::f64::consts::TAU * 0.1 * t).sin();
            assert_abs_diff_eq!(f.pose.yaw, expected, epsilon = 1e-9);
            max_yaw = max_yaw.max(f.pose.yaw.abs());
        }
        assert!(max_yaw <= 30.0 + 1e-9);
        assert!(max_yaw > 29.9);
    }

    #[test]
    fn dwell_holds_origin() {
        let mut spec = yaw_spec();
        spec.dwell = vec![DwellSegment {
            start: 2.0,
            end: 4.0,
        }];
        let frames = gen_trajectory(&spec).unwrap();
        for f in &frames {
            if f.t >= 2.0 && f.t < 4.0 {
                assert_eq!(f.pose, EulerPose::ZERO);
            }
        }
    }

    #[test]
    fn corruption_is_seed_deterministic() {
        let frames = gen_trajectory(&yaw_spec()).unwrap();
        let noise = fsa_net_like_noise(7);
        let a = corrupt(&frames, &noise).unwrap();
        let b = corrupt(&frames, &noise).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.pose.yaw.to_bits(), y.pose.yaw.to_bits());
        }
        let c = corrupt(&frames, &fsa_net_like_noise(8)).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.pose.yaw != y.pose.yaw));
    }

    #[test]
    fn zero_noise_spec_returns_truth() {
        let frames = gen_trajectory(&yaw_spec()).unwrap();
        let noise = NoiseSpec {
            pitch: NoiseModel::constant(0.0).with_bounds(0.0, 0.0),
            yaw: NoiseModel::constant(0.0).with_bounds(0.0, 0.0),
            roll: NoiseModel::constant(0.0).with_bounds(0.0, 0.0),
            bias: [0.0; 3],
            seed: 3,
        };
        let out = corrupt(&frames, &noise).unwrap();
        for (o, f) in out.iter().zip(&frames) {
            assert_eq!(o.pose, f.ground_truth.unwrap());
        }
    }

    #[test]
    fn bias_shifts_the_corruption_mean() {
        let frames = gen_trajectory(&yaw_spec()).unwrap();
        let noise = NoiseSpec {
            pitch: NoiseModel::constant(0.5).with_bounds(0.5, 0.5),
            yaw: NoiseModel::constant(0.5).with_bounds(0.5, 0.5),
            roll: NoiseModel::constant(0.5).with_bounds(0.5, 0.5),
            bias: [2.0, 0.0, -1.0],
            seed: 9,
        };
        let out = corrupt(&frames, &noise).unwrap();
        let n = out.len() as f64;
        let mean_pitch: f64 = out
            .iter()
            .map(|f| f.pose.pitch - f.ground_truth.unwrap().pitch)
            .sum::<f64>()
            / n;
        let mean_roll: f64 = out
            .iter()
            .map(|f| f.pose.roll - f.ground_truth.unwrap().roll)
            .sum::<f64>()
            / n;
        assert!((mean_pitch - 2.0).abs() < 0.2, "pitch bias {mean_pitch}");
        assert!((mean_roll + 1.0).abs() < 0.2, "roll bias {mean_roll}");
    }

    #[test]
    fn constant_noise_sample_std_in_chi_band() {
        // 10,000 draws at sigma = 2: sample std within 2 +- 0.06.
        let spec = TrajectorySpec {
            duration: 10_000.0 / 30.0,
            ..yaw_spec()
        };
        let frames = gen_trajectory(&spec).unwrap();
        let noise = NoiseSpec {
            pitch: NoiseModel::constant(2.0).with_bounds(2.0, 2.0),
            yaw: NoiseModel::constant(2.0).with_bounds(2.0, 2.0),
            roll: NoiseModel::constant(2.0).with_bounds(2.0, 2.0),
            bias: [0.0; 3],
            seed: 11,
        };
        let out = corrupt(&frames, &noise).unwrap();
        let n = out.len() as f64;
        let mean: f64 = out
            .iter()
            .map(|f| f.pose.pitch - f.ground_truth.unwrap().pitch)
            .sum::<f64>()
            / n;
        let var: f64 = out
            .iter()
            .map(|f| {
                let d = f.pose.pitch - f.ground_truth.unwrap().pitch - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        let std = var.sqrt();
        assert!((std - 2.0).abs() <= 0.06, "sample std {std}");
    }

    #[test]
    fn angle_dependent_noise_band_std() {
        // sigma(0) = 2, sigma(60) ~ 5: empirical std in the 55..65 band.
        let spec = TrajectorySpec {
            duration: 2000.0,
            rate: 30.0,
            yaw: AxisMotion::single(70.0, 0.05),
            pitch: AxisMotion::default(),
            roll: AxisMotion::default(),
            dwell: vec![],
            dwell_transition: DEFAULT_DWELL_TRANSITION,
            seed: 0,
        };
        let frames = gen_trajectory(&spec).unwrap();
        let noise = NoiseSpec {
            pitch: NoiseModel::constant(1.0).with_bounds(1.0, 1.0),
            yaw: NoiseModel::from_extremes(0.0, 34.0, 2.0, 5.9).with_bounds(0.1, 50.0),
            roll: NoiseModel::constant(1.0).with_bounds(1.0, 1.0),
            bias: [0.0; 3],
            seed: 5,
        };
        let sigma_at_60 = noise.sigma(Axis::Yaw, 60.0);
        let out = corrupt(&frames, &noise).unwrap();
        let band: Vec<f64> = out
            .iter()
            .filter(|f| {
                let y = f.ground_truth.unwrap().yaw.abs();
                (55.0..=65.0).contains(&y)
            })
            .map(|f| f.pose.yaw - f.ground_truth.unwrap().yaw)
            .collect();
        assert!(band.len() > 500);
        let n = band.len() as f64;
        let mean = band.iter().sum::<f64>() / n;
        let std = (band.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(
            (std - sigma_at_60).abs() / sigma_at_60 < 0.10,
            "band std {std} vs sigma(60) {sigma_at_60}"
        );
    }

    #[test]
    fn rmse_cases() {
        let a = vec![EulerPose::ZERO; 4];
        assert_eq!(rmse(&a, &a).unwrap(), [0.0; 3]);
        let b: Vec<EulerPose> = (0..4).map(|_| EulerPose::new(3.0, 0.0, 0.0)).collect();
        assert_abs_diff_eq!(rmse(&b, &a).unwrap()[0], 3.0, epsilon = 1e-12);
        let alt: Vec<EulerPose> = (0..4)
            .map(|i| EulerPose::new(if i % 2 == 0 { 0.0 } else { 4.0 }, 0.0, 0.0))
            .collect();
        assert_abs_diff_eq!(rmse(&alt, &a).unwrap()[0], 8.0_f64.sqrt(), epsilon = 1e-12);
        assert!(rmse(&a[..2], &a).is_err());
    }

    #[test]
    fn jitter_cases() {
        let constant = vec![EulerPose::new(5.0, 5.0, 5.0); 10];
        assert_eq!(jitter(&constant).unwrap(), [0.0; 3]);
        let alternating: Vec<EulerPose> = (0..10)
            .map(|i| EulerPose::new((i % 2) as f64, 0.0, 0.0))
            .collect();
        assert_abs_diff_eq!(jitter(&alternating).unwrap()[0], 1.0, epsilon = 1e-12);
        let ramp: Vec<EulerPose> = (0..10)
            .map(|i| EulerPose::new(i as f64, 0.0, 0.0))
            .collect();
        assert_abs_diff_eq!(jitter(&ramp).unwrap()[0], 1.0, epsilon = 1e-12);
        assert!(jitter(&constant[..1]).is_err());
    }

    #[test]
    fn settle_cases() {
        let target = EulerPose::ZERO;
        let at_target: Vec<FrameRecord> = (0..10)
            .map(|i| FrameRecord::new(i as f64 * 0.1, EulerPose::ZERO))
            .collect();
        assert_eq!(settle_time(&at_target, &target, 0.5), Some(0.0));

        let never: Vec<FrameRecord> = (0..10)
            .map(|i| FrameRecord::new(i as f64 * 0.1, EulerPose::new(9.0, 0.0, 0.0)))
            .collect();
        assert_eq!(settle_time(&never, &target, 0.5), None);

        // Exponential decay toward the target: crossing time matches the
        // analytic envelope within one frame period.
        let rate = 30.0;
        let amp = 20.0;
        let decay = 0.8;
        let eps = 1.0;
        let frames: Vec<FrameRecord> = (0..600)
            .map(|i| {
                let t = i as f64 / rate;
                FrameRecord::new(t, EulerPose::new(amp * (-decay * t).exp(), 0.0, 0.0))
            })
            .collect();
        let analytic = (amp / eps).ln() / decay;
        let measured = settle_time(&frames, &target, eps).unwrap();
        assert!(
            (measured - analytic).abs() <= 1.0 / rate + 1e-9,
            "measured {measured}, analytic {analytic}"
        );
    }

    #[test]
    fn masked_jitter_counts_only_selected_pairs() {
        let stream: Vec<EulerPose> = (0..6).map(|i| EulerPose::new(i as f64, 0.0, 0.0)).collect();
        let mask = [true, true, false, true, true, true];
        // Pairs: (0,1), (3,4), (4,5) -> all steps of 1.
        assert_abs_diff_eq!(
            jitter_masked(&stream, &mask).unwrap()[0],
            1.0,
            epsilon = 1e-12
        );
        assert!(jitter_masked(&stream, &[false; 6]).is_err());
    }

    #[test]
    fn benchmark_is_stable() {
        let spec = benchmark_trajectory();
        let frames = gen_trajectory(&spec).unwrap();
        assert_eq!(frames.len(), 1800);
        // Mid-stream dwell holds the origin.
        let dwell_frames: Vec<_> = frames
            .iter()
            .filter(|f| f.t >= BENCHMARK_DWELL.0 && f.t < BENCHMARK_DWELL.1)
            .collect();
        assert_eq!(dwell_frames.len(), 300);
        assert!(dwell_frames.iter().all(|f| f.pose == EulerPose::ZERO));
    }
}
