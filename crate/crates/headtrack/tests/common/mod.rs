//! Shared helpers and independent oracles for the integration suites.
//!
//! Each test target compiles this module separately, so not every helper is
//! used from every target.
#![allow(dead_code)]

use headtrack::noise::{EstimatorProfile, NoiseModel};
use headtrack::pose::{EulerPose, FrameRecord};
use headtrack::synth::{benchmark_trajectory, corrupt, fsa_net_like_noise, gen_trajectory};

/// Independent 2-state constant-velocity Kalman filter written with plain
/// scalar arithmetic. Used as the decoupling oracle: with diagonal Q and R
/// the 6-state filter must match three of these run side by side.
pub struct ScalarCv {
    pub x: [f64; 2],
    pub p: [[f64; 2]; 2],
}

impl ScalarCv {
    pub fn new(pose: f64, p0_pose: f64, p0_vel: f64) -> Self {
        Self {
            x: [pose, 0.0],
            p: [[p0_pose, 0.0], [0.0, p0_vel]],
        }
    }

    pub fn step(&mut self, z: f64, dt: f64, q_pose: f64, q_vel: f64, r: f64) {
        let x0 = self.x[0] + dt * self.x[1];
        let x1 = self.x[1];
        let [[a, b], [c, d]] = self.p;
        let pa = a + dt * c + dt * (b + dt * d) + q_pose;
        let pb = b + dt * d;
        let pc = c + dt * d;
        let pd = d + q_vel;
        let s = pa + r;
        let k0 = pa / s;
        let k1 = pc / s;
        let innovation = z - x0;
        self.x = [x0 + k0 * innovation, x1 + k1 * innovation];
        self.p = [
            [(1.0 - k0) * pa, (1.0 - k0) * pb],
            [pc - k1 * pa, pd - k1 * pb],
        ];
    }
}

/// The benchmark trajectory corrupted with the standard strong-estimator
/// noise at its versioned seed.
pub fn corrupted_benchmark() -> Vec<FrameRecord> {
    let spec = benchmark_trajectory();
    let frames = gen_trajectory(&spec).expect("benchmark generates");
    corrupt(&frames, &fsa_net_like_noise(spec.seed)).expect("benchmark corrupts")
}

/// A constant-noise profile matching `profile` evaluated at each axis's
/// curve center: the "standard filter" arm of adaptive-vs-constant
/// comparisons.
pub fn constant_profile_at_center(profile: &EstimatorProfile) -> EstimatorProfile {
    let at_center = |m: &NoiseModel| {
        let value = m.eval(m.mu).expect("finite center");
        NoiseModel::constant(value).with_bounds(m.r_min, m.r_max)
    };
    EstimatorProfile::new(
        format!("{}-constant", profile.name),
        at_center(&profile.pitch),
        at_center(&profile.yaw),
        at_center(&profile.roll),
    )
}

/// Root-mean-square Euclidean distance of each pose to a target.
pub fn rms_distance(poses: &[EulerPose], target: &EulerPose) -> f64 {
    let n = poses.len() as f64;
    (poses
        .iter()
        .map(|p| {
            let d = p.distance(target);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Per-axis RMS of the difference between two aligned pose series over the
/// masked frames.
pub fn masked_rms_difference(a: &[EulerPose], b: &[EulerPose], mask: &[bool]) -> [f64; 3] {
    let mut acc = [0.0; 3];
    let mut n = 0usize;
    for i in 0..a.len() {
        if mask[i] {
            n += 1;
            for axis in headtrack::pose::AXES {
                let d = a[i].axis(axis) - b[i].axis(axis);
                acc[axis.index()] += d * d;
            }
        }
    }
    assert!(n > 0, "mask selects no frames");
    acc.map(|s| (s / n as f64).sqrt())
}
