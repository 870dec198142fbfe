//! Error-curve characterization: from (true, predicted) pose pairs to the
//! per-axis noise curves the filter consumes.
//!
//! The workflow mirrors how estimator profiles are produced from a labeled
//! benchmark: compute per-axis absolute errors, bin them by the true angle,
//! and fit a Gaussian-with-offset curve to the binned means (optionally to
//! raw samples, or to a two-axis error surface). Fits are count-weighted and
//! multi-start; near-flat data converges to a constant curve and is flagged
//! degenerate rather than rejected.

mod lm;

use crate::noise::{gaussian_density, EstimatorProfile, NoiseModel, ProfileProvenance};
use crate::pose::{Axis, EulerPose, AXES};
use crate::{Error, Result};
use lm::{fit_dip, seed_cost, DipBasis, DipFit, Point};
use serde::Serialize;

/// Iteration cap per start.
pub const MAX_FIT_ITERATIONS: usize = 500;
/// Relative parameter-change threshold for convergence.
pub const FIT_REL_TOL: f64 = 1e-8;
/// Number of starting points explored per fit.
pub const FIT_STARTS: usize = 5;
/// A fit is degenerate when the dip depth at its center is below this
/// fraction of the offset.
const DEGENERATE_DEPTH_RATIO: f64 = 1e-3;

/// Default binning used by the fitting CLI: 10-degree bins over [-90, 90].
pub const DEFAULT_BIN_WIDTH: f64 = 10.0;
pub const DEFAULT_BIN_RANGE: (f64, f64) = (-90.0, 90.0);

/// One labeled prediction with per-axis absolute errors in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub true_pose: EulerPose,
    pub predicted_pose: EulerPose,
    /// Wrap-aware `|predicted - true|` per axis, `(pitch, yaw, roll)`.
    pub abs_error: [f64; 3],
}

/// Per-axis absolute angular errors for a sequence of (true, predicted)
/// pairs. Angles are normalized first and differences are taken along the
/// minimal arc, so e.g. 179 vs -179 is a 2-degree error.
pub fn compute_errors(pairs: &[(EulerPose, EulerPose)]) -> Result<Vec<ErrorSample>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no (true, predicted) pairs"));
    }
    pairs
        .iter()
        .enumerate()
        .map(|(i, (truth, predicted))| {
            (|| {
                let truth = truth.normalized()?;
                let predicted = predicted.normalized()?;
                let mut abs_error = [0.0; 3];
                for axis in AXES {
                    let d = crate::pose::normalize_angle(predicted.axis(axis) - truth.axis(axis))?;
                    abs_error[axis.index()] = d.abs();
                }
                Ok(ErrorSample {
                    true_pose: truth,
                    predicted_pose: predicted,
                    abs_error,
                })
            })()
            .map_err(|e: Error| e.at_frame(i))
        })
        .collect()
}

/// One angle interval's error statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    /// Interval midpoint, degrees.
    pub center: f64,
    pub count: usize,
    /// Mean absolute error of the samples in this bin; absent when empty.
    pub mean_error: Option<f64>,
}

/// Uniform-width binning of one axis's errors by true angle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedErrors {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    pub bins: Vec<Bin>,
    /// Samples whose true angle fell outside `[lo, hi)`.
    pub dropped: usize,
}

impl BinnedErrors {
    /// Occupied bins as `(center, mean_error, count)`.
    pub fn occupied(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.bins
            .iter()
            .filter_map(|b| b.mean_error.map(|m| (b.center, m, b.count)))
    }
}

/// Assign each sample to the interval containing its *true* angle on `axis`
/// and average the absolute errors per interval.
pub fn bin_errors(
    samples: &[ErrorSample],
    axis: Axis,
    bin_width: f64,
    range: (f64, f64),
) -> Result<BinnedErrors> {
    let (lo, hi) = range;
    if bin_width <= 0.0 || !bin_width.is_finite() {
        return Err(Error::Config(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    if lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("bad bin range [{lo}, {hi})")));
    }
    let n_bins = ((hi - lo) / bin_width - 1e-9).ceil().max(1.0) as usize;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    let mut dropped = 0usize;
    for s in samples {
        let x = s.true_pose.axis(axis);
        if x < lo || x >= hi {
            dropped += 1;
            continue;
        }
        let idx = (((x - lo) / bin_width) as usize).min(n_bins - 1);
        sums[idx] += s.abs_error[axis.index()];
        counts[idx] += 1;
    }
    let bins = (0..n_bins)
        .map(|i| Bin {
            center: lo + (i as f64 + 0.5) * bin_width,
            count: counts[i],
            mean_error: if counts[i] > 0 {
                Some(sums[i] / counts[i] as f64)
            } else {
                None
            },
        })
        .collect();
    Ok(BinnedErrors {
        axis,
        lo,
        hi,
        bin_width,
        bins,
        dropped,
    })
}

/// Fitted Gaussian-with-offset parameters for one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    /// Count-weighted RMS of the residuals, degrees.
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The dip is numerically indistinguishable from a constant curve;
    /// `(lambda, tau)` are then individually unidentifiable.
    pub degenerate: bool,
}

impl FitResult {
    /// Package the fitted curve as a filter-ready noise model.
    pub fn noise_model(&self, r_min: f64, r_max: f64) -> NoiseModel {
        NoiseModel::new(self.lambda, self.mu, self.sigma, self.tau).with_bounds(r_min, r_max)
    }

    /// Model value at `x`, pre-clamp.
    pub fn eval(&self, x: f64) -> f64 {
        self.tau - self.lambda * gaussian_density(x, self.mu, self.sigma)
    }
}

struct Gauss1d {
    span: f64,
}

impl DipBasis<1, 2> for Gauss1d {
    fn eval(&self, x: &[f64; 1], q: &[f64; 2]) -> f64 {
        gaussian_density(x[0], q[0], q[1])
    }
    fn project(&self, q: &mut [f64; 2]) {
        q[1] = q[1].abs().max(1e-6);
    }
    fn scales(&self) -> [f64; 2] {
        [self.span, self.span]
    }
}

fn span_of(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let min = xs.clone().fold(f64::INFINITY, f64::min);
    let max = xs.fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Starting (mu, sigma) candidates: the documented recipe first, then the
/// best profiled-cost seeds from a deterministic width grid. The grid is
/// what lets the fit escape the shallow-dip regime where tau and lambda
/// trade off along a valley.
fn starts_1d(points: &[Point<1>], primary: Option<[f64; 2]>) -> Vec<[f64; 2]> {
    let basis_span = {
        let (min, max) = span_of(points.iter().map(|p| p.x[0]));
        (max - min).max(1e-6)
    };
    let half_range = basis_span / 2.0;
    // Dip location: x of the minimum target, refined by a parabola through
    // its neighbors when possible.
    let mut min_idx = 0;
    for (i, p) in points.iter().enumerate() {
        if p.z < points[min_idx].z {
            min_idx = i;
        }
    }
    let mu0 = points[min_idx].x[0];
    let mut mu_candidates = vec![mu0];
    if min_idx > 0 && min_idx + 1 < points.len() {
        let (xl, yl) = (points[min_idx - 1].x[0], points[min_idx - 1].z);
        let (xc, yc) = (points[min_idx].x[0], points[min_idx].z);
        let (xr, yr) = (points[min_idx + 1].x[0], points[min_idx + 1].z);
        let denom = yl - 2.0 * yc + yr;
        if denom.abs() > 1e-12 && (xr - xl).abs() > 0.0 {
            let refined = xc + 0.25 * (xr - xl) * (yl - yr) / denom;
            if refined.is_finite() && refined >= xl && refined <= xr {
                mu_candidates.push(refined);
            }
        }
    }

    let basis = Gauss1d { span: basis_span };
    let mut starts: Vec<[f64; 2]> = Vec::with_capacity(FIT_STARTS);
    starts.push(primary.unwrap_or([mu0, half_range]));

    let mut ranked: Vec<([f64; 2], f64)> = Vec::new();
    let sigma_lo = (basis_span / 24.0).max(1e-3);
    let sigma_hi = half_range * 8.0;
    let grid_len = 16;
    for i in 0..grid_len {
        let t = i as f64 / (grid_len - 1) as f64;
        let sigma = sigma_lo * (sigma_hi / sigma_lo).powf(t);
        for &mu in &mu_candidates {
            let q = [mu, sigma];
            ranked.push((q, seed_cost(&basis, points, &q)));
        }
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (q, _) in ranked {
        if starts.len() >= FIT_STARTS {
            break;
        }
        if starts
            .iter()
            .all(|s| (s[0] - q[0]).abs() > 1e-9 || (s[1] - q[1]).abs() > 1e-9)
        {
            starts.push(q);
        }
    }
    starts
}

fn run_gauss1d(points: &[Point<1>], initial: Option<[f64; 4]>) -> FitResult {
    let (min_x, max_x) = span_of(points.iter().map(|p| p.x[0]));
    let basis = Gauss1d {
        span: (max_x - min_x).max(1e-6),
    };
    let primary = initial.map(|p| [p[1], p[2]]);
    let mut best: Option<DipFit<2>> = None;
    for start in starts_1d(points, primary) {
        let fit = fit_dip(&basis, points, start, MAX_FIT_ITERATIONS, FIT_REL_TOL);
        let better = match &best {
            None => true,
            Some(b) => fit.cost < b.cost,
        };
        if better {
            best = Some(fit);
        }
    }
    let fit = best.expect("at least one start");
    let total_weight: f64 = points.iter().map(|p| p.w).sum();
    let sigma = fit.q[1].abs().max(1e-6);
    let peak = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    FitResult {
        lambda: fit.lambda,
        mu: fit.q[0],
        sigma,
        tau: fit.tau,
        residual_rms: (fit.cost / total_weight).sqrt(),
        iterations: fit.iterations,
        converged: fit.converged,
        degenerate: fit.lambda.abs() * peak < DEGENERATE_DEPTH_RATIO * fit.tau.abs(),
    }
}

/// Fit the Gaussian-with-offset curve to binned means, weighting each bin by
/// its sample count. Needs at least four occupied bins. `initial` overrides
/// the starting guess as `[lambda, mu, sigma, tau]`.
pub fn fit_gauss1d(bins: &BinnedErrors, initial: Option<[f64; 4]>) -> Result<FitResult> {
    let points: Vec<Point<1>> = bins
        .occupied()
        .map(|(center, mean, count)| Point {
            x: [center],
            z: mean,
            w: count as f64,
        })
        .collect();
    if points.len() < 4 {
        return Err(Error::NotEnoughData(format!(
            "{} occupied bins; the curve has 4 free parameters",
            points.len()
        )));
    }
    Ok(run_gauss1d(&points, initial))
}

/// Raw-sample variant of [`fit_gauss1d`]: fit `(angle, error)` pairs
/// directly, each with unit weight.
pub fn fit_gauss1d_samples(samples: &[(f64, f64)], initial: Option<[f64; 4]>) -> Result<FitResult> {
    if samples.len() < 4 {
        return Err(Error::NotEnoughData(format!(
            "{} samples; the curve has 4 free parameters",
            samples.len()
        )));
    }
    let points: Vec<Point<1>> = samples
        .iter()
        .map(|&(x, z)| Point { x: [x], z, w: 1.0 })
        .collect();
    Ok(run_gauss1d(&points, initial))
}

/// Fitted two-axis error surface `E(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceFitResult {
    /// Signed amplitude: positive for a dip, negative for a peak.
    pub lambda: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub tau: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
}

impl SurfaceFitResult {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.tau
            - self.lambda
                * gaussian_density(x, self.mu_x, self.sigma_x)
                * gaussian_density(y, self.mu_y, self.sigma_y)
    }
}

struct Gauss2d {
    span_x: f64,
    span_y: f64,
}

impl DipBasis<2, 4> for Gauss2d {
    fn eval(&self, x: &[f64; 2], q: &[f64; 4]) -> f64 {
        gaussian_density(x[0], q[0], q[2]) * gaussian_density(x[1], q[1], q[3])
    }
    fn project(&self, q: &mut [f64; 4]) {
        q[2] = q[2].abs().max(1e-6);
        q[3] = q[3].abs().max(1e-6);
    }
    fn scales(&self) -> [f64; 4] {
        [self.span_x, self.span_y, self.span_x, self.span_y]
    }
}

/// Fit the two-variable Gaussian-with-offset surface to `(x, y, error)`
/// samples. The amplitude is signed: data with an error *peak* instead of a
/// dip fits with negative `lambda`. Needs at least 7 samples.
pub fn fit_gauss2d(
    samples: &[(f64, f64, f64)],
    initial: Option<[f64; 6]>,
) -> Result<SurfaceFitResult> {
    if samples.len() < 7 {
        return Err(Error::NotEnoughData(format!(
            "{} samples; the surface has 6 free parameters",
            samples.len()
        )));
    }
    let points: Vec<Point<2>> = samples
        .iter()
        .map(|&(x, y, z)| Point {
            x: [x, y],
            z,
            w: 1.0,
        })
        .collect();
    let (min_x, max_x) = span_of(points.iter().map(|p| p.x[0]));
    let (min_y, max_y) = span_of(points.iter().map(|p| p.x[1]));
    let basis = Gauss2d {
        span_x: (max_x - min_x).max(1e-6),
        span_y: (max_y - min_y).max(1e-6),
    };
    let mean_z = points.iter().map(|p| p.z).sum::<f64>() / points.len() as f64;
    // The strongest deviation from the mean marks the bump center.
    let extremum = points
        .iter()
        .max_by(|a, b| (a.z - mean_z).abs().total_cmp(&(b.z - mean_z).abs()))
        .expect("non-empty");
    let half_x = basis.span_x / 2.0;
    let half_y = basis.span_y / 2.0;

    let mut starts: Vec<[f64; 4]> = Vec::with_capacity(FIT_STARTS);
    starts.push(match initial {
        Some(p) => [p[1], p[2], p[3], p[4]],
        None => [extremum.x[0], extremum.x[1], half_x, half_y],
    });
    let mut ranked: Vec<([f64; 4], f64)> = Vec::new();
    for &sx in &[0.25, 0.5, 1.0, 2.0] {
        for &sy in &[0.25, 0.5, 1.0, 2.0] {
            let q = [extremum.x[0], extremum.x[1], half_x * sx, half_y * sy];
            ranked.push((q, seed_cost(&basis, &points, &q)));
        }
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (q, _) in ranked {
        if starts.len() >= FIT_STARTS {
            break;
        }
        if starts
            .iter()
            .all(|s| s.iter().zip(&q).any(|(a, b)| (a - b).abs() > 1e-9))
        {
            starts.push(q);
        }
    }

    let mut best: Option<DipFit<4>> = None;
    for start in starts {
        let fit = fit_dip(&basis, &points, start, MAX_FIT_ITERATIONS, FIT_REL_TOL);
        let better = match &best {
            None => true,
            Some(b) => fit.cost < b.cost,
        };
        if better {
            best = Some(fit);
        }
    }
    let fit = best.expect("at least one start");
    let total_weight: f64 = points.iter().map(|p| p.w).sum();
    let sigma_x = fit.q[2].abs().max(1e-6);
    let sigma_y = fit.q[3].abs().max(1e-6);
    let peak = 1.0 / (2.0 * std::f64::consts::PI * sigma_x * sigma_y);
    Ok(SurfaceFitResult {
        lambda: fit.lambda,
        mu_x: fit.q[0],
        mu_y: fit.q[1],
        sigma_x,
        sigma_y,
        tau: fit.tau,
        residual_rms: (fit.cost / total_weight).sqrt(),
        iterations: fit.iterations,
        converged: fit.converged,
        degenerate: fit.lambda.abs() * peak < DEGENERATE_DEPTH_RATIO * fit.tau.abs(),
    })
}

/// Per-axis section of a fit report.
#[derive(Debug, Clone, Serialize)]
pub struct AxisFitReport {
    pub axis: Axis,
    pub fit: FitResult,
    pub sample_count: usize,
    pub dropped: usize,
    pub bins: Vec<Bin>,
}

/// Machine-readable record of a fitting run: parameters, residuals, and the
/// bin table behind them.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub profile_name: String,
    pub axes: Vec<AxisFitReport>,
}

pub const FIT_REPORT_SCHEMA_VERSION: u32 = 1;

impl FitReport {
    pub fn new(profile_name: impl Into<String>, axes: Vec<AxisFitReport>) -> Self {
        Self {
            schema_version: FIT_REPORT_SCHEMA_VERSION,
            profile_name: profile_name.into(),
            axes,
        }
    }
}

/// Assemble an estimator profile from three per-axis fits. Each axis must
/// appear exactly once, and each fit must have either converged or been
/// flagged degenerate.
pub fn export_profile(
    name: &str,
    fits: &[(Axis, FitResult)],
    r_min: f64,
    r_max: f64,
    sample_count: usize,
) -> Result<EstimatorProfile> {
    let mut by_axis: [Option<&FitResult>; 3] = [None; 3];
    for (axis, fit) in fits {
        let slot = &mut by_axis[axis.index()];
        if slot.is_some() {
            return Err(Error::Config(format!("duplicate {axis} axis fit")));
        }
        *slot = Some(fit);
    }
    let mut models = [NoiseModel::constant(0.0); 3];
    let mut residuals = [0.0; 3];
    for axis in AXES {
        let fit = by_axis[axis.index()].ok_or(Error::MissingAxis { axis })?;
        if !fit.converged && !fit.degenerate {
            return Err(Error::Config(format!(
                "{axis} axis fit neither converged nor degenerate"
            )));
        }
        models[axis.index()] = fit.noise_model(r_min, r_max);
        residuals[axis.index()] = fit.residual_rms;
    }
    let mut profile = EstimatorProfile::new(name, models[0], models[1], models[2]);
    profile.provenance = Some(ProfileProvenance {
        sample_count,
        residual_rms: residuals,
    });
    profile.validate()?;
    Ok(profile)
}
