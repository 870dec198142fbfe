//! Filter the built-in benchmark stream and print what smoothing bought.
//!
//! Run with: cargo run --example smooth_benchmark

use headtrack::config::RunConfig;
use headtrack::pipeline::{compute_metrics, filter_frames};
use headtrack::pose::AXES;
use headtrack::synth::{
    benchmark_trajectory, corrupt, fsa_net_like_noise, gen_trajectory, jitter, rmse,
};

fn main() -> Result<(), headtrack::Error> {
    // The versioned benchmark: three sinusoid axes with a mid-stream dwell,
    // corrupted like a strong pose estimator.
    let spec = benchmark_trajectory();
    let clean = gen_trajectory(&spec)?;
    let raw = corrupt(&clean, &fsa_net_like_noise(spec.seed))?;

    // Default config: fsa-net noise profile, loop closure off.
    let run = filter_frames(&RunConfig::default(), &raw)?;
    let metrics = compute_metrics(&run, 0, 3.0);

    let truth: Vec<_> = raw.iter().filter_map(|f| f.ground_truth).collect();
    let raw_poses: Vec<_> = raw.iter().map(|f| f.pose).collect();
    let raw_rmse = rmse(&raw_poses, &truth)?;
    let raw_jitter = jitter(&raw_poses)?;
    let filtered_rmse = metrics.rmse.expect("benchmark carries ground truth");
    let filtered_jitter = metrics.jitter.expect("more than one frame");

    println!("{} frames at {} Hz", metrics.frames, spec.rate);
    println!(
        "{:<8} {:>12} {:>12} {:>12} {:>12}",
        "axis", "raw rmse", "filt rmse", "raw jitter", "filt jitter"
    );
    for axis in AXES {
        let i = axis.index();
        let (fr, fj) = match axis {
            headtrack::pose::Axis::Pitch => (filtered_rmse.pitch, filtered_jitter.pitch),
            headtrack::pose::Axis::Yaw => (filtered_rmse.yaw, filtered_jitter.yaw),
            headtrack::pose::Axis::Roll => (filtered_rmse.roll, filtered_jitter.roll),
        };
        println!(
            "{:<8} {:>12.3} {:>12.3} {:>12.3} {:>12.3}",
            axis, raw_rmse[i], fr, raw_jitter[i], fj
        );
    }
    println!("mean per-frame latency: {:.4} ms", metrics.mean_latency_ms);
    Ok(())
}
