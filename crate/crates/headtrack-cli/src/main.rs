//! `headtrack`: filter, synthesize, fit, evaluate, and serve head-pose
//! streams.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors (unreadable
//! files, malformed streams, failing sessions).

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use headtrack::config::{RunConfig, CONFIG_ENV_VAR};
use headtrack::fit::{
    bin_errors, compute_errors, export_profile, fit_gauss1d, AxisFitReport, FitReport, FitResult,
    DEFAULT_BIN_RANGE, DEFAULT_BIN_WIDTH,
};
use headtrack::noise::{DEFAULT_R_MAX, DEFAULT_R_MIN};
use headtrack::pipeline::run_filter_pipeline;
use headtrack::pose::{Axis, FrameRecord, AXES};
use headtrack::server::FrameServer;
use headtrack::stream::{read_error_pairs, read_stream, write_stream, StreamFormat};
use headtrack::synth::{
    benchmark_trajectory, corrupt, fsa_net_like_noise, gen_trajectory, hopenet_like_noise,
    NoiseSpec, TrajectorySpec,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "headtrack",
    version,
    about = "Adaptive Kalman filtering for head-pose streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trajectory stream, optionally corrupted by an
    /// estimator-noise model.
    Simulate(SimulateArgs),
    /// Fit per-axis noise curves from a labeled error CSV and export an
    /// estimator profile.
    Fit(FitArgs),
    /// Filter a recorded stream and report metrics.
    Filter(FilterArgs),
    /// Compare two streams side by side.
    Eval(EvalArgs),
    /// Serve live filter sessions over TCP (one session per connection).
    Serve(ServeArgs),
}

#[derive(Args)]
struct ConfigFlag {
    /// Run-configuration TOML; falls back to $HPT_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl ConfigFlag {
    fn load(&self) -> Result<RunConfig> {
        let path = match &self.config {
            Some(path) => Some(path.clone()),
            None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
        };
        match path {
            Some(path) => {
                RunConfig::load(&path).with_context(|| format!("loading config {}", path.display()))
            }
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// Use the fixed benchmark trajectory (the default when --spec is not
    /// given).
    #[arg(long, conflicts_with = "spec")]
    benchmark: bool,
    /// Trajectory description TOML.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Corruption noise: "fsa-net-like", "hopenet-like", "none", or a
    /// noise-spec TOML path.
    #[arg(long, default_value = "none")]
    noise: String,
    /// Override the random seed of both trajectory and noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Output stream path.
    #[arg(long = "out")]
    out: PathBuf,
    /// Stream encoding (default jsonl).
    #[arg(long)]
    format: Option<StreamFormat>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// Labeled error CSV
    /// (true_pitch,...,pred_roll headers, degrees).
    #[arg(long = "in")]
    input: PathBuf,
    /// Restrict the Gaussian fit to these axes; unselected axes are
    /// exported as constant curves at their mean error.
    #[arg(long, value_enum)]
    axis: Vec<AxisArg>,
    /// Estimator-profile TOML to write.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Fit-report JSON to write.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Profile name recorded in the output.
    #[arg(long, default_value = "fitted")]
    name: String,
    /// Bin width in degrees.
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    /// Binning range in degrees: low high.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [DEFAULT_BIN_RANGE.0, DEFAULT_BIN_RANGE.1])]
    range: Vec<f64>,
    /// Evaluation clamp floor, degrees^2.
    #[arg(long, default_value_t = DEFAULT_R_MIN)]
    r_min: f64,
    /// Evaluation clamp ceiling, degrees^2.
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    r_max: f64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AxisArg {
    Pitch,
    Yaw,
    Roll,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::Pitch => Axis::Pitch,
            AxisArg::Yaw => Axis::Yaw,
            AxisArg::Roll => Axis::Roll,
        }
    }
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// Input stream; overrides io.input.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Filtered output stream; overrides io.output.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Metrics JSON path; overrides io.metrics.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Stream encoding; overrides io.format.
    #[arg(long)]
    format: Option<StreamFormat>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// First stream (e.g. raw observations).
    #[arg(long)]
    a: PathBuf,
    /// Second stream (e.g. filtered output).
    #[arg(long)]
    b: PathBuf,
    /// Stream encoding of both inputs.
    #[arg(long)]
    format: Option<StreamFormat>,
    /// Emit the comparison as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    config: ConfigFlag,
    /// Listen address; overrides io.listen.
    #[arg(long)]
    listen: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Fit(args) => fit(args),
        Command::Filter(args) => filter(args),
        Command::Eval(args) => eval(args),
        Command::Serve(args) => serve(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = args.config.load()?;
    let mut spec: TrajectorySpec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading trajectory spec {}", path.display()))?;
            toml::from_str(&text)
                .with_context(|| format!("parsing trajectory spec {}", path.display()))?
        }
        None => benchmark_trajectory(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let mut frames = gen_trajectory(&spec)?;
    let noise = resolve_noise(&args.noise, spec.seed)?;
    if let Some(noise) = noise {
        frames = corrupt(&frames, &noise)?;
    }
    let format = args.format.unwrap_or(config.io.format);
    write_stream(&args.out, &frames, format)?;
    eprintln!("wrote {} frames to {}", frames.len(), args.out.display());
    Ok(())
}

fn resolve_noise(name: &str, seed: u64) -> Result<Option<NoiseSpec>> {
    match name {
        "none" => Ok(None),
        "fsa-net-like" => Ok(Some(fsa_net_like_noise(seed))),
        "hopenet-like" => Ok(Some(hopenet_like_noise(seed))),
        path => {
            let text = std::fs::read_to_string(path).with_context(|| {
                format!("noise {name:?} is neither built-in nor a readable file")
            })?;
            let mut spec: NoiseSpec =
                toml::from_str(&text).with_context(|| format!("parsing noise spec {path}"))?;
            spec.seed = seed;
            spec.validate()?;
            Ok(Some(spec))
        }
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let pairs = read_error_pairs(&args.input)?;
    let samples = compute_errors(&pairs)?;
    let range = (args.range[0], args.range[1]);
    let selected: Vec<Axis> = if args.axis.is_empty() {
        AXES.to_vec()
    } else {
        let mut axes: Vec<Axis> = args.axis.iter().map(|&a| a.into()).collect();
        axes.dedup_by_key(|a| a.index());
        axes
    };

    let mut reports = Vec::new();
    let mut fits: Vec<(Axis, FitResult)> = Vec::new();
    for axis in AXES {
        let binned = bin_errors(&samples, axis, args.bin_width, range)?;
        let result = if selected.contains(&axis) {
            fit_gauss1d(&binned, None).with_context(|| format!("fitting {axis} axis"))?
        } else {
            constant_fit(&samples, axis)
        };
        println!(
            "{axis}: lambda={:.6} mu={:.4} sigma={:.4} tau={:.6} rms={:.4} converged={} degenerate={}",
            result.lambda,
            result.mu,
            result.sigma,
            result.tau,
            result.residual_rms,
            result.converged,
            result.degenerate
        );
        reports.push(AxisFitReport {
            axis,
            fit: result,
            sample_count: samples.len() - binned.dropped,
            dropped: binned.dropped,
            bins: binned.bins,
        });
        fits.push((axis, result));
    }

    if let Some(path) = &args.report {
        let report = FitReport::new(args.name.clone(), reports);
        let json = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, json)
            .with_context(|| format!("writing fit report {}", path.display()))?;
    }
    if let Some(path) = &args.out {
        let profile = export_profile(&args.name, &fits, args.r_min, args.r_max, samples.len())?;
        profile.save(path)?;
        eprintln!("wrote profile {}", path.display());
    }
    Ok(())
}

/// Constant curve at the axis's mean absolute error, for axes excluded from
/// the Gaussian fit.
fn constant_fit(samples: &[headtrack::fit::ErrorSample], axis: Axis) -> FitResult {
    let n = samples.len() as f64;
    let mean = samples
        .iter()
        .map(|s| s.abs_error[axis.index()])
        .sum::<f64>()
        / n;
    let rms = (samples
        .iter()
        .map(|s| {
            let d = s.abs_error[axis.index()] - mean;
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    FitResult {
        lambda: 0.0,
        mu: 0.0,
        sigma: 1.0,
        tau: mean,
        residual_rms: rms,
        iterations: 0,
        converged: false,
        degenerate: true,
    }
}

fn filter(args: FilterArgs) -> Result<()> {
    let mut config = args.config.load()?;
    if let Some(input) = args.input {
        config.io.input = Some(input);
        config.io.listen = None;
    }
    if let Some(out) = args.out {
        config.io.output = Some(out);
    }
    if let Some(metrics) = args.metrics {
        config.io.metrics = Some(metrics);
    }
    if let Some(format) = args.format {
        config.io.format = format;
    }
    let outcome = run_filter_pipeline(&config)?;
    for rejection in &outcome.rejected {
        eprintln!(
            "warning: line {} dropped: {}",
            rejection.line, rejection.reason
        );
    }
    if outcome.metrics.frames == 0 {
        eprintln!("warning: input stream is empty");
    }
    println!("{}", serde_json::to_string_pretty(&outcome.metrics)?);
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let config = args.config.load()?;
    let format = args.format.unwrap_or(config.io.format);
    let a = read_stream(&args.a, format)?;
    let b = read_stream(&args.b, format)?;
    if !a.rejected.is_empty() || !b.rejected.is_empty() {
        eprintln!(
            "warning: dropped {} records from {}, {} from {}",
            a.rejected.len(),
            args.a.display(),
            b.rejected.len(),
            args.b.display()
        );
    }
    let stats_a = stream_stats(&a.frames);
    let stats_b = stream_stats(&b.frames);
    let cross = if a.frames.len() == b.frames.len() && !a.frames.is_empty() {
        let pa: Vec<_> = a.frames.iter().map(|f| f.pose).collect();
        let pb: Vec<_> = b.frames.iter().map(|f| f.pose).collect();
        headtrack::synth::rmse(&pa, &pb).ok()
    } else {
        None
    };

    if args.json {
        let doc = serde_json::json!({
            "schema_version": 1,
            "a": stats_json(&args.a.display().to_string(), &stats_a),
            "b": stats_json(&args.b.display().to_string(), &stats_b),
            "cross_rmse": cross.map(triple_json),
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }

    println!("{:<24} {:>16} {:>16}", "metric", "a", "b");
    println!(
        "{:<24} {:>16} {:>16}",
        "frames", stats_a.frames, stats_b.frames
    );
    for (label, pick) in [("jitter", 0usize), ("rmse_vs_truth", 1usize)] {
        for axis in AXES {
            let cell = |s: &StreamStats| -> String {
                let v = if pick == 0 { s.jitter } else { s.rmse };
                match v {
                    Some(t) => format!("{:.4}", t[axis.index()]),
                    None => "-".to_string(),
                }
            };
            println!(
                "{:<24} {:>16} {:>16}",
                format!("{label} {axis}"),
                cell(&stats_a),
                cell(&stats_b)
            );
        }
    }
    for axis in AXES {
        let cell = match cross {
            Some(t) => format!("{:.4}", t[axis.index()]),
            None => "-".to_string(),
        };
        println!("{:<24} {:>33}", format!("rmse a-vs-b {axis}"), cell);
    }
    Ok(())
}

struct StreamStats {
    frames: usize,
    jitter: Option<[f64; 3]>,
    rmse: Option<[f64; 3]>,
}

fn stream_stats(frames: &[FrameRecord]) -> StreamStats {
    let poses: Vec<_> = frames.iter().map(|f| f.pose).collect();
    let jitter = headtrack::synth::jitter(&poses).ok();
    let mut est = Vec::new();
    let mut tru = Vec::new();
    for f in frames {
        if let Some(gt) = f.ground_truth {
            est.push(f.pose);
            tru.push(gt);
        }
    }
    let rmse = headtrack::synth::rmse(&est, &tru).ok();
    StreamStats {
        frames: frames.len(),
        jitter,
        rmse,
    }
}

fn triple_json(t: [f64; 3]) -> serde_json::Value {
    serde_json::json!({"pitch": t[0], "yaw": t[1], "roll": t[2]})
}

fn stats_json(path: &str, stats: &StreamStats) -> serde_json::Value {
    serde_json::json!({
        "path": path,
        "frames": stats.frames,
        "jitter": stats.jitter.map(triple_json),
        "rmse_vs_truth": stats.rmse.map(triple_json),
    })
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut config = args.config.load()?;
    if let Some(listen) = args.listen {
        config.io.listen = Some(listen);
        config.io.input = None;
    }
    let server = FrameServer::from_config(&config)?;
    let addr = server.local_addr()?;
    // Announce the bound address (port 0 resolves to a real port here).
    println!("listening on {addr}");
    use std::io::Write;
    std::io::stdout().flush().ok();
    server.run().map_err(|e| anyhow!("server: {e}"))
}
