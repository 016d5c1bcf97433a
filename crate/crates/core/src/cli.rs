//! `mrfm-detect` command-line front end.
//!
//! Precedence for every setting is: flag > config file > environment
//! (`MRFM_DETECT_SEED`, seed only) > built-in default.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{ExperimentConfig, PhysicsInput, RawConfig};
use crate::detectors::DetectorKind;
use crate::error::{Error, Result};
use crate::harness::{
    gibbs_study, pd_at_pf, power_curves, run_trials_multi, snr_at_pd, empirical_roc, DetectorSpec, Execution,
};
use crate::output::{write_power_csv, write_roc_csv, write_trace_csv, RunSummary};
use crate::rng::{StreamKey, StreamPurpose};
use crate::search::SearchStrategy;
use crate::signal::{add_awgn, delta_omega_hz, sample_flip_config, synthesize_telegraph, SampledTrace, TraceRole};

pub const SEED_ENV: &str = "MRFM_DETECT_SEED";

/// Detection level used for the SNR read-out of power curves.
pub const POWER_TARGET_PD: f64 = 0.8;

#[derive(Debug, Parser)]
#[command(name = "mrfm-detect", version, about = "Single-spin baseband detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Telegraph amplitude in Hz from cantilever and spin constants.
    Physics(PhysicsArgs),
    /// One sample observation: clean telegraph and noisy trace (`t,s,y`).
    Trace(ExperimentArgs),
    /// Empirical ROC curve for each detector.
    Roc(ExperimentArgs),
    /// P_D against SNR at a fixed false-alarm level.
    Power(ExperimentArgs),
    /// Hybrid detector ROC for several sampler sizes.
    GibbsStudy(ExperimentArgs),
}

#[derive(Debug, Args)]
struct PhysicsArgs {
    /// Spring constant (N/m).
    #[arg(long, default_value_t = 1e-3)]
    k: f64,
    /// Resonant frequency (Hz).
    #[arg(long, default_value_t = 1e4)]
    f0: f64,
    /// rf field amplitude (T).
    #[arg(long, default_value_t = 2e-4)]
    b1: f64,
    /// Field gradient (T/m).
    #[arg(long, default_value_t = 2e6)]
    grad: f64,
    /// Magnetic moment (J/T).
    #[arg(long, default_value_t = 9.3e-24)]
    mu: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Telegraph amplitude (Hz).
    #[arg(long)]
    delta_omega: Option<f64>,
    /// Flip rate (flips/s).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Per-sample noise standard deviation (Hz).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    sample_period: Option<f64>,
    /// Comma-separated: matched_filter,amplitude,energy,hybrid_glr.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<DetectorKind>>,
    /// Sampler size; a comma-separated list for `gibbs-study`.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    /// prior_only or gibbs_sweep.
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<SearchStrategy>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Trials per hypothesis.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR grid in dB for `power`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_grid: Option<Vec<f64>>,
    /// Worker threads (1 = sequential).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> std::result::Result<SearchStrategy, String> {
    match s {
        "prior_only" | "prior-only" => Ok(SearchStrategy::PriorOnly),
        "gibbs_sweep" | "gibbs-sweep" => Ok(SearchStrategy::GibbsSweep),
        other => Err(format!("unknown strategy `{other}`")),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code: 0 success, 1 runtime error, 2 usage or
/// config error.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    let started = Instant::now();
    let (name, args) = match command {
        Command::Physics(p) => return run_physics(p, started),
        Command::Trace(a) => ("trace", a),
        Command::Roc(a) => ("roc", a),
        Command::Power(a) => ("power", a),
        Command::GibbsStudy(a) => ("gibbs-study", a),
    };
    let gibbs = name == "gibbs-study";
    let config = build_config(&args, gibbs).map_err(Failure::Config)?;
    let exec = config.workers.map(Execution::with_workers).unwrap_or_default();
    let mut summary = RunSummary::new(name, Some(&config));
    fs::create_dir_all(&config.out_dir).map_err(Error::from)?;
    match name {
        "trace" => run_trace(&config, &mut summary)?,
        "roc" => run_roc(&config, exec, &mut summary)?,
        "power" => run_power(&config, exec, &mut summary)?,
        _ => run_gibbs(&config, exec, &mut summary)?,
    }
    finish(summary, &config.out_dir, started)?;
    Ok(())
}

fn build_config(args: &ExperimentArgs, gibbs: bool) -> Result<ExperimentConfig> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            RawConfig::from_json(&text)?
        }
        None => RawConfig::default(),
    };
    if let Some(v) = args.delta_omega {
        raw.delta_omega_hz = Some(v);
        raw.physics = None;
    }
    if let Some(v) = args.snr_db {
        raw.snr_db = Some(v);
        raw.sigma = None;
    }
    if let Some(v) = args.sigma {
        raw.sigma = Some(v);
        raw.snr_db = if args.snr_db.is_some() { args.snr_db } else { None };
    }
    overlay(&mut raw.lambda, args.lambda);
    overlay(&mut raw.duration, args.duration);
    overlay(&mut raw.sample_period, args.sample_period);
    overlay(&mut raw.detectors, args.detectors.clone());
    overlay(&mut raw.strategy, args.strategy);
    overlay(&mut raw.sweeps_per_sample, args.sweeps);
    overlay(&mut raw.burn_in, args.burn_in);
    overlay(&mut raw.n_trials, args.trials);
    overlay(&mut raw.alpha, args.alpha);
    overlay(&mut raw.seed, args.seed);
    overlay(&mut raw.snr_grid_db, args.snr_grid.clone());
    overlay(&mut raw.workers, args.workers);
    overlay(&mut raw.out_dir, args.out_dir.clone());
    if let Some(samples) = &args.samples {
        if gibbs {
            raw.gibbs_samples = Some(samples.clone());
        } else if let [n] = samples.as_slice() {
            raw.samples = Some(*n);
        } else {
            return Err(Error::Config {
                path: "samples".into(),
                message: "expected a single sampler size".into(),
            });
        }
    }

    let env_seed = match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse::<u64>().map_err(|e| Error::Config {
            path: SEED_ENV.into(),
            message: e.to_string(),
        })?,
        Err(_) => 0,
    };
    ExperimentConfig::from_raw(raw, env_seed)
}

fn overlay<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn finish(mut summary: RunSummary, out_dir: &Path, started: Instant) -> Result<()> {
    summary.wall_time_s = started.elapsed().as_secs_f64();
    let path = out_dir.join(format!("{}_summary.json", summary.command.replace('-', "_")));
    fs::write(&path, summary.to_json() + "\n")?;
    println!("summary: {}", path.display());
    Ok(())
}

fn run_physics(p: PhysicsArgs, started: Instant) -> std::result::Result<(), Failure> {
    let input = PhysicsInput {
        k: p.k,
        f0_hz: p.f0,
        b1: p.b1,
        grad: p.grad,
        mu: p.mu,
    };
    let hz = delta_omega_hz(&input.params()).map_err(Failure::Config)?;
    println!("{hz:.6} Hz");
    let mut summary = RunSummary::new("physics", None);
    summary.metrics = json!({ "inputs": input, "delta_omega_hz": hz });
    match p.out_dir {
        Some(dir) => {
            fs::create_dir_all(&dir).map_err(Error::from)?;
            Ok(finish(summary, &dir, started)?)
        }
        None => {
            summary.wall_time_s = started.elapsed().as_secs_f64();
            println!("{}", summary.to_json());
            Ok(())
        }
    }
}

fn create(out_dir: &Path, name: &str, summary: &mut RunSummary) -> Result<BufWriter<File>> {
    let path = out_dir.join(name);
    summary.outputs.push(path.display().to_string());
    Ok(BufWriter::new(File::create(path)?))
}

fn detector_specs(config: &ExperimentConfig) -> Vec<DetectorSpec> {
    config
        .detectors
        .iter()
        .map(|&k| DetectorSpec::from_kind(k, config.sampler))
        .collect()
}

fn run_trace(config: &ExperimentConfig, summary: &mut RunSummary) -> Result<()> {
    let scenario = config.scenario();
    let mut rng = StreamKey::new(config.master_seed, "trace").stream(0, 1, StreamPurpose::Signal);
    let flips = sample_flip_config(scenario.flip_rate, &scenario.grid, &mut rng)?;
    let clean = synthesize_telegraph(&flips, scenario.amplitude, &scenario.grid)?;
    let y = add_awgn(&clean, scenario.noise_sigma(), &mut rng)?;
    let file = create(&config.out_dir, "trace.csv", summary)?;
    write_trace_csv(&clean, &y, file)?;
    let noise: Vec<f64> = y.values().iter().zip(clean.values()).map(|(a, b)| a - b).collect();
    let noise = SampledTrace::new(scenario.grid, noise, TraceRole::Noise)?;
    let empirical_power = noise.values().iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
    summary.metrics = json!({
        "flip_count": flips.flip_count(),
        "flip_times": flips.flip_times(),
        "initial_polarity": flips.initial_polarity(),
        "delta_omega_hz": scenario.amplitude,
        "noise_sigma": scenario.noise_sigma(),
        "snr_db": scenario.snr_db(),
        "empirical_noise_power": empirical_power,
    });
    Ok(())
}

fn run_roc(config: &ExperimentConfig, exec: Execution, summary: &mut RunSummary) -> Result<()> {
    let specs = detector_specs(config);
    let batches = run_trials_multi(&config.scenario(), &specs, config.n_trials, config.master_seed, exec)?;
    let mut metrics = serde_json::Map::new();
    for batch in &batches {
        let roc = empirical_roc(batch)?;
        let kind = roc.detector;
        write_roc_csv(&roc, create(&config.out_dir, &format!("roc_{kind}.csv"), summary)?)?;
        metrics.insert(
            kind.to_string(),
            json!({ "auc": roc.auc, "pd_at_alpha": pd_at_pf(&roc, config.alpha)?, "n_trials": config.n_trials }),
        );
    }
    summary.metrics = json!({ "alpha": config.alpha, "snr_db": config.scenario().snr_db(), "detectors": metrics });
    Ok(())
}

fn run_power(config: &ExperimentConfig, exec: Execution, summary: &mut RunSummary) -> Result<()> {
    let specs = detector_specs(config);
    let curves = power_curves(
        &config.scenario(),
        &config.snr_grid_db,
        &specs,
        config.alpha,
        config.n_trials,
        config.master_seed,
        exec,
    )?;
    let mut metrics = serde_json::Map::new();
    for curve in &curves {
        let kind = curve.detector;
        write_power_csv(curve, create(&config.out_dir, &format!("power_{kind}.csv"), summary)?)?;
        let crossing = snr_at_pd(curve, POWER_TARGET_PD).ok();
        metrics.insert(kind.to_string(), json!({ "snr_db_at_pd_0.8": crossing, "entries": curve.entries }));
    }
    summary.metrics = json!({ "alpha": config.alpha, "detectors": metrics });
    Ok(())
}

fn run_gibbs(config: &ExperimentConfig, exec: Execution, summary: &mut RunSummary) -> Result<()> {
    let results = gibbs_study(
        &config.scenario(),
        config.sampler,
        &config.gibbs_samples,
        config.n_trials,
        config.master_seed,
        exec,
    )?;
    let mut rows = Vec::new();
    for (samples, _, roc) in &results {
        write_roc_csv(roc, create(&config.out_dir, &format!("roc_hybrid_glr_samples_{samples}.csv"), summary)?)?;
        rows.push(json!({ "samples": samples, "auc": roc.auc, "pd_at_alpha": pd_at_pf(roc, config.alpha)? }));
    }
    summary.metrics = json!({ "alpha": config.alpha, "snr_db": config.scenario().snr_db(), "runs": rows });
    Ok(())
}
