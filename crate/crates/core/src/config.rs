//! Experiment configuration documents (JSON).
//!
//! ```json
//! {"delta_omega_hz": 0.928, "lambda": 1, "snr_db": -25, "seed": 42}
//! ```
//!
//! Exactly one of `delta_omega_hz` / `physics` and exactly one of `snr_db` /
//! `sigma` must be present. Everything else has a default: `duration` 3 s,
//! `sample_period` 0.5 ms, `n_trials` 500, `samples` 5000, `alpha` 0.1.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detectors::DetectorKind;
use crate::error::{Error, Result};
use crate::search::{SamplerConfig, SearchStrategy};
use crate::signal::{delta_omega_hz, NoiseLevel, PhysicsParams, SampleGrid, ScenarioConfig};

pub const DEFAULT_DURATION: f64 = 3.0;
pub const DEFAULT_SAMPLE_PERIOD: f64 = 5e-4;
pub const DEFAULT_TRIALS: usize = 500;
pub const DEFAULT_SAMPLES: usize = 5000;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_FLIP_RATE: f64 = 1.0;
pub const DEFAULT_OUT_DIR: &str = "results";

/// SNR grid used by `power` when none is given: −36 dB to −9 dB in 1.5 dB steps.
pub fn default_snr_grid() -> Vec<f64> {
    (0..19).map(|i| -36.0 + 1.5 * i as f64).collect()
}

pub fn default_gibbs_samples() -> Vec<usize> {
    vec![100, 500, 5000]
}

/// Physics constants as written in config files (resonant frequency in Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsInput {
    pub k: f64,
    pub f0_hz: f64,
    pub b1: f64,
    pub grad: f64,
    pub mu: f64,
}

impl PhysicsInput {
    pub fn params(&self) -> PhysicsParams {
        PhysicsParams::from_hz(self.k, self.f0_hz, self.b1, self.grad, self.mu)
    }
}

/// Document form: every field optional, unknown fields rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_omega_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physics: Option<PhysicsInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detectors: Option<Vec<DetectorKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<SearchStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps_per_sample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_grid_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gibbs_samples: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RawConfig {
    /// Parses a document, reporting the JSON path of any schema violation.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeSource {
    DeltaOmegaHz(f64),
    Physics(PhysicsInput),
}

/// Fully validated experiment description with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub amplitude: AmplitudeSource,
    /// Resolved telegraph amplitude in Hz.
    pub amplitude_hz: f64,
    pub flip_rate: f64,
    pub grid: SampleGrid,
    pub noise: NoiseLevel,
    pub detectors: Vec<DetectorKind>,
    pub sampler: SamplerConfig,
    pub n_trials: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub snr_grid_db: Vec<f64>,
    pub gibbs_samples: Vec<usize>,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
}

fn invalid(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Re-labels a module validation error with the config field it came from.
fn at(path: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| invalid(path, e.to_string())
}

/// Parses and validates a document; a missing `seed` becomes 0.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_raw(RawConfig::from_json(text)?, 0)
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig, default_seed: u64) -> Result<Self> {
        let (amplitude, amplitude_hz) = match (raw.delta_omega_hz, raw.physics) {
            (Some(_), Some(_)) => return Err(invalid("delta_omega_hz", "give either delta_omega_hz or physics, not both")),
            (None, None) => return Err(invalid("delta_omega_hz", "one of delta_omega_hz or physics is required")),
            (Some(hz), None) => {
                crate::error::ensure_positive("delta_omega_hz", hz).map_err(at("delta_omega_hz"))?;
                (AmplitudeSource::DeltaOmegaHz(hz), hz)
            }
            (None, Some(p)) => {
                let hz = delta_omega_hz(&p.params()).map_err(at("physics"))?;
                (AmplitudeSource::Physics(p), hz)
            }
        };
        let noise = match (raw.snr_db, raw.sigma) {
            (Some(_), Some(_)) => return Err(invalid("snr_db", "give either snr_db or sigma, not both")),
            (None, None) => return Err(invalid("snr_db", "one of snr_db or sigma is required")),
            (Some(db), None) => NoiseLevel::SnrDb(db),
            (None, Some(s)) => NoiseLevel::Sigma(s),
        };
        let grid = SampleGrid::new(
            raw.duration.unwrap_or(DEFAULT_DURATION),
            raw.sample_period.unwrap_or(DEFAULT_SAMPLE_PERIOD),
        )
        .map_err(at("duration"))?;
        let flip_rate = raw.lambda.unwrap_or(DEFAULT_FLIP_RATE);
        let scenario = ScenarioConfig {
            amplitude: amplitude_hz,
            flip_rate,
            grid,
            noise,
        };
        scenario.validate().map_err(|e| match e {
            Error::Parameter { name: "flip_rate", .. } => invalid("lambda", e.to_string()),
            Error::Parameter { name: "snr_db", .. } => invalid("snr_db", e.to_string()),
            _ => invalid("sigma", e.to_string()),
        })?;

        let defaults = SamplerConfig::default();
        let sampler = SamplerConfig {
            samples: raw.samples.unwrap_or(DEFAULT_SAMPLES),
            strategy: raw.strategy.unwrap_or(defaults.strategy),
            sweeps_per_sample: raw.sweeps_per_sample.unwrap_or(defaults.sweeps_per_sample),
            burn_in: raw.burn_in.unwrap_or(defaults.burn_in),
        };
        sampler.validate().map_err(at("samples"))?;

        let n_trials = raw.n_trials.unwrap_or(DEFAULT_TRIALS);
        if n_trials == 0 {
            return Err(invalid("n_trials", "must be at least 1"));
        }
        let alpha = raw.alpha.unwrap_or(DEFAULT_ALPHA);
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        let detectors = raw.detectors.unwrap_or_else(|| DetectorKind::ALL.to_vec());
        if detectors.is_empty() {
            return Err(invalid("detectors", "must list at least one detector"));
        }
        let snr_grid_db = raw.snr_grid_db.unwrap_or_else(default_snr_grid);
        if snr_grid_db.is_empty() || snr_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(invalid("snr_grid_db", "must be a nonempty list of finite values"));
        }
        let gibbs_samples = raw.gibbs_samples.unwrap_or_else(default_gibbs_samples);
        if gibbs_samples.is_empty() || gibbs_samples.contains(&0) {
            return Err(invalid("gibbs_samples", "must be a nonempty list of positive counts"));
        }
        if raw.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }

        Ok(Self {
            amplitude,
            amplitude_hz,
            flip_rate,
            grid,
            noise,
            detectors,
            sampler,
            n_trials,
            alpha,
            master_seed: raw.seed.unwrap_or(default_seed),
            snr_grid_db,
            gibbs_samples,
            workers: raw.workers,
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        })
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            amplitude: self.amplitude_hz,
            flip_rate: self.flip_rate,
            grid: self.grid,
            noise: self.noise,
        }
    }

    /// Fully explicit document form.
    pub fn to_raw(&self) -> RawConfig {
        let (delta_omega_hz, physics) = match self.amplitude {
            AmplitudeSource::DeltaOmegaHz(hz) => (Some(hz), None),
            AmplitudeSource::Physics(p) => (None, Some(p)),
        };
        let (snr_db, sigma) = match self.noise {
            NoiseLevel::SnrDb(db) => (Some(db), None),
            NoiseLevel::Sigma(s) => (None, Some(s)),
        };
        RawConfig {
            delta_omega_hz,
            physics,
            lambda: Some(self.flip_rate),
            duration: Some(self.grid.duration()),
            sample_period: Some(self.grid.sample_period()),
            snr_db,
            sigma,
            detectors: Some(self.detectors.clone()),
            samples: Some(self.sampler.samples),
            strategy: Some(self.sampler.strategy),
            sweeps_per_sample: Some(self.sampler.sweeps_per_sample),
            burn_in: Some(self.sampler.burn_in),
            n_trials: Some(self.n_trials),
            alpha: Some(self.alpha),
            seed: Some(self.master_seed),
            snr_grid_db: Some(self.snr_grid_db.clone()),
            gibbs_samples: Some(self.gibbs_samples.clone()),
            workers: self.workers,
            out_dir: Some(self.out_dir.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("config serializes")
    }

    /// SHA-256 of the explicit document, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}
