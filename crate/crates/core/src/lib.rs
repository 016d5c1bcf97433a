//! Baseband detection of a single flipping spin.
//!
//! The observation model is a random telegraph signal (Poisson polarity
//! flips, known amplitude) in additive white Gaussian noise. The crate
//! provides the generative model ([`signal`]), four detectors
//! ([`detectors`]), the randomized maximization behind the hybrid Bayes/GLR
//! detector ([`search`]), a reproducible Monte Carlo harness producing ROC
//! and power curves ([`harness`]), and the configuration/serialization layer
//! used by the `mrfm-detect` binary ([`config`], [`output`], [`cli`]).

pub mod cli;
pub mod config;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod output;
pub mod rng;
pub mod search;
pub mod signal;
pub mod stats;

pub use detectors::{DetectorKind, DetectorStatistic};
pub use error::{Error, Result};
pub use harness::{DetectorSpec, Execution, Hypothesis, PowerCurve, RocCurve, TrialBatch};
pub use search::{SamplerConfig, SearchResult, SearchStrategy};
pub use signal::{FlipConfig, NoiseLevel, PhysicsParams, Polarity, SampleGrid, SampledTrace, ScenarioConfig};
