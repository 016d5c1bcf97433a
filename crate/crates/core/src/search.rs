//! Maximization of the hybrid Bayes/GLR log-likelihood over flip configurations.
//!
//! For a candidate configuration with `φ = +1` telegraph `s⁺`, the objective is
//!
//! ```text
//! J(τ, N) = ln cosh(⟨y, s⁺⟩ / σ²) − ⟨s⁺, s⁺⟩ / (2σ²)
//! ```
//!
//! with per-sample inner products. `⟨s⁺, s⁺⟩ = M·Δω²` for every candidate, so
//! the search only needs `⟨y, s⁺⟩`, which a prefix-sum table gives in
//! `O(N + 1)` per candidate.

use std::cell::Cell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::numeric::log_cosh;
use crate::signal::{
    open_uniform, segment_boundaries_into, synthesize_telegraph, FlipConfig, FlipSampler, Polarity,
    SampleGrid, SampledTrace, ScenarioConfig,
};

/// How candidate configurations are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Independent draws of full configurations from the Poisson prior.
    #[default]
    PriorOnly,
    /// Prior draw of `(N, φ, τ)` followed by fixed-dimension Gibbs sweeps.
    GibbsSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Outer iterations (prior draws).
    pub samples: usize,
    pub strategy: SearchStrategy,
    /// Gibbs sweeps per outer iteration, each followed by an evaluation.
    pub sweeps_per_sample: usize,
    /// Unevaluated sweeps run before the evaluated ones.
    pub burn_in: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            samples: 5000,
            strategy: SearchStrategy::PriorOnly,
            sweeps_per_sample: 1,
            burn_in: 0,
        }
    }
}

impl SamplerConfig {
    pub fn prior_only(samples: usize) -> Self {
        Self {
            samples,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(crate::error::param("samples", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_config: FlipConfig,
    pub best_objective: f64,
    /// Best-so-far objective after each evaluated candidate.
    pub objective_trace: Vec<f64>,
}

/// `P_n = Σ_{k<n} y_k` for `n = 0..=M`, with a read counter.
#[derive(Debug, Clone)]
pub struct PrefixSums {
    sums: Vec<f64>,
    reads: Cell<usize>,
}

impl PrefixSums {
    pub fn new(values: &[f64]) -> Self {
        let mut sums = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        sums.push(acc);
        for &v in values {
            acc += v;
            sums.push(acc);
        }
        Self {
            sums,
            reads: Cell::new(0),
        }
    }

    pub fn sample_count(&self) -> usize {
        self.sums.len() - 1
    }

    /// Number of prefix entries read since construction or the last reset.
    pub fn reads(&self) -> usize {
        self.reads.get()
    }

    pub fn reset_reads(&self) {
        self.reads.set(0);
    }

    /// `Σ_j (−1)^j (P_{b_{j+1}} − P_{b_j})` over consecutive boundaries.
    pub fn alternating_sum(&self, boundaries: &[usize]) -> f64 {
        self.reads.set(self.reads.get() + boundaries.len());
        let mut acc = 0.0;
        let mut sign = 1.0;
        let mut prev = self.sums[boundaries[0]];
        for &b in &boundaries[1..] {
            let cur = self.sums[b];
            acc += sign * (cur - prev);
            prev = cur;
            sign = -sign;
        }
        acc
    }
}

/// `⟨y, s⁺(config)⟩` from precomputed prefix sums, reading `N + 2` entries.
pub fn correlation_fast(prefix: &PrefixSums, config: &FlipConfig, grid: &SampleGrid, amplitude: f64) -> f64 {
    let bounds = config.segment_boundaries(grid);
    amplitude * prefix.alternating_sum(&bounds)
}

/// Objective from a precomputed correlation `⟨y, s⁺⟩`.
pub fn objective_from_correlation(correlation: f64, sample_count: usize, amplitude: f64, sigma: f64) -> f64 {
    let var = sigma * sigma;
    log_cosh(correlation / var) - sample_count as f64 * amplitude * amplitude / (2.0 * var)
}

/// Evaluates the objective by synthesizing `s⁺` and forming both inner products directly.
pub fn objective(y: &SampledTrace, config: &FlipConfig, amplitude: f64, sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::DegenerateLikelihood);
    }
    let plus = config.clone().with_polarity(Polarity::Plus);
    let s = synthesize_telegraph(&plus, amplitude, y.grid())?;
    if s.len() != y.len() {
        return Err(Error::Dimension {
            expected: s.len(),
            got: y.len(),
        });
    }
    let cross: f64 = y.values().iter().zip(s.values()).map(|(a, b)| a * b).sum();
    let energy: f64 = s.values().iter().map(|v| v * v).sum();
    let var = sigma * sigma;
    Ok(log_cosh(cross / var) - energy / (2.0 * var))
}

/// One systematic-scan sweep: each `τ_i` in turn is redrawn from
/// `Uniform(τ_{i−1}, τ_{i+1})` with `τ_0 = 0`, `τ_{N+1} = T`.
pub fn gibbs_sweep<R: Rng + ?Sized>(config: &FlipConfig, duration: f64, rng: &mut R) -> Result<FlipConfig> {
    config.validate(duration)?;
    let mut out = config.clone();
    sweep_in_place(out.flip_times_mut(), duration, rng);
    Ok(out)
}

fn sweep_in_place<R: Rng + ?Sized>(times: &mut [f64], duration: f64, rng: &mut R) {
    let n = times.len();
    for i in 0..n {
        let lo = if i == 0 { 0.0 } else { times[i - 1] };
        let hi = if i + 1 == n { duration } else { times[i + 1] };
        times[i] = open_uniform(rng, lo, hi);
    }
}

struct Tracker {
    best_config: Option<FlipConfig>,
    best_objective: f64,
    trace: Vec<f64>,
}

impl Tracker {
    fn with_capacity(n: usize) -> Self {
        Self {
            best_config: None,
            best_objective: f64::NEG_INFINITY,
            trace: Vec::with_capacity(n),
        }
    }

    fn offer(&mut self, value: f64, times: &[f64], polarity: Polarity) {
        if value > self.best_objective || self.best_config.is_none() {
            self.best_objective = value;
            self.best_config = Some(FlipConfig::from_sorted_unchecked(times.to_vec(), polarity));
        }
        self.trace.push(self.best_objective);
    }

    fn finish(self) -> Result<SearchResult> {
        let best_config = self
            .best_config
            .ok_or_else(|| crate::error::param("candidates", "no candidate was evaluated"))?;
        Ok(SearchResult {
            best_config,
            best_objective: self.best_objective,
            objective_trace: self.trace,
        })
    }
}

/// Shared per-trace state for candidate evaluation.
struct Evaluator<'a> {
    prefix: PrefixSums,
    grid: &'a SampleGrid,
    amplitude: f64,
    sigma: f64,
    bounds: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    fn new(y: &'a SampledTrace, scenario: &ScenarioConfig) -> Result<Self> {
        let sigma = scenario.noise_sigma();
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::DegenerateLikelihood);
        }
        ensure_positive("amplitude", scenario.amplitude)?;
        if y.len() != scenario.grid.sample_count() {
            return Err(Error::Dimension {
                expected: scenario.grid.sample_count(),
                got: y.len(),
            });
        }
        Ok(Self {
            prefix: PrefixSums::new(y.values()),
            grid: y.grid(),
            amplitude: scenario.amplitude,
            sigma,
            bounds: Vec::new(),
        })
    }

    fn evaluate(&mut self, times: &[f64]) -> f64 {
        segment_boundaries_into(times, self.grid, &mut self.bounds);
        let corr = self.amplitude * self.prefix.alternating_sum(&self.bounds);
        objective_from_correlation(corr, self.grid.sample_count(), self.amplitude, self.sigma)
    }
}

/// Randomized maximization of the objective under `cfg.strategy`.
///
/// Candidates are drawn sequentially from `rng`, so a run with more samples
/// visits a superset of the candidates of a shorter run on the same stream.
pub fn search_max<R: Rng + ?Sized>(
    y: &SampledTrace,
    scenario: &ScenarioConfig,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    cfg.validate()?;
    let mut eval = Evaluator::new(y, scenario)?;
    let prior = FlipSampler::new(scenario.flip_rate, scenario.grid.duration())?;
    let duration = scenario.grid.duration();
    let evals_per_sample = match cfg.strategy {
        SearchStrategy::PriorOnly => 1,
        SearchStrategy::GibbsSweep => cfg.sweeps_per_sample + usize::from(cfg.burn_in == 0),
    };
    let mut tracker = Tracker::with_capacity(cfg.samples * evals_per_sample);
    let mut times = Vec::new();

    for _ in 0..cfg.samples {
        let polarity = prior.draw_into(rng, &mut times);
        match cfg.strategy {
            SearchStrategy::PriorOnly => {
                let v = eval.evaluate(&times);
                tracker.offer(v, &times, polarity);
            }
            SearchStrategy::GibbsSweep => {
                if cfg.burn_in == 0 {
                    let v = eval.evaluate(&times);
                    tracker.offer(v, &times, polarity);
                }
                for _ in 0..cfg.burn_in {
                    sweep_in_place(&mut times, duration, rng);
                }
                for _ in 0..cfg.sweeps_per_sample {
                    sweep_in_place(&mut times, duration, rng);
                    let v = eval.evaluate(&times);
                    tracker.offer(v, &times, polarity);
                }
            }
        }
    }
    tracker.finish()
}

/// Maximization over an explicit candidate set, evaluated in order.
pub fn search_candidates<I>(y: &SampledTrace, scenario: &ScenarioConfig, candidates: I) -> Result<SearchResult>
where
    I: IntoIterator<Item = FlipConfig>,
{
    let mut eval = Evaluator::new(y, scenario)?;
    let duration = scenario.grid.duration();
    let mut tracker = Tracker::with_capacity(0);
    for c in candidates {
        c.validate(duration)?;
        let v = eval.evaluate(c.flip_times());
        tracker.offer(v, c.flip_times(), c.initial_polarity());
    }
    tracker.finish()
}

/// Every subset of flips placed half a sample before each listed grid index.
///
/// A flip placed before sample `n` (with `1 <= n < M`) switches polarity
/// exactly from sample `n` on. Returns `2^k` configurations with `φ = +1`.
pub fn grid_restricted_configs(grid: &SampleGrid, flip_indices: &[usize]) -> Result<Vec<FlipConfig>> {
    let mut sorted = flip_indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != flip_indices.len() {
        return Err(Error::FlipConfig("duplicate grid index".into()));
    }
    if sorted.len() > 20 {
        return Err(crate::error::param("flip_indices", "at most 20 grid points"));
    }
    if let Some(&bad) = sorted.iter().find(|&&n| n == 0 || n >= grid.sample_count()) {
        return Err(Error::FlipConfig(format!("grid index {bad} is not interior")));
    }
    let ts = grid.sample_period();
    (0u32..1 << sorted.len())
        .map(|mask| {
            let times = sorted
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &n)| (n as f64 - 0.5) * ts)
                .collect();
            FlipConfig::new(times, Polarity::Plus, grid.duration())
        })
        .collect()
}
