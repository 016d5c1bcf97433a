//! Generative model: physics-derived amplitude, Poisson flip configurations,
//! sampled random telegraph signals and additive white Gaussian noise.
//!
//! All baseband amplitudes are in Hz. A telegraph with initial polarity `φ`
//! and flip times `τ_1 < … < τ_N` takes the value `φ·Δω·(−1)^k` at time `t`,
//! where `k` counts the flips with `τ_i <= t` (the post-flip polarity applies
//! at the flip instant itself).

use std::f64::consts::PI;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonnegative, ensure_positive, param, Error, Result};

/// Cantilever and spin constants that set the telegraph amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    /// Spring constant `k` in N/m.
    pub spring_constant: f64,
    /// Resonant angular frequency `ω_o` in rad/s.
    pub resonant_frequency: f64,
    /// rf field amplitude `B1` in T.
    pub rf_field: f64,
    /// Field gradient `G` in T/m.
    pub field_gradient: f64,
    /// Magnetic moment magnitude `|μ|` in J/T.
    pub magnetic_moment: f64,
}

impl PhysicsParams {
    /// Builds parameters from a resonant frequency given in Hz rather than rad/s.
    pub fn from_hz(k: f64, f0_hz: f64, b1: f64, grad: f64, mu: f64) -> Self {
        Self {
            spring_constant: k,
            resonant_frequency: 2.0 * PI * f0_hz,
            rf_field: b1,
            field_gradient: grad,
            magnetic_moment: mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("spring_constant", self.spring_constant)?;
        ensure_positive("resonant_frequency", self.resonant_frequency)?;
        ensure_positive("rf_field", self.rf_field)?;
        ensure_positive("field_gradient", self.field_gradient)?;
        ensure_positive("magnetic_moment", self.magnetic_moment)
    }
}

/// Frequency-shift magnitude `|Δω_o| / 2π` in Hz:
/// `½ · (ω_o / 2π) · |μ| G² / (k B1)`.
pub fn delta_omega_hz(params: &PhysicsParams) -> Result<f64> {
    params.validate()?;
    let shift_rad = 0.5 * params.resonant_frequency * params.magnetic_moment
        * params.field_gradient
        * params.field_gradient
        / (params.spring_constant * params.rf_field);
    let hz = shift_rad / (2.0 * PI);
    if hz.is_finite() && hz > 0.0 {
        Ok(hz)
    } else {
        Err(param("physics", format!("frequency shift evaluates to {hz}")))
    }
}

/// Uniform sampling grid `t_n = n·T_s`, `n = 0..M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    duration: f64,
    sample_period: f64,
    sample_count: usize,
}

impl SampleGrid {
    pub fn new(duration: f64, sample_period: f64) -> Result<Self> {
        ensure_positive("duration", duration)?;
        ensure_positive("sample_period", sample_period)?;
        if sample_period > duration {
            return Err(Error::Grid(format!(
                "sample period {sample_period} exceeds duration {duration}"
            )));
        }
        let count = (duration / sample_period).round();
        if count < 2.0 {
            return Err(Error::Grid(format!(
                "grid must have at least 2 samples, got {count}"
            )));
        }
        let sample_count = count as usize;
        debug_assert!((count * sample_period - duration).abs() <= sample_period / 2.0 + 1e-12);
        Ok(Self {
            duration,
            sample_period,
            sample_count,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.sample_period
    }

    /// Index of the first sample whose time is `>= t`, clamped to `M`.
    ///
    /// Samples before this index precede an event at `t`; the sample at the
    /// index and after see it.
    pub fn first_index_at_or_after(&self, t: f64) -> usize {
        let m = self.sample_count;
        if t <= 0.0 {
            return 0;
        }
        let guess = (t / self.sample_period).ceil();
        if guess.is_nan() || guess >= m as f64 {
            // Could still be exactly on the last sample after rounding.
            return if self.time(m - 1) >= t { m - 1 } else { m };
        }
        let mut idx = guess as usize;
        while idx > 0 && self.time(idx - 1) >= t {
            idx -= 1;
        }
        while idx < m && self.time(idx) < t {
            idx += 1;
        }
        idx
    }
}

/// Initial spin polarity `φ ∈ {−1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Plus => 1.0,
            Polarity::Minus => -1.0,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Polarity::Plus
        } else {
            Polarity::Minus
        }
    }
}

/// One telegraph realization: sorted interior flip times plus initial polarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipConfig {
    flip_times: Vec<f64>,
    initial_polarity: Polarity,
}

impl FlipConfig {
    /// Validates `0 < τ_1 < … < τ_N < duration`. Duplicate times are rejected.
    pub fn new(flip_times: Vec<f64>, initial_polarity: Polarity, duration: f64) -> Result<Self> {
        let config = Self {
            flip_times,
            initial_polarity,
        };
        config.validate(duration)?;
        Ok(config)
    }

    pub fn constant(initial_polarity: Polarity) -> Self {
        Self {
            flip_times: Vec::new(),
            initial_polarity,
        }
    }

    /// Caller guarantees the invariants (used on hot sampling paths).
    pub(crate) fn from_sorted_unchecked(flip_times: Vec<f64>, initial_polarity: Polarity) -> Self {
        Self {
            flip_times,
            initial_polarity,
        }
    }

    pub fn validate(&self, duration: f64) -> Result<()> {
        let mut prev = 0.0;
        for (i, &t) in self.flip_times.iter().enumerate() {
            if !t.is_finite() || t <= 0.0 || t >= duration {
                return Err(Error::FlipConfig(format!(
                    "flip {i} at {t} outside open interval (0, {duration})"
                )));
            }
            if t <= prev {
                return Err(Error::FlipConfig(format!(
                    "flip times not strictly increasing at index {i} ({prev} then {t})"
                )));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn flip_count(&self) -> usize {
        self.flip_times.len()
    }

    pub fn flip_times(&self) -> &[f64] {
        &self.flip_times
    }

    pub(crate) fn flip_times_mut(&mut self) -> &mut [f64] {
        &mut self.flip_times
    }

    pub fn initial_polarity(&self) -> Polarity {
        self.initial_polarity
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.initial_polarity = polarity;
        self
    }

    /// Segment boundaries `b_0 = 0, b_1, …, b_N, b_{N+1} = M` as sample indices.
    /// Samples in `b_j..b_{j+1}` carry polarity `φ·(−1)^j`.
    pub fn segment_boundaries(&self, grid: &SampleGrid) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.flip_times.len() + 2);
        segment_boundaries_into(&self.flip_times, grid, &mut out);
        out
    }
}

pub(crate) fn segment_boundaries_into(times: &[f64], grid: &SampleGrid, out: &mut Vec<usize>) {
    out.clear();
    out.push(0);
    out.extend(times.iter().map(|&t| grid.first_index_at_or_after(t)));
    out.push(grid.sample_count());
}

/// Where the noise level comes from: a per-sample sigma or an SNR in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Sigma(f64),
    SnrDb(f64),
}

/// Full generative description of one detection scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Telegraph amplitude `Δω` in Hz.
    pub amplitude: f64,
    /// Poisson flip rate `λ` in flips/s.
    pub flip_rate: f64,
    pub grid: SampleGrid,
    pub noise: NoiseLevel,
}

impl ScenarioConfig {
    pub fn new(amplitude: f64, flip_rate: f64, grid: SampleGrid, noise: NoiseLevel) -> Result<Self> {
        let scenario = Self {
            amplitude,
            flip_rate,
            grid,
            noise,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("amplitude", self.amplitude)?;
        ensure_nonnegative("flip_rate", self.flip_rate)?;
        match self.noise {
            NoiseLevel::Sigma(s) => ensure_nonnegative("noise_sigma", s),
            NoiseLevel::SnrDb(db) if db.is_nan() || db == f64::NEG_INFINITY => {
                Err(param("snr_db", format!("must not be {db}")))
            }
            NoiseLevel::SnrDb(_) => Ok(()),
        }
    }

    /// Per-sample noise standard deviation in Hz.
    pub fn noise_sigma(&self) -> f64 {
        match self.noise {
            NoiseLevel::Sigma(s) => s,
            NoiseLevel::SnrDb(db) => sigma_from_snr(db, self.amplitude),
        }
    }

    /// SNR in dB (`+inf` for a noiseless scenario).
    pub fn snr_db(&self) -> f64 {
        match self.noise {
            NoiseLevel::Sigma(s) => snr_from_sigma(s, self.amplitude),
            NoiseLevel::SnrDb(db) => db,
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise = NoiseLevel::SnrDb(snr_db);
        self
    }

    pub fn with_flip_rate(mut self, flip_rate: f64) -> Self {
        self.flip_rate = flip_rate;
        self
    }

    /// Expected flip count `λT`.
    pub fn mean_flips(&self) -> f64 {
        self.flip_rate * self.grid.duration()
    }
}

/// What a sampled trace represents in `y = s + v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceRole {
    Clean,
    Noise,
    Observation,
}

/// A real-valued series on a [`SampleGrid`], in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrace {
    grid: SampleGrid,
    values: Vec<f64>,
    role: TraceRole,
}

impl SampledTrace {
    pub fn new(grid: SampleGrid, values: Vec<f64>, role: TraceRole) -> Result<Self> {
        if values.len() != grid.sample_count() {
            return Err(Error::Dimension {
                expected: grid.sample_count(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(param("values", format!("sample {i} is not finite")));
        }
        Ok(Self { grid, values, role })
    }

    pub fn zeros(grid: SampleGrid, role: TraceRole) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.sample_count()],
            role,
        }
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn role(&self) -> TraceRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same samples scaled by `a`; keeps grid and role.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
            role: self.role,
        }
    }
}

/// Draws `N ~ Poisson(λT)`, then `N` i.i.d. `Uniform(0, T)` times sorted, and
/// a fair-coin initial polarity.
pub fn sample_flip_config<R: Rng + ?Sized>(
    flip_rate: f64,
    grid: &SampleGrid,
    rng: &mut R,
) -> Result<FlipConfig> {
    ensure_nonnegative("flip_rate", flip_rate)?;
    let sampler = FlipSampler::new(flip_rate, grid.duration())?;
    let mut times = Vec::new();
    let polarity = sampler.draw_into(rng, &mut times);
    Ok(FlipConfig::from_sorted_unchecked(times, polarity))
}

/// Reusable prior sampler for flip configurations on `(0, T)`.
#[derive(Debug, Clone)]
pub(crate) struct FlipSampler {
    count: Option<Poisson<f64>>,
    duration: f64,
}

impl FlipSampler {
    pub(crate) fn new(flip_rate: f64, duration: f64) -> Result<Self> {
        let mean = flip_rate * duration;
        let count = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| param("flip_rate", e.to_string()))?)
        } else {
            None
        };
        Ok(Self { count, duration })
    }

    pub(crate) fn draw_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.count {
            Some(p) => p.sample(rng) as usize,
            None => 0,
        }
    }

    /// Draws a full configuration into `times`; returns the initial polarity.
    pub(crate) fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, times: &mut Vec<f64>) -> Polarity {
        let n = self.draw_count(rng);
        self.draw_times_into(n, rng, times);
        Polarity::random(rng)
    }

    /// `n` sorted distinct uniform times on the open interval `(0, T)`.
    pub(crate) fn draw_times_into<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, times: &mut Vec<f64>) {
        loop {
            times.clear();
            times.extend((0..n).map(|_| open_uniform(rng, 0.0, self.duration)));
            times.sort_unstable_by(f64::total_cmp);
            if times.windows(2).all(|w| w[0] < w[1]) {
                return;
            }
        }
    }
}

/// A draw from `Uniform(lo, hi)` that never returns either endpoint.
pub(crate) fn open_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let u: f64 = Open01.sample(rng);
        let x = lo + (hi - lo) * u;
        if x > lo && x < hi {
            return x;
        }
    }
}

/// Samples `φ·Δω·(−1)^{#{i : τ_i <= t_n}}` on the grid.
pub fn synthesize_telegraph(config: &FlipConfig, amplitude: f64, grid: &SampleGrid) -> Result<SampledTrace> {
    ensure_positive("amplitude", amplitude)?;
    config.validate(grid.duration())?;
    let bounds = config.segment_boundaries(grid);
    let mut values = Vec::with_capacity(grid.sample_count());
    let mut level = config.initial_polarity().sign() * amplitude;
    for seg in bounds.windows(2) {
        values.extend(std::iter::repeat_n(level, seg[1] - seg[0]));
        level = -level;
    }
    Ok(SampledTrace {
        grid: *grid,
        values,
        role: TraceRole::Clean,
    })
}

/// Per-sample noise sigma for a target SNR: `σ_v = Δω · 10^(−snr/20)`.
pub fn sigma_from_snr(snr_db: f64, amplitude: f64) -> f64 {
    amplitude * 10f64.powf(-snr_db / 20.0)
}

/// Inverse of [`sigma_from_snr`]: `20·log10(Δω / σ_v)`.
pub fn snr_from_sigma(sigma: f64, amplitude: f64) -> f64 {
    20.0 * (amplitude / sigma).log10()
}

/// Adds i.i.d. `N(0, σ_v²)` noise to every sample.
pub fn add_awgn<R: Rng + ?Sized>(trace: &SampledTrace, sigma: f64, rng: &mut R) -> Result<SampledTrace> {
    ensure_nonnegative("noise_sigma", sigma)?;
    let mut values = trace.values.clone();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|e| param("noise_sigma", e.to_string()))?;
        for v in &mut values {
            *v += normal.sample(rng);
        }
    }
    Ok(SampledTrace {
        grid: trace.grid,
        values,
        role: TraceRole::Observation,
    })
}
