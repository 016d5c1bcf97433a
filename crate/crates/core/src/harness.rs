//! Monte Carlo trials under both hypotheses, empirical ROC curves, power
//! curves and the sampler-size study.
//!
//! Trial `i` under hypothesis `h` draws all of its randomness from streams
//! keyed by `(master_seed, i, h)`, so batches are identical for any worker
//! count or schedule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detectors::{amplitude_stat, energy_stat, hybrid_glr_stat, matched_filter_stat, DetectorKind};
use crate::error::{param, Error, Result};
use crate::rng::{child_seed, StreamKey, StreamPurpose};
use crate::search::SamplerConfig;
use crate::signal::{add_awgn, sample_flip_config, synthesize_telegraph, SampledTrace, ScenarioConfig, TraceRole};

const TRIAL_LABEL: &str = "trials";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Spin absent: `y = v`.
    H0,
    /// Spin present: `y = s + v`.
    H1,
}

impl Hypothesis {
    fn index(self) -> u8 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

/// A detector together with any configuration it needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorSpec {
    MatchedFilter,
    Amplitude,
    Energy,
    HybridGlr(SamplerConfig),
}

impl DetectorSpec {
    pub fn kind(&self) -> DetectorKind {
        match self {
            DetectorSpec::MatchedFilter => DetectorKind::MatchedFilter,
            DetectorSpec::Amplitude => DetectorKind::Amplitude,
            DetectorSpec::Energy => DetectorKind::Energy,
            DetectorSpec::HybridGlr(_) => DetectorKind::HybridGlr,
        }
    }

    pub fn from_kind(kind: DetectorKind, sampler: SamplerConfig) -> Self {
        match kind {
            DetectorKind::MatchedFilter => DetectorSpec::MatchedFilter,
            DetectorKind::Amplitude => DetectorSpec::Amplitude,
            DetectorKind::Energy => DetectorSpec::Energy,
            DetectorKind::HybridGlr => DetectorSpec::HybridGlr(sampler),
        }
    }
}

/// How trials are scheduled. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; `None` uses the global pool. Without the `parallel`
    /// feature this runs sequentially.
    Parallel { workers: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { workers: None }
    }
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel {
                workers: Some(workers),
            }
        }
    }
}

/// Runs `f` for every index in `0..n` and returns results in index order.
/// The first failing index (in index order) determines the error.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let results: Vec<Result<T>> = match exec {
        Execution::Sequential => (0..n).map(&f).collect(),
        Execution::Parallel { workers } => parallel_map(n, workers, &f)?,
    };
    results.into_iter().collect()
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, workers: Option<usize>, f: &F) -> Result<Vec<Result<T>>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(f).collect::<Vec<_>>();
    match workers {
        None => Ok(run()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| param("workers", e.to_string()))?;
            Ok(pool.install(run))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, _workers: Option<usize>, f: &F) -> Result<Vec<Result<T>>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    Ok((0..n).map(f).collect())
}

/// Detector statistics for `n_trials` independent trials under each hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatch {
    pub scenario: ScenarioConfig,
    pub detector: DetectorSpec,
    pub n_trials: usize,
    pub master_seed: u64,
    pub statistics_h0: Vec<f64>,
    pub statistics_h1: Vec<f64>,
}

impl TrialBatch {
    pub fn validate(&self) -> Result<()> {
        if self.statistics_h0.is_empty() || self.statistics_h1.is_empty() {
            return Err(Error::Curve("batch has no statistics".into()));
        }
        if self.statistics_h0.iter().chain(&self.statistics_h1).any(|v| !v.is_finite()) {
            return Err(Error::Curve("batch contains non-finite statistics".into()));
        }
        Ok(())
    }
}

/// Simulates one observation and evaluates every detector on it.
fn trial_statistics(
    scenario: &ScenarioConfig,
    detectors: &[DetectorSpec],
    key: &StreamKey,
    index: usize,
    hypothesis: Hypothesis,
) -> Result<Vec<f64>> {
    let grid = &scenario.grid;
    let mut rng = key.stream(index, hypothesis.index(), StreamPurpose::Signal);
    // Under H0 the drawn configuration is only the matched filter's reference.
    let config = sample_flip_config(scenario.flip_rate, grid, &mut rng)?;
    let clean = synthesize_telegraph(&config, scenario.amplitude, grid)?;
    let base = match hypothesis {
        Hypothesis::H0 => SampledTrace::zeros(*grid, TraceRole::Noise),
        Hypothesis::H1 => clean.clone(),
    };
    let y = add_awgn(&base, scenario.noise_sigma(), &mut rng)?;

    detectors
        .iter()
        .map(|d| {
            let stat = match d {
                DetectorSpec::MatchedFilter => matched_filter_stat(&y, &clean)?,
                DetectorSpec::Amplitude => amplitude_stat(&y)?,
                DetectorSpec::Energy => energy_stat(&y)?,
                DetectorSpec::HybridGlr(cfg) => {
                    let mut srng = key.stream(index, hypothesis.index(), StreamPurpose::Sampler);
                    hybrid_glr_stat(&y, scenario, cfg, &mut srng)?
                }
            };
            Ok(stat.value)
        })
        .collect()
}

/// Runs several detectors on shared observations; one batch per detector.
///
/// Each detector's statistics equal those of [`run_trials`] with the same
/// seed, because the observation streams do not depend on the detector.
pub fn run_trials_multi(
    scenario: &ScenarioConfig,
    detectors: &[DetectorSpec],
    n_trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<TrialBatch>> {
    if n_trials == 0 {
        return Err(param("n_trials", "must be at least 1"));
    }
    scenario.validate()?;
    let key = StreamKey::new(master_seed, TRIAL_LABEL);
    let per_trial = map_indexed(n_trials, exec, |i| {
        let run = |h: Hypothesis| {
            trial_statistics(scenario, detectors, &key, i, h).map_err(|e| Error::Trial {
                index: i,
                hypothesis: h,
                source: Box::new(e),
            })
        };
        Ok((run(Hypothesis::H0)?, run(Hypothesis::H1)?))
    })?;

    Ok(detectors
        .iter()
        .enumerate()
        .map(|(d, spec)| TrialBatch {
            scenario: *scenario,
            detector: *spec,
            n_trials,
            master_seed,
            statistics_h0: per_trial.iter().map(|(h0, _)| h0[d]).collect(),
            statistics_h1: per_trial.iter().map(|(_, h1)| h1[d]).collect(),
        })
        .collect())
}

pub fn run_trials(
    scenario: &ScenarioConfig,
    detector: DetectorSpec,
    n_trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<TrialBatch> {
    let mut v = run_trials_multi(scenario, &[detector], n_trials, master_seed, exec)?;
    Ok(v.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pf: f64,
    pub pd: f64,
}

impl RocPoint {
    pub fn new(pf: f64, pd: f64) -> Self {
        Self { pf, pd }
    }
}

/// Empirical ROC with trial counts for binomial error bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub detector: DetectorKind,
    pub master_seed: u64,
    pub n_h0: usize,
    pub n_h1: usize,
}

impl RocCurve {
    /// Checks endpoints, monotonicity and range.
    pub fn validate(&self) -> Result<()> {
        let (first, last) = match (self.points.first(), self.points.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::Curve("curve has no points".into())),
        };
        if (first.pf, first.pd) != (0.0, 0.0) || (last.pf, last.pd) != (1.0, 1.0) {
            return Err(Error::Curve("curve must start at (0,0) and end at (1,1)".into()));
        }
        for p in &self.points {
            if !(0.0..=1.0).contains(&p.pf) || !(0.0..=1.0).contains(&p.pd) {
                return Err(Error::Curve(format!("point ({}, {}) outside the unit square", p.pf, p.pd)));
            }
        }
        if self.points.windows(2).any(|w| w[1].pf < w[0].pf || w[1].pd < w[0].pd) {
            return Err(Error::Curve("points are not monotone".into()));
        }
        Ok(())
    }
}

/// Trapezoidal area under a monotone point list.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].pf - w[0].pf) * (w[0].pd + w[1].pd) / 2.0)
        .sum()
}

/// Exact empirical ROC: the threshold sweeps every observed statistic value,
/// and a trial is declared "spin present" when its statistic is strictly
/// greater than the threshold.
pub fn empirical_roc(batch: &TrialBatch) -> Result<RocCurve> {
    batch.validate()?;
    let mut h0 = batch.statistics_h0.clone();
    let mut h1 = batch.statistics_h1.clone();
    h0.sort_unstable_by(|a, b| b.total_cmp(a));
    h1.sort_unstable_by(|a, b| b.total_cmp(a));
    let (n0, n1) = (h0.len(), h1.len());

    let mut points = vec![RocPoint::new(0.0, 0.0)];
    let (mut i, mut j) = (0, 0);
    while i < n0 || j < n1 {
        // Next threshold: the largest value not yet passed.
        let eta = match (h0.get(i), h1.get(j)) {
            (Some(&a), Some(&b)) => a.max(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        let point = RocPoint::new(i as f64 / n0 as f64, j as f64 / n1 as f64);
        if points.last() != Some(&point) {
            points.push(point);
        }
        while i < n0 && h0[i] >= eta {
            i += 1;
        }
        while j < n1 && h1[j] >= eta {
            j += 1;
        }
    }
    let end = RocPoint::new(1.0, 1.0);
    if points.last() != Some(&end) {
        points.push(end);
    }

    Ok(RocCurve {
        auc: trapezoid_auc(&points),
        points,
        detector: batch.detector.kind(),
        master_seed: batch.master_seed,
        n_h0: n0,
        n_h1: n1,
    })
}

/// Detection probability at the largest achievable false-alarm rate `<= alpha`.
pub fn pd_at_pf(curve: &RocCurve, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    curve
        .points
        .iter()
        .filter(|p| p.pf <= alpha)
        .max_by(|a, b| a.pf.total_cmp(&b.pf).then(a.pd.total_cmp(&b.pd)))
        .map(|p| p.pd)
        .ok_or_else(|| Error::Curve("curve has no point at P_F = 0".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub snr_db: f64,
    pub pd: f64,
    pub n_trials: usize,
}

/// `P_D` against SNR at a fixed false-alarm level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub alpha: f64,
    pub flip_rate: f64,
    pub detector: DetectorKind,
    pub entries: Vec<PowerPoint>,
}

/// Seed for one SNR grid point, keyed by the SNR value itself.
pub fn snr_seed(master_seed: u64, snr_db: f64) -> u64 {
    child_seed(master_seed, "snr", snr_db.to_bits())
}

/// Power curves for several detectors; each SNR point shares observations
/// across detectors and gets its own seed.
pub fn power_curves(
    template: &ScenarioConfig,
    snr_grid: &[f64],
    detectors: &[DetectorSpec],
    alpha: f64,
    n_trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<PowerCurve>> {
    if snr_grid.is_empty() {
        return Err(param("snr_grid", "must not be empty"));
    }
    if snr_grid.iter().any(|s| !s.is_finite()) {
        return Err(param("snr_grid", "values must be finite"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(param("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let mut grid = snr_grid.to_vec();
    grid.sort_unstable_by(f64::total_cmp);
    grid.dedup();

    let mut curves: Vec<PowerCurve> = detectors
        .iter()
        .map(|d| PowerCurve {
            alpha,
            flip_rate: template.flip_rate,
            detector: d.kind(),
            entries: Vec::with_capacity(grid.len()),
        })
        .collect();
    for &snr in &grid {
        let scenario = template.with_snr_db(snr);
        let batches = run_trials_multi(&scenario, detectors, n_trials, snr_seed(master_seed, snr), exec)?;
        for (curve, batch) in curves.iter_mut().zip(&batches) {
            let roc = empirical_roc(batch)?;
            curve.entries.push(PowerPoint {
                snr_db: snr,
                pd: pd_at_pf(&roc, alpha)?,
                n_trials,
            });
        }
    }
    Ok(curves)
}

pub fn power_curve(
    template: &ScenarioConfig,
    snr_grid: &[f64],
    detector: DetectorSpec,
    alpha: f64,
    n_trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<PowerCurve> {
    let mut v = power_curves(template, snr_grid, &[detector], alpha, n_trials, master_seed, exec)?;
    Ok(v.remove(0))
}

/// SNR at which the curve first reaches `target_pd`, interpolating linearly
/// between the bracketing grid points.
pub fn snr_at_pd(curve: &PowerCurve, target_pd: f64) -> Result<f64> {
    let e = &curve.entries;
    if let Some(hit) = e.iter().find(|p| p.pd == target_pd) {
        return Ok(hit.snr_db);
    }
    for w in e.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.pd < target_pd && target_pd < b.pd {
            let frac = (target_pd - a.pd) / (b.pd - a.pd);
            return Ok(a.snr_db + frac * (b.snr_db - a.snr_db));
        }
    }
    let min = e.iter().map(|p| p.pd).fold(f64::INFINITY, f64::min);
    let max = e.iter().map(|p| p.pd).fold(f64::NEG_INFINITY, f64::max);
    Err(Error::NotBracketed {
        target: target_pd,
        min,
        max,
    })
}

/// Hybrid-detector ROC for each sampler size, all on the same master seed.
///
/// Sampler streams do not depend on the sample count, so a larger run
/// visits a superset of a smaller run's candidates in every trial.
pub fn gibbs_study(
    scenario: &ScenarioConfig,
    base: SamplerConfig,
    sample_counts: &[usize],
    n_trials: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<(usize, TrialBatch, RocCurve)>> {
    if sample_counts.is_empty() {
        return Err(param("samples", "need at least one sampler size"));
    }
    let specs: Vec<DetectorSpec> = sample_counts
        .iter()
        .map(|&samples| DetectorSpec::HybridGlr(SamplerConfig { samples, ..base }))
        .collect();
    let batches = run_trials_multi(scenario, &specs, n_trials, master_seed, exec)?;
    sample_counts
        .iter()
        .zip(batches)
        .map(|(&n, batch)| {
            let roc = empirical_roc(&batch)?;
            Ok((n, batch, roc))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{NoiseLevel, SampleGrid};

    fn hand_batch(h0: Vec<f64>, h1: Vec<f64>) -> TrialBatch {
        let grid = SampleGrid::new(1.0, 0.1).unwrap();
        TrialBatch {
            scenario: ScenarioConfig::new(1.0, 0.0, grid, NoiseLevel::Sigma(1.0)).unwrap(),
            detector: DetectorSpec::Energy,
            n_trials: h0.len(),
            master_seed: 0,
            statistics_h0: h0,
            statistics_h1: h1,
        }
    }

    fn pts(c: &RocCurve) -> Vec<(f64, f64)> {
        c.points.iter().map(|p| (p.pf, p.pd)).collect()
    }

    #[test]
    fn four_point_roc() {
        let roc = empirical_roc(&hand_batch(vec![1.0, 3.0], vec![2.0, 4.0])).unwrap();
        assert_eq!(pts(&roc), vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]);
        assert_eq!(roc.auc, 0.75);
        roc.validate().unwrap();
        assert_eq!(pd_at_pf(&roc, 0.5).unwrap(), 1.0);
        assert_eq!(pd_at_pf(&roc, 1.0).unwrap(), 1.0);
        assert_eq!(pd_at_pf(&roc, 0.0).unwrap(), 0.5);
        assert_eq!(pd_at_pf(&roc, 0.49).unwrap(), 0.5);
        assert!(pd_at_pf(&roc, 1.5).is_err());
    }

    #[test]
    fn perfect_separation() {
        let roc = empirical_roc(&hand_batch(vec![0.1, 0.2, 0.3], vec![1.0, 2.0])).unwrap();
        assert!(pts(&roc).contains(&(0.0, 1.0)));
        assert_eq!(roc.auc, 1.0);
    }

    #[test]
    fn ties_across_hypotheses_give_diagonal() {
        let roc = empirical_roc(&hand_batch(vec![1.0, 1.0], vec![1.0, 1.0])).unwrap();
        assert_eq!(pts(&roc), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc.auc, 0.5);
    }

    #[test]
    fn empty_and_nonfinite_batches_rejected() {
        assert!(empirical_roc(&hand_batch(vec![], vec![1.0])).is_err());
        assert!(empirical_roc(&hand_batch(vec![f64::NAN], vec![1.0])).is_err());
    }

    #[test]
    fn snr_interpolation() {
        let curve = |entries: &[(f64, f64)]| PowerCurve {
            alpha: 0.1,
            flip_rate: 1.0,
            detector: DetectorKind::Energy,
            entries: entries
                .iter()
                .map(|&(snr_db, pd)| PowerPoint { snr_db, pd, n_trials: 10 })
                .collect(),
        };
        assert_eq!(snr_at_pd(&curve(&[(-30.0, 0.6), (-28.0, 1.0)]), 0.8).unwrap(), -29.0);
        assert_eq!(snr_at_pd(&curve(&[(-31.0, 0.2), (-30.0, 0.8), (-28.0, 1.0)]), 0.8).unwrap(), -30.0);
        match snr_at_pd(&curve(&[(-31.0, 0.2), (-30.0, 0.5)]), 0.8) {
            Err(Error::NotBracketed { min, max, .. }) => assert_eq!((min, max), (0.2, 0.5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn map_indexed_reports_first_error_in_index_order() {
        for exec in [Execution::Sequential, Execution::with_workers(4)] {
            let r: Result<Vec<usize>> = map_indexed(100, exec, |i| {
                if i % 30 == 29 {
                    Err(param("i", format!("{i}")))
                } else {
                    Ok(i)
                }
            });
            match r {
                Err(Error::Parameter { reason, .. }) => assert_eq!(reason, "29"),
                other => panic!("{other:?}"),
            }
        }
    }
}
