//! Scalar test statistics computed from one observation trace.
//!
//! Thresholding is left to the harness; every statistic here is the quantity
//! compared against `η`, larger meaning "more evidence of a spin".

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::search::{search_max, SamplerConfig, SearchResult};
use crate::signal::{FlipConfig, SampledTrace, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    MatchedFilter,
    Amplitude,
    Energy,
    HybridGlr,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 4] = [
        DetectorKind::MatchedFilter,
        DetectorKind::Amplitude,
        DetectorKind::Energy,
        DetectorKind::HybridGlr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::MatchedFilter => "matched_filter",
            DetectorKind::Amplitude => "amplitude",
            DetectorKind::Energy => "energy",
            DetectorKind::HybridGlr => "hybrid_glr",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matched_filter" | "mf" => Ok(DetectorKind::MatchedFilter),
            "amplitude" => Ok(DetectorKind::Amplitude),
            "energy" => Ok(DetectorKind::Energy),
            "hybrid_glr" | "hybrid" | "glr" => Ok(DetectorKind::HybridGlr),
            other => Err(param("detector", format!("unknown detector `{other}`"))),
        }
    }
}

/// Extra output of the hybrid detector.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridMetadata {
    pub best_config: FlipConfig,
    pub candidates_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorStatistic {
    pub kind: DetectorKind,
    pub value: f64,
    pub hybrid: Option<HybridMetadata>,
}

impl DetectorStatistic {
    fn plain(kind: DetectorKind, value: f64) -> Self {
        Self {
            kind,
            value,
            hybrid: None,
        }
    }

    /// Wraps a finished search as a hybrid statistic.
    pub fn from_search(result: SearchResult) -> Self {
        Self {
            kind: DetectorKind::HybridGlr,
            value: result.best_objective,
            hybrid: Some(HybridMetadata {
                candidates_evaluated: result.objective_trace.len(),
                best_config: result.best_config,
            }),
        }
    }
}

/// Omniscient correlator `(1/M)·Σ y_n s_n` against the true signal.
pub fn matched_filter_stat(y: &SampledTrace, s_true: &SampledTrace) -> Result<DetectorStatistic> {
    if y.grid() != s_true.grid() || y.len() != s_true.len() {
        return Err(Error::Dimension {
            expected: s_true.len(),
            got: y.len(),
        });
    }
    let dot: f64 = y.values().iter().zip(s_true.values()).map(|(a, b)| a * b).sum();
    Ok(DetectorStatistic::plain(DetectorKind::MatchedFilter, dot / y.len() as f64))
}

/// `|(1/M)·Σ y_n|`.
pub fn amplitude_stat(y: &SampledTrace) -> Result<DetectorStatistic> {
    if y.is_empty() {
        return Err(param("y", "empty trace"));
    }
    let mean = y.values().iter().sum::<f64>() / y.len() as f64;
    Ok(DetectorStatistic::plain(DetectorKind::Amplitude, mean.abs()))
}

/// `T_s·Σ y_n²`.
pub fn energy_stat(y: &SampledTrace) -> Result<DetectorStatistic> {
    if y.is_empty() {
        return Err(param("y", "empty trace"));
    }
    let sum_sq: f64 = y.values().iter().map(|v| v * v).sum();
    Ok(DetectorStatistic::plain(DetectorKind::Energy, y.grid().sample_period() * sum_sq))
}

/// Hybrid Bayes/GLR statistic: the polarity-averaged log-likelihood ratio
/// maximized over flip configurations visited by the sampler.
pub fn hybrid_glr_stat<R: Rng + ?Sized>(
    y: &SampledTrace,
    scenario: &ScenarioConfig,
    sampler: &SamplerConfig,
    rng: &mut R,
) -> Result<DetectorStatistic> {
    let result = search_max(y, scenario, sampler, rng)?;
    Ok(DetectorStatistic::from_search(result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use crate::signal::{synthesize_telegraph, NoiseLevel, Polarity, SampleGrid, TraceRole};
    use rand::SeedableRng;

    fn grid() -> SampleGrid {
        SampleGrid::new(3.0, 5e-4).unwrap()
    }

    #[test]
    fn matched_filter_examples() {
        let g = grid();
        let c = FlipConfig::new(vec![0.4, 1.9], Polarity::Minus, 3.0).unwrap();
        let s = synthesize_telegraph(&c, 0.928, &g).unwrap();
        let v = matched_filter_stat(&s, &s).unwrap().value;
        assert!((v - 0.861184).abs() < 1e-12);
        let zero = SampledTrace::zeros(g, TraceRole::Observation);
        assert_eq!(matched_filter_stat(&zero, &s).unwrap().value, 0.0);
        let neg = s.scaled(-1.0);
        assert!((matched_filter_stat(&neg, &s).unwrap().value + 0.861184).abs() < 1e-12);

        let other = SampledTrace::zeros(SampleGrid::new(1.0, 5e-4).unwrap(), TraceRole::Observation);
        assert!(matches!(matched_filter_stat(&other, &s), Err(Error::Dimension { .. })));
    }

    #[test]
    fn amplitude_examples() {
        let g = grid();
        let c = SampledTrace::new(g, vec![-0.7; 6000], TraceRole::Observation).unwrap();
        assert!((amplitude_stat(&c).unwrap().value - 0.7).abs() < 1e-12);
        let half = FlipConfig::new(vec![1.5], Polarity::Plus, 3.0).unwrap();
        let s = synthesize_telegraph(&half, 0.928, &g).unwrap();
        assert!(amplitude_stat(&s).unwrap().value <= 0.928 / 6000.0);
    }

    #[test]
    fn energy_examples() {
        let g = grid();
        let zero = SampledTrace::zeros(g, TraceRole::Observation);
        assert_eq!(energy_stat(&zero).unwrap().value, 0.0);
        for times in [vec![], vec![0.1], vec![0.3, 1.0, 2.2, 2.999]] {
            let c = FlipConfig::new(times, Polarity::Minus, 3.0).unwrap();
            let s = synthesize_telegraph(&c, 0.928, &g).unwrap();
            assert!((energy_stat(&s).unwrap().value - 2.583552).abs() < 1e-9);
        }
    }

    #[test]
    fn hybrid_on_zero_observation_is_constant() {
        let g = SampleGrid::new(3.0, 0.01).unwrap();
        let sc = ScenarioConfig::new(0.928, 1.0, g, NoiseLevel::Sigma(2.0)).unwrap();
        let y = SampledTrace::zeros(g, TraceRole::Observation);
        let mut rng = SimRng::seed_from_u64(9);
        let st = hybrid_glr_stat(&y, &sc, &SamplerConfig::prior_only(50), &mut rng).unwrap();
        let expected = -(300.0 * 0.928 * 0.928) / (2.0 * 4.0);
        assert!((st.value - expected).abs() < 1e-12);
        assert_eq!(st.hybrid.unwrap().candidates_evaluated, 50);
    }

    #[test]
    fn hybrid_rejects_noiseless_scenario() {
        let g = SampleGrid::new(3.0, 0.01).unwrap();
        let sc = ScenarioConfig::new(0.928, 1.0, g, NoiseLevel::Sigma(0.0)).unwrap();
        let y = SampledTrace::zeros(g, TraceRole::Observation);
        let mut rng = SimRng::seed_from_u64(9);
        assert!(matches!(
            hybrid_glr_stat(&y, &sc, &SamplerConfig::prior_only(5), &mut rng),
            Err(Error::DegenerateLikelihood)
        ));
    }

    #[test]
    fn kind_parsing() {
        for k in DetectorKind::ALL {
            assert_eq!(k.as_str().parse::<DetectorKind>().unwrap(), k);
        }
        assert!("bogus".parse::<DetectorKind>().is_err());
    }
}
