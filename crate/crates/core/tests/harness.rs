use mrfm_detect::harness::{
    empirical_roc, pd_at_pf, power_curves, run_trials, run_trials_multi, snr_at_pd, PowerPoint, RocPoint,
};
use mrfm_detect::output::write_roc_csv;
use mrfm_detect::rng::SimRng;
use mrfm_detect::search::SamplerConfig;
use mrfm_detect::signal::{NoiseLevel, SampleGrid};
use mrfm_detect::stats::{binomial_std, std_dev};
use mrfm_detect::{DetectorKind, DetectorSpec, Error, Execution, PowerCurve, ScenarioConfig, TrialBatch};
use rand::{Rng, SeedableRng};

const DW: f64 = 0.928;

fn coarse(rate: f64, noise: NoiseLevel) -> ScenarioConfig {
    ScenarioConfig::new(DW, rate, SampleGrid::new(3.0, 5e-3).unwrap(), noise).unwrap()
}

fn hand_batch(h0: Vec<f64>, h1: Vec<f64>) -> TrialBatch {
    TrialBatch {
        scenario: coarse(0.0, NoiseLevel::Sigma(1.0)),
        detector: DetectorSpec::Energy,
        n_trials: h0.len(),
        master_seed: 0,
        statistics_h0: h0,
        statistics_h1: h1,
    }
}

#[test]
fn noiseless_constant_signal_gives_exact_amplitude() {
    let sc = coarse(0.0, NoiseLevel::Sigma(0.0));
    let b = run_trials(&sc, DetectorSpec::Amplitude, 50, 1, Execution::Sequential).unwrap();
    assert!(b.statistics_h1.iter().all(|&v| (v - DW).abs() < 1e-12));
    assert!(b.statistics_h0.iter().all(|&v| v == 0.0));
}

#[test]
fn trials_are_reproducible_and_worker_independent() {
    let sc = coarse(3.0, NoiseLevel::SnrDb(-15.0));
    let specs = [DetectorSpec::MatchedFilter, DetectorSpec::Energy, DetectorSpec::HybridGlr(SamplerConfig::prior_only(50))];
    let seq = run_trials_multi(&sc, &specs, 40, 11, Execution::Sequential).unwrap();
    let again = run_trials_multi(&sc, &specs, 40, 11, Execution::Sequential).unwrap();
    let par = run_trials_multi(&sc, &specs, 40, 11, Execution::with_workers(8)).unwrap();
    assert_eq!(seq, again);
    assert_eq!(seq, par);
    let other = run_trials_multi(&sc, &specs, 40, 12, Execution::Sequential).unwrap();
    assert_ne!(seq[0].statistics_h1, other[0].statistics_h1);
}

#[test]
fn multi_detector_run_matches_single_runs() {
    let sc = coarse(2.0, NoiseLevel::SnrDb(-12.0));
    let specs = [DetectorSpec::Amplitude, DetectorSpec::HybridGlr(SamplerConfig::prior_only(30))];
    let multi = run_trials_multi(&sc, &specs, 25, 5, Execution::Sequential).unwrap();
    for (spec, batch) in specs.iter().zip(&multi) {
        assert_eq!(&run_trials(&sc, *spec, 25, 5, Execution::Sequential).unwrap(), batch);
    }
}

#[test]
fn amplitude_h0_spread() {
    let sc = coarse(1.0, NoiseLevel::Sigma(2.0));
    let b = run_trials(&sc, DetectorSpec::Amplitude, 10_000, 3, Execution::default()).unwrap();
    // |mean| of N(0, σ²/M) is half-normal with std σ/√M · √(1 − 2/π).
    let expected = 2.0 / 600f64.sqrt() * (1.0 - 2.0 / std::f64::consts::PI).sqrt();
    let sd = std_dev(&b.statistics_h0);
    assert!((sd - expected).abs() / expected < 0.05, "{sd} vs {expected}");
}

#[test]
fn power_saturates_at_high_snr() {
    let grid = SampleGrid::new(3.0, 5e-4).unwrap();
    let sc = ScenarioConfig::new(DW, 1.0, grid, NoiseLevel::SnrDb(0.0)).unwrap();
    let specs = [
        DetectorSpec::MatchedFilter,
        DetectorSpec::Amplitude,
        DetectorSpec::Energy,
        DetectorSpec::HybridGlr(SamplerConfig::prior_only(20)),
    ];
    let curves = power_curves(&sc, &[20.0], &specs, 0.1, 2000, 4, Execution::default()).unwrap();
    for c in &curves {
        assert!(c.entries[0].pd >= 0.99, "{:?}: {}", c.detector, c.entries[0].pd);
    }
}

#[test]
fn power_falls_to_alpha_at_low_snr() {
    let sc = coarse(1.0, NoiseLevel::SnrDb(0.0));
    let alpha = 0.1;
    let n = 2000;
    let specs = [DetectorSpec::MatchedFilter, DetectorSpec::Energy, DetectorSpec::Amplitude];
    let curves = power_curves(&sc, &[-60.0], &specs, alpha, n, 4, Execution::default()).unwrap();
    for c in &curves {
        // Threshold from an H0 sample, P_D from an independent H1 sample.
        let tol = 3.0 * 2f64.sqrt() * binomial_std(alpha, n);
        assert!((c.entries[0].pd - alpha).abs() <= tol, "{:?}: {}", c.detector, c.entries[0].pd);
    }
}

#[test]
fn identical_distributions_give_auc_one_half() {
    let mut rng = SimRng::seed_from_u64(9);
    let n = 4000;
    let h0: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let h1: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let roc = empirical_roc(&hand_batch(h0, h1)).unwrap();
    let nf = n as f64;
    let se = ((2.0 * nf + 1.0) / (12.0 * nf * nf)).sqrt();
    assert!((roc.auc - 0.5).abs() < 3.0 * se, "{}", roc.auc);
}

#[test]
fn four_point_roc_and_csv() {
    let roc = empirical_roc(&hand_batch(vec![1.0, 3.0], vec![2.0, 4.0])).unwrap();
    let expected = [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)].map(|(pf, pd)| RocPoint::new(pf, pd));
    assert_eq!(roc.points, expected);
    assert_eq!(roc.auc, 0.75);
    assert_eq!(pd_at_pf(&roc, 0.5).unwrap(), 1.0);
    assert_eq!(pd_at_pf(&roc, 0.49).unwrap(), 0.5);

    let mut buf = Vec::new();
    write_roc_csv(&roc, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "pf,pd");
    assert_eq!(lines[1], "0.000000,0.000000");
    assert_eq!(lines[5], "1.000000,1.000000");
}

#[test]
fn energy_roc_does_not_depend_on_flip_rate() {
    let n = 3000;
    let pd = |rate| {
        let b = run_trials(&coarse(rate, NoiseLevel::SnrDb(-14.0)), DetectorSpec::Energy, n, 21, Execution::default())
            .unwrap();
        pd_at_pf(&empirical_roc(&b).unwrap(), 0.1).unwrap()
    };
    let (a, b) = (pd(1.0), pd(10.0));
    let tol = 3.0 * (binomial_std(a, n).powi(2) + binomial_std(b, n).powi(2)).sqrt();
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn matched_filter_dominates_and_amplitude_degrades_with_flip_rate() {
    let n = 1000;
    let grid = SampleGrid::new(3.0, 5e-4).unwrap();
    let run = |rate| {
        let sc = ScenarioConfig::new(DW, rate, grid, NoiseLevel::SnrDb(-20.0)).unwrap();
        let specs = [DetectorSpec::MatchedFilter, DetectorSpec::Amplitude, DetectorSpec::Energy];
        run_trials_multi(&sc, &specs, n, 31, Execution::default())
            .unwrap()
            .iter()
            .map(|b| pd_at_pf(&empirical_roc(b).unwrap(), 0.1).unwrap())
            .collect::<Vec<_>>()
    };
    let slow = run(1.0);
    let fast = run(10.0);
    let sd = |p: f64| binomial_std(p, n);
    for pds in [&slow, &fast] {
        assert!(pds[0] + 3.0 * sd(pds[0]) >= pds[1] && pds[0] + 3.0 * sd(pds[0]) >= pds[2], "{pds:?}");
    }
    let gap = slow[1] - fast[1];
    assert!(gap > 3.0 * (sd(slow[1]).powi(2) + sd(fast[1]).powi(2)).sqrt(), "{slow:?} {fast:?}");
}

#[test]
fn snr_at_pd_interpolates_and_reports_unbracketed_targets() {
    let curve = PowerCurve {
        alpha: 0.1,
        flip_rate: 1.0,
        detector: DetectorKind::Energy,
        entries: vec![
            PowerPoint { snr_db: -20.0, pd: 0.2, n_trials: 10 },
            PowerPoint { snr_db: -18.0, pd: 0.6, n_trials: 10 },
            PowerPoint { snr_db: -16.0, pd: 1.0, n_trials: 10 },
        ],
    };
    assert_eq!(snr_at_pd(&curve, 0.8).unwrap(), -17.0);
    assert_eq!(snr_at_pd(&curve, 0.6).unwrap(), -18.0);
    assert!(matches!(snr_at_pd(&curve, 0.1), Err(Error::NotBracketed { .. })));
}

#[test]
fn invalid_inputs_are_rejected() {
    let sc = coarse(1.0, NoiseLevel::Sigma(1.0));
    assert!(run_trials(&sc, DetectorSpec::Energy, 0, 1, Execution::Sequential).is_err());
    let bad = SamplerConfig { samples: 0, ..SamplerConfig::default() };
    assert!(run_trials(&sc, DetectorSpec::HybridGlr(bad), 3, 1, Execution::Sequential).is_err());
    // Zero noise makes the hybrid likelihood degenerate; the error names the trial.
    let quiet = coarse(1.0, NoiseLevel::Sigma(0.0));
    let err = run_trials(&quiet, DetectorSpec::HybridGlr(SamplerConfig::prior_only(5)), 3, 1, Execution::Sequential)
        .unwrap_err();
    assert!(matches!(err, Error::Trial { index: 0, .. }), "{err}");
    assert!(empirical_roc(&hand_batch(vec![], vec![1.0])).is_err());
    assert!(empirical_roc(&hand_batch(vec![f64::NAN], vec![1.0])).is_err());
}
