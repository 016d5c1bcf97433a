//! Sequential vs data-parallel trial execution.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mrfm_detect::harness::run_trials_multi;
use mrfm_detect::search::SamplerConfig;
use mrfm_detect::signal::{NoiseLevel, SampleGrid};
use mrfm_detect::{DetectorSpec, Execution, ScenarioConfig};

fn scenario() -> ScenarioConfig {
    ScenarioConfig::new(0.928, 1.0, SampleGrid::new(3.0, 5e-4).unwrap(), NoiseLevel::SnrDb(-20.0)).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel { workers: None })]
}

fn simple_detectors(c: &mut Criterion) {
    let sc = scenario();
    let specs = [DetectorSpec::MatchedFilter, DetectorSpec::Amplitude, DetectorSpec::Energy];
    let mut group = c.benchmark_group("simple_detectors_100_trials");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_trials_multi(black_box(&sc), &specs, 100, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn hybrid_search(c: &mut Criterion) {
    let sc = scenario().with_flip_rate(10.0);
    let specs = [DetectorSpec::HybridGlr(SamplerConfig::prior_only(1000))];
    let mut group = c.benchmark_group("hybrid_glr_20_trials_1000_samples");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_trials_multi(black_box(&sc), &specs, 20, 1, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simple_detectors, hybrid_search);
criterion_main!(benches);
