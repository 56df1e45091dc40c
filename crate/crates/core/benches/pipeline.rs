use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ksat_core::analysis::{run_linearity, Experiment, ExperimentGrid};
use ksat_core::exec::Exec;
use ksat_core::glauber::{run_many, GlauberConfig};
use ksat_core::{classify, compute_marking, formula, ClassifierParams, MarkingParams};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sampling(c: &mut Criterion) {
    let f = formula::generate_random(4, 24, 1.0, 7).unwrap();
    let cls = classify(&f, &ClassifierParams::with_delta(1_000));
    let p = MarkingParams {
        desk: true,
        seed: 7,
        ..MarkingParams::default()
    };
    let m = compute_marking(&f, &cls, &p).unwrap();
    let cfg = GlauberConfig::desk(2, 20, 64, 1);
    let mut group = c.benchmark_group("run_many");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_many(&f, &m, &cfg, 512, exec).unwrap())
        });
    }
    group.finish();
}

fn linearity(c: &mut Criterion) {
    let grid = ExperimentGrid {
        experiment: Experiment::Linearity,
        ks: vec![5],
        ns: vec![5_000],
        alphas: vec![1.0],
        seeds: 16,
        base_seed: 1,
        output: None,
    };
    let mut group = c.benchmark_group("linearity");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_linearity(&grid, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sampling, linearity);
criterion_main!(benches);
