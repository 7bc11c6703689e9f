use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use csrminer::dataset::{CleanDataset, CleanOptions, ScalingMode};
use csrminer::evaluation::{evaluate, EvaluationOptions};
use csrminer::models::{ClassifierSpec, ModelKind};
use csrminer::scoring::EvaluationKind;
use csrminer::sensitivity::sensitivity_grid;
use csrminer::synth::{generate, paper_default_config};
use csrminer::Execution;

fn dataset(n: usize) -> CleanDataset {
    let mut cfg = paper_default_config(EvaluationKind::CustomerService);
    cfg.n_records = n;
    let (records, _) = generate(&cfg).expect("generator config is valid");
    let opts = CleanOptions {
        min_class_size: 10,
        ..CleanOptions::new(EvaluationKind::CustomerService)
    };
    CleanDataset::from_records(records, &opts, ScalingMode::TrainOnly)
        .expect("generated data cleans")
        .0
}

fn modes() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ]
}

fn bench_kfold(c: &mut Criterion) {
    let ds = dataset(2000);
    let specs = [ClassifierSpec::default_for(ModelKind::Cart)];
    let mut group = c.benchmark_group("cart_10_fold");
    group.sample_size(10);
    for (name, execution) in modes() {
        let opts = EvaluationOptions {
            execution,
            ..EvaluationOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| evaluate(&specs, &ds, opts).unwrap())
        });
    }
    group.finish();
}

fn bench_holdout(c: &mut Criterion) {
    let ds = dataset(2000);
    let specs = [
        ClassifierSpec::default_for(ModelKind::Linear),
        ClassifierSpec::default_for(ModelKind::Pnn),
    ];
    let mut group = c.benchmark_group("holdout_linear_pnn");
    group.sample_size(10);
    for (name, execution) in modes() {
        let opts = EvaluationOptions {
            execution,
            ..EvaluationOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| evaluate(&specs, &ds, opts).unwrap())
        });
    }
    group.finish();
}

fn bench_sensitivity(c: &mut Criterion) {
    let ds = dataset(2000);
    let specs = [ClassifierSpec::default_for(ModelKind::Linear)];
    let classes = ds.classes();
    let mut group = c.benchmark_group("sensitivity_linear");
    group.sample_size(10);
    for (name, execution) in modes() {
        let opts = EvaluationOptions {
            execution,
            ..EvaluationOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| sensitivity_grid(&specs, &ds, &classes, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_kfold, bench_holdout, bench_sensitivity);
criterion_main!(benches);
