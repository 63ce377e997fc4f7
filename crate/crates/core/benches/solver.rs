use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use multiunit_core::oracle::oracle_allocate_with;
use multiunit_core::{
    allocate_best, sweep, switching_schedule, EfficiencyCurve, Execution, Fleet, SolverOptions, Unit,
};

fn curves() -> Vec<EfficiencyCurve> {
    let c1 = EfficiencyCurve::with_default_cap(0.022, 0.0001375).unwrap();
    let c2 = EfficiencyCurve::with_default_cap(0.0287, 0.000233333).unwrap();
    let c3 = EfficiencyCurve::new(0.018, 0.00009, 150.0).unwrap();
    vec![c1, c2, c3]
}

fn fleet() -> Fleet {
    Fleet::new(curves().into_iter().enumerate().map(|(i, c)| Unit::new((i + 1).to_string(), c)).collect()).unwrap()
}

fn options(exec: Execution) -> SolverOptions {
    SolverOptions { execution: exec, ..SolverOptions::default() }
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_allocate(c: &mut Criterion) {
    let curves = curves();
    let mut g = c.benchmark_group("allocate_best/3 units");
    for (name, exec) in MODES {
        let opts = options(exec);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| allocate_best(black_box(&curves), black_box(250.0), &opts).unwrap())
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let fleet = fleet();
    let mut g = c.benchmark_group("sweep/3 units, 100 rows");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = options(exec);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sweep(&fleet, 0.0, 400.0, 4.0, &opts).unwrap())
        });
    }
    g.finish();
}

fn bench_schedule(c: &mut Criterion) {
    let fleet = fleet();
    let mut g = c.benchmark_group("switching_schedule/3 units");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = options(exec);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| switching_schedule(&fleet, 1.0, 400.0, 2.0, &opts).unwrap())
        });
    }
    g.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let curves = curves();
    let mut g = c.benchmark_group("oracle/3 units, step p_t/1000");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| oracle_allocate_with(&curves, 250.0, 0.25, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_allocate, bench_sweep, bench_schedule, bench_oracle);
criterion_main!(benches);
