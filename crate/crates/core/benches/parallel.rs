use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use regsat::fixtures;
use regsat::model::normal_form::verify_normal_form;
use regsat::model::saturation::GridSettings;
use regsat::par::Exec;
use regsat::submanifold::regularity_scan;

const PATHS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn jacobi(c: &mut Criterion) {
    let field = fixtures::scene("so3-plane").unwrap().field().unwrap();
    let mut g = c.benchmark_group("jacobi_1000");
    for (name, exec) in PATHS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| field.certify_jacobi(1000, 0, exec).unwrap())
        });
    }
    g.finish();
}

fn regularity(c: &mut Criterion) {
    let s = fixtures::scene("cubic-graph").unwrap();
    let (field, chart) = (s.field().unwrap(), s.chart().unwrap());
    let mut g = c.benchmark_group("regularity_scan");
    for (name, exec) in PATHS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| regularity_scan(&field, &chart, &[21, 21], 0, 1e-8, exec).unwrap())
        });
    }
    g.finish();
}

fn normal_form(c: &mut Criterion) {
    let s = fixtures::scene("transversal-ray").unwrap();
    let (field, chart, spec) = (s.field().unwrap(), s.chart().unwrap(), s.complement_spec().unwrap());
    let grid = s.model_grid().unwrap();
    let mut g = c.benchmark_group("normal_form_grid");
    g.sample_size(10);
    for (name, exec) in PATHS {
        let settings = GridSettings {
            steps: 256,
            xi_radius: 0.05,
            xi_per_axis: 5,
            tol: 1e-8,
            seed: 0,
            exec,
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_normal_form(&field, &chart, &spec, &grid, &settings).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, jacobi, regularity, normal_form);
criterion_main!(benches);
