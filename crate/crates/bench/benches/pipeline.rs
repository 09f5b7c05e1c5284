use criterion::{criterion_group, criterion_main, Criterion};

use s3curv::critical::find_critical_points;
use s3curv::degree::{Analysis, AnalysisOptions};
use s3curv::geometry::SpherePoint;
use s3curv::invariants::{compute_a0, compute_a2, InvariantOptions};
use s3curv::problem::builtin_spec;
use s3curv::pv::PvOptions;
use s3curv::reduction::ReducedProblem;
use s3curv_bench::at_e2;

fn invariants(c: &mut Criterion) {
    let opts = InvariantOptions::default();
    let (k2, rec) = at_e2("k2");
    c.bench_function("a2 at E2 (K2)", |b| b.iter(|| compute_a2(&k2, &rec, &opts).unwrap()));
    c.bench_function("a0 at E2 (K2)", |b| b.iter(|| compute_a0(&k2, &rec, &opts).unwrap()));
    let (bump, rec) = at_e2("k2_plus_bump");
    c.bench_function("a0 at E2 (K2 + bump)", |b| b.iter(|| compute_a0(&bump, &rec, &opts).unwrap()));
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    let k1 = builtin_spec("k1").unwrap();
    g.bench_function("critical points (K1, 512 starts)", |b| b.iter(|| find_critical_points(&k1, 512, 0).unwrap()));
    let pert = builtin_spec("perturbed_s0.01").unwrap();
    g.bench_function("degree analysis (perturbed, s = 0.01)", |b| b.iter(|| Analysis::run(&pert, &AnalysisOptions::default()).unwrap()));
    let spec = builtin_spec("perturbed_bump").unwrap();
    let red = ReducedProblem::new(&spec, &SpherePoint::basis(2), 0.3, 0, PvOptions::default()).unwrap();
    g.bench_function("curve point s(mu = 5e-3)", |b| b.iter(|| red.solve_s(5e-3, 6.8e-3).unwrap()));
    g.finish();
}

criterion_group!(benches, invariants, search);
criterion_main!(benches);
