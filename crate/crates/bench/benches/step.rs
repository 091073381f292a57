use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use pauc_bench::step_fixture;
use pauc_core::data::Sampler;
use pauc_core::objectives::Formulation;
use pauc_core::solver::asgda_step;
use pauc_core::timing::pairwise_step;

const SIZES: [usize; 4] = [64, 128, 256, 512];

fn instance_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("instance_step");
    for formulation in [Formulation::Surrogate, Formulation::Unbiased] {
        for b in SIZES {
            let mut fx = step_fixture(b, formulation).unwrap();
            group.throughput(Throughput::Elements(2 * b as u64));
            group.bench_with_input(BenchmarkId::new(formulation.to_string(), b), &b, |bench, _| {
                bench.iter(|| asgda_step(&mut fx.state, &fx.solver, &fx.objective, &fx.ds).unwrap())
            });
        }
    }
    group.finish();
}

fn pairwise_reference(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairwise_step");
    for b in SIZES {
        let fx = step_fixture(b, Formulation::Surrogate).unwrap();
        let mut theta = fx.state.tau.theta.clone();
        let mut sampler = Sampler::new(0);
        group.throughput(Throughput::Elements(2 * b as u64));
        group.bench_with_input(BenchmarkId::from_parameter(b), &b, |bench, &b| {
            bench.iter(|| {
                let batch = sampler.sample(&fx.ds, b, b).unwrap();
                pairwise_step(&mut theta, &batch, &fx.ds, 0.5, 0.1).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, instance_step, pairwise_reference);
criterion_main!(benches);
