use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gossipcalc_core::comp::{run_comp, CompInputs, CompOptions};
use gossipcalc_core::conductance::{conductance_exact, spectral_gap};
use gossipcalc_core::graph::{build_complete, build_grid, max_degree_matrix};
use gossipcalc_core::rng::{stream_rng, Stream};
use gossipcalc_core::spread::{run_until, ContactSampler, SpreadState};
use gossipcalc_core::{MinimaPath, SimClock, SyncSemantics, TimeModel};

fn conductance(c: &mut Criterion) {
    let mut group = c.benchmark_group("conductance");
    for side in [3, 4] {
        let p = max_degree_matrix(&build_grid(2, side).unwrap());
        group.bench_with_input(BenchmarkId::new("enumeration", side * side), &p, |b, p| {
            b.iter(|| conductance_exact(p).unwrap())
        });
    }
    let p = max_degree_matrix(&build_grid(2, 32).unwrap());
    group.bench_function("spectral_gap/1024", |b| b.iter(|| spectral_gap(&p).unwrap()));
    group.finish();
}

fn spreading(c: &mut Criterion) {
    let mut group = c.benchmark_group("spread_complete_async");
    for n in [64, 256, 1024] {
        let sampler = ContactSampler::new(&max_degree_matrix(&build_complete(n).unwrap()));
        let mut seed = 0;
        group.bench_with_input(BenchmarkId::from_parameter(n), &sampler, |b, sampler| {
            b.iter(|| {
                seed += 1;
                let mut state = SpreadState::new(n);
                let mut clock = SimClock::seeded(TimeModel::Async, n, seed);
                let mut rng = stream_rng(seed, Stream::Contact);
                run_until(
                    &mut state,
                    &mut clock,
                    sampler,
                    &mut rng,
                    SyncSemantics::Serialized,
                    SpreadState::spreading_complete,
                    |_, _| {},
                )
            })
        });
    }
    group.finish();
}

fn comp(c: &mut Criterion) {
    let mut group = c.benchmark_group("comp");
    let g = build_grid(2, 8).unwrap();
    let p = max_degree_matrix(&g);
    let inputs = CompInputs::new(vec![1.0; g.n()], 1107).unwrap();
    for path in [MinimaPath::Oracle, MinimaPath::Spread] {
        let opts = CompOptions { minima_path: path, ..CompOptions::default() };
        group.bench_function(format!("{path:?}/grid-64/r-1107"), |b| {
            b.iter(|| run_comp(&g, &p, &inputs, &opts, 3).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, conductance, spreading, comp);
criterion_main!(benches);
