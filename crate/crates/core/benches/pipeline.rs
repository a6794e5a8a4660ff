//! Parallel vs sequential comparison of the pipeline's hot paths. The
//! rayon path and the plain loop are bit-identical; these benches show
//! what the toggle buys on this machine.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use silomatch_core::exec;
use silomatch_core::fabrication;
use silomatch_core::graph::RelatednessGraph;
use silomatch_core::neural::{self, Dims, EdgeBatch, ModelParams};
use silomatch_core::profiling::{self, Standardizer, FEATURE_LEN};
use silomatch_core::sampling::{SamplerConfig, Strategy};
use silomatch_core::silo::Silo;
use silomatch_core::training;

struct Fixture {
    silos: Vec<Silo>,
    graphs: Vec<RelatednessGraph>,
    params: ModelParams,
    edges: EdgeBatch,
}

fn fixture() -> Fixture {
    let mut cfg = fabrication::default_scenario(42);
    cfg.rows_per_table = 120;
    let (silos, _) = fabrication::fabricate_scenario(&cfg).unwrap();

    let profiled: Vec<_> = silos.iter().map(profiling::profile_silo).collect();
    let std = Standardizer::fit_profiles(profiled.iter().flat_map(|p| p.profiles.values()))
        .unwrap();
    let maps = training::silo_feature_maps(&silos, &std).unwrap();
    let graphs = training::build_graphs(&silos, &maps).unwrap();

    let mut params = neural::init_params(Dims::new(FEATURE_LEN, 64, 64), 1).unwrap();
    params.standardizer = std;

    let sampler = SamplerConfig::new(Strategy::Ns3, 9);
    let (pos, neg) = training::collect_edges(&graphs, &sampler).unwrap();
    let refs: Vec<&RelatednessGraph> = graphs.iter().collect();
    let edges = training::global_edge_batch(&refs, &pos, &neg);

    Fixture {
        silos,
        graphs,
        params,
        edges,
    }
}

fn modes() -> [(&'static str, bool); 2] {
    [("sequential", false), ("parallel", true)]
}

fn bench_profiling(c: &mut Criterion) {
    let fx = fixture();
    let mut group = c.benchmark_group("profile_silo");
    group.sample_size(10);
    for (label, par) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            exec::set_parallel(par);
            b.iter(|| profiling::profile_silo(&fx.silos[0]));
        });
    }
    group.finish();
    exec::set_parallel(true);
}

fn bench_forward(c: &mut Criterion) {
    let fx = fixture();
    let refs: Vec<&RelatednessGraph> = fx.graphs.iter().collect();
    let mut group = c.benchmark_group("sage_forward");
    group.sample_size(10);
    for (label, par) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            exec::set_parallel(par);
            b.iter(|| neural::sage_forward(&refs, &fx.params).unwrap());
        });
    }
    group.finish();
    exec::set_parallel(true);
}

fn bench_train_epoch(c: &mut Criterion) {
    let fx = fixture();
    let refs: Vec<&RelatednessGraph> = fx.graphs.iter().collect();
    let mut group = c.benchmark_group("backward_epoch");
    group.sample_size(10);
    for (label, par) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            exec::set_parallel(par);
            b.iter(|| neural::backward(&refs, &fx.params, &fx.edges).unwrap());
        });
    }
    group.finish();
    exec::set_parallel(true);
}

criterion_group!(benches, bench_profiling, bench_forward, bench_train_epoch);
criterion_main!(benches);
