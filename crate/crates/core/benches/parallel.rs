//! Compares the data-parallel per-cascade stage against an explicit
//! sequential loop on the same workload: encode each cascade and extract
//! its baseline graph features.

use criterion::{criterion_group, criterion_main, Criterion};
use m4c_core::cascade::build_cascade;
use m4c_core::encode::{dfs_encode, rle_encode};
use m4c_core::graphstats::baseline_features;
use m4c_core::par::map_slice;
use m4c_core::synth::{generate_cascades, generate_follower_graph, GeneratorConfig};

fn workload() -> Vec<m4c_core::cascade::CascadeGraph> {
    let cfg = GeneratorConfig {
        seed: 7,
        user_count: 2000,
        cascades_per_class: 200,
        ..GeneratorConfig::default()
    };
    let fg = generate_follower_graph(&cfg).expect("follower graph");
    let cascades = generate_cascades(&fg, &cfg).expect("generator");
    cascades
        .iter()
        .map(|c| build_cascade(&fg, &c.events).expect("cascade"))
        .collect()
}

fn per_cascade(c: &m4c_core::cascade::CascadeGraph) -> (Vec<u32>, usize) {
    let code = dfs_encode(c).expect("encode");
    let runs = rle_encode(&code).runs().to_vec();
    let dims = baseline_features(c).map(|f| f.to_vec().len()).unwrap_or(0);
    (runs, dims)
}

fn bench_map(c: &mut Criterion) {
    let cascades = workload();
    let mut group = c.benchmark_group("per_cascade_stage");

    group.bench_function("map_slice", |b| {
        b.iter(|| map_slice(&cascades, per_cascade))
    });

    group.bench_function("sequential", |b| {
        b.iter(|| cascades.iter().map(per_cascade).collect::<Vec<_>>())
    });

    group.finish();
}

criterion_group!(benches, bench_map);
criterion_main!(benches);
