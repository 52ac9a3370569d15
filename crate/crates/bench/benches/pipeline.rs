use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use semcache_bench::{embeddings, lmsys, moss, queries};
use semcache_core::text::MemoEncoder;
use semcache_core::{
    co_hsc, kmeans, replay, Admission, AnalysisConfig, CacheConfig, KMeansParams, Policy, QueryEncoder, SemanticCache,
    TextPipeline,
};

fn embed(c: &mut Criterion) {
    let pipeline = TextPipeline::local();
    let qs = queries(&lmsys(200));
    c.bench_function("embed/lmsys-200", |b| {
        b.iter(|| {
            for q in &qs {
                black_box(pipeline.encode(q).unwrap());
            }
        })
    });
}

fn cluster(c: &mut Criterion) {
    let pipeline = TextPipeline::local();
    let points = embeddings(&lmsys(600), &pipeline);
    let mut group = c.benchmark_group("kmeans");
    group.sample_size(10);
    for k in [10, 20, 40] {
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| kmeans(&points, KMeansParams::new(k, 1)).unwrap())
        });
    }
    group.finish();
}

fn hierarchy(c: &mut Criterion) {
    let pipeline = TextPipeline::local();
    let corpus = moss(200);
    // embeddings are memoized once so the timing covers clustering and scoring
    let encoder = MemoEncoder::new(&pipeline);
    let mut group = c.benchmark_group("co-hsc/rounds");
    group.sample_size(10);
    for rounds in [1, 2, 4, 8] {
        let config = AnalysisConfig {
            max_rounds: rounds,
            ..AnalysisConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(rounds), &config, |b, config| {
            b.iter(|| co_hsc(&corpus, &encoder, config).unwrap())
        });
    }
    group.finish();
}

fn replays(c: &mut Criterion) {
    let pipeline = TextPipeline::local();
    let encoder = MemoEncoder::new(&pipeline);
    let analysis = lmsys(500);
    let eval = lmsys(1000);
    let patterns = co_hsc(&analysis, &encoder, &AnalysisConfig::default()).unwrap();
    let mut group = c.benchmark_group("replay/lmsys-1000");
    group.sample_size(10);
    for (name, policy, admission, set) in [
        ("lfu", Policy::Lfu, Admission::StoreAll, None),
        ("co-hsc-lfu", Policy::SpLfu, Admission::Ranked, Some(&patterns)),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let config = CacheConfig {
                    capacity: 100,
                    policy,
                    ..CacheConfig::default()
                };
                let mut cache = SemanticCache::new(config, admission).unwrap();
                replay(&eval, &mut cache, set, &encoder)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, embed, cluster, hierarchy, replays);
criterion_main!(benches);
