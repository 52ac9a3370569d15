//! Fixtures shared by the benchmarks.

use semcache_core::{generate_synthetic, QueryEncoder, SyntheticSpec, TextPipeline, TraceCorpus};

/// Seeded LMSYS-shaped corpus.
pub fn lmsys(conversations: usize) -> TraceCorpus {
    generate_synthetic(&SyntheticSpec::lmsys_like(conversations), 11).expect("preset is valid")
}

/// Seeded MOSS-shaped corpus, deep enough for round scaling.
pub fn moss(conversations: usize) -> TraceCorpus {
    generate_synthetic(&SyntheticSpec::moss_like(conversations), 11).expect("preset is valid")
}

pub fn queries(corpus: &TraceCorpus) -> Vec<String> {
    corpus
        .conversations()
        .iter()
        .flat_map(|c| c.rounds.iter().map(|r| r.query_text.clone()))
        .collect()
}

pub fn embeddings(corpus: &TraceCorpus, pipeline: &TextPipeline) -> Vec<Vec<f64>> {
    queries(corpus)
        .iter()
        .map(|q| pipeline.encode(q).expect("local embedder").into_inner())
        .collect()
}
