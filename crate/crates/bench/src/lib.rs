//! Seeded inputs for the benchmarks.

use std::io::Cursor;

use medlens_core::corpus::{ingest_corpus, SegmentationRules};
use medlens_core::extraction::{Entity, EntitySet, EntityType, Lexicon, LexiconExtractor, TypeCounts};
use medlens_core::layout::{StarLink, StarMapParams, StarMapState, StarSeed};
use medlens_core::partition::{EdgeKind, GraphEdge, GraphVertex, ParagraphGraph};
use medlens_core::pipeline::ProcessedCorpus;
use medlens_core::relations::HashingEmbedder;
use medlens_core::synth::{synth_documents, write_jsonl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Documents of five paragraphs chained by intra edges, plus random
/// similarity edges between documents.
pub fn paragraph_graph(n: usize, similarity_edges: usize, seed: u64) -> ParagraphGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = (0..n)
        .map(|i| GraphVertex {
            id: format!("d{}:p{}", i / 5, i % 5),
            document_id: format!("d{}", i / 5),
            entity_set_id: format!("mes:d{}:p{}", i / 5, i % 5),
        })
        .collect();
    let mut edges: Vec<GraphEdge> = (1..n)
        .filter(|i| i % 5 != 0)
        .map(|i| GraphEdge {
            u: i - 1,
            v: i,
            weight: 1.0,
            kind: EdgeKind::Intra,
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    while seen.len() < similarity_edges {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let (u, v) = (a.min(b), a.max(b));
        if u / 5 != v / 5 && seen.insert((u, v)) {
            edges.push(GraphEdge {
                u,
                v,
                weight: rng.gen_range(0.5..1.0),
                kind: EdgeKind::Similarity,
            });
        }
    }
    ParagraphGraph {
        vertices,
        edges,
        theta: 0.5,
    }
}

/// Star map over `paragraph_graph(n, n / 4, seed)` with random entity counts.
pub fn star_state(n: usize, seed: u64) -> StarMapState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = paragraph_graph(n, n / 4, seed);
    let seeds = graph
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c = TypeCounts::default();
            for _ in 0..rng.gen_range(0..6) {
                c.add(EntityType::ALL[rng.gen_range(0..9)], 1);
            }
            StarSeed {
                paragraph_id: v.id.clone(),
                vertex: i,
                part: i / 10,
                document_id: v.document_id.clone(),
                paragraph_index: i % 5,
                counts_by_type: c,
            }
        })
        .collect();
    let links = graph
        .edges
        .iter()
        .map(|e| StarLink {
            a: e.u,
            b: e.v,
            weight: e.weight,
            kind: e.kind,
        })
        .collect();
    StarMapState::new(seeds, links, 0.5, &StarMapParams::default(), seed).expect("valid fixture")
}

/// Entity sets of one to four entities over an alphabet of `alphabet` terms.
pub fn entity_sets(count: usize, alphabet: usize, seed: u64) -> Vec<EntitySet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut entities: Vec<Entity> = Vec::new();
            for _ in 0..rng.gen_range(1..=4) {
                let k = rng.gen_range(0..alphabet);
                let e = Entity::new(format!("t{k}"), EntityType::ALL[k % 9]);
                if !entities.contains(&e) {
                    entities.push(e);
                }
            }
            let mut counts = TypeCounts::default();
            for e in &entities {
                counts.add(e.etype, 1);
            }
            EntitySet {
                id: format!("mes:{i:04}"),
                paragraph_id: format!("{i:04}"),
                total: entities.len(),
                entities,
                counts_by_type: counts,
            }
        })
        .collect()
}

/// Synthetic corpus with lexicon extraction and hashing embeddings.
pub fn processed_corpus(documents: usize, seed: u64) -> ProcessedCorpus {
    let mut buf = Vec::new();
    write_jsonl(&synth_documents(documents, seed), &mut buf).expect("in-memory write");
    let report = ingest_corpus(Cursor::new(buf), &SegmentationRules::BlankLine).expect("synthetic corpus");
    ProcessedCorpus::new(
        report.snapshot,
        &LexiconExtractor::new(Lexicon::builtin()),
        &HashingEmbedder::default(),
        8,
        7,
    )
    .expect("synthetic corpus")
}
