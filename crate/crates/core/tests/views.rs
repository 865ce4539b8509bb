mod common;

use std::io::Cursor;

use medlens_core::corpus::{ingest_corpus, SegmentationRules};
use medlens_core::extraction::{Entity, EntitySet, EntityType, Lexicon, LexiconExtractor, TypeCounts};
use medlens_core::focus::{focus_profile, FocusTarget};
use medlens_core::layout::{initial_space_positions, layout_space, SpaceInput, SpaceParams};
use medlens_core::pipeline::{run_pipeline, AnalysisConfig, ProcessedCorpus, SelectionPolicy};
use medlens_core::relations::{HashingEmbedder, SimilarityMatrix};
use medlens_core::synth::{synth_documents, write_jsonl};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_typed_sets<R: Rng>(rng: &mut R, count: usize) -> Vec<EntitySet> {
    (0..count)
        .map(|i| {
            let mut entities: Vec<Entity> = Vec::new();
            for _ in 0..rng.gen_range(1..8) {
                let e = Entity::new(
                    format!("e{}", rng.gen_range(0..10)),
                    EntityType::ALL[rng.gen_range(0..9)],
                );
                if !entities.contains(&e) {
                    entities.push(e);
                }
            }
            let mut counts = TypeCounts::default();
            for e in &entities {
                counts.add(e.etype, 1);
            }
            EntitySet {
                id: format!("mes:{i:03}"),
                paragraph_id: format!("{i:03}"),
                total: entities.len(),
                entities,
                counts_by_type: counts,
            }
        })
        .collect()
}

#[test]
fn focus_invariants_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let sets = random_typed_sets(&mut rng, 12);
        let scope: Vec<String> = sets.iter().map(|s| s.id.clone()).collect();
        let h_t = rng.gen_range(0.5..10.0);
        let target = &sets[rng.gen_range(0..12)];
        let p = focus_profile(&FocusTarget::entity_set(target.id.clone(), scope.clone()), &sets, h_t).unwrap();
        let sum: f64 = p.donut.iter().map(|s| s.proportion).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for s in &p.donut {
            assert_eq!(s.proportion, target.counts_by_type.get(s.etype) as f64 / target.total as f64);
        }
        for a in &p.associates {
            let set = sets.iter().find(|s| s.id == a.entity_set_id).unwrap();
            for t in EntityType::ALL {
                assert_eq!(a.heights[&t], set.counts_by_type.get(t) as f64 * h_t);
            }
            assert_eq!(a.strength, common::intersection_size(&target.entities, &set.entities));
        }
        assert!(p
            .associates
            .windows(2)
            .all(|w| (w[0].strength, &w[1].entity_set_id) > (w[1].strength, &w[0].entity_set_id)));

        let e = target.entities[0].clone();
        let p = focus_profile(&FocusTarget::entity(e.clone(), scope), &sets, h_t).unwrap();
        assert_eq!(p.donut.len(), 1);
        assert_eq!(p.donut[0].etype, e.etype);
        assert_eq!(p.donut[0].proportion, 1.0);
        assert!(p.associates.iter().all(|a| sets
            .iter()
            .find(|s| s.id == a.entity_set_id)
            .unwrap()
            .contains(&e)));
    }
}

fn identity(n: usize) -> SimilarityMatrix {
    let ids: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
    let mut values = vec![0.2; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    SimilarityMatrix { ids, values }
}

#[test]
fn space_without_links_only_spreads_out() {
    let n = 12;
    let m = identity(n);
    let ids = m.ids.clone();
    let docs: Vec<SpaceInput<'_>> = ids
        .iter()
        .map(|id| SpaceInput {
            document_id: id,
            text_length: 50,
            topic_id: 0,
            topic_color_index: 0,
        })
        .collect();
    let start = initial_space_positions(n, 3);
    let out = layout_space(&docs, &m, 1.0, 3, &SpaceParams::default()).unwrap();
    assert!(out.links.is_empty());
    let dist = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    for i in 0..n {
        for j in i + 1..n {
            let before = dist(start[i], start[j]);
            let after = dist(out.nodes[i].position, out.nodes[j].position);
            assert!(after >= before - 1e-9, "{i},{j}: {before} -> {after}");
        }
    }
    let again = layout_space(&docs, &m, 1.0, 3, &SpaceParams::default()).unwrap();
    assert_eq!(out, again);
}

fn small_corpus() -> ProcessedCorpus {
    let mut buf = Vec::new();
    write_jsonl(&synth_documents(40, 3), &mut buf).unwrap();
    let report = ingest_corpus(Cursor::new(buf), &SegmentationRules::BlankLine).unwrap();
    assert!(report.rejected.is_empty());
    ProcessedCorpus::new(
        report.snapshot,
        &LexiconExtractor::new(Lexicon::builtin()),
        &HashingEmbedder::default(),
        4,
        1,
    )
    .unwrap()
}

#[test]
fn pipeline_is_deterministic_and_consistent() {
    let corpus = small_corpus();
    let cfg = AnalysisConfig::default();
    let policy = SelectionPolicy::default();
    let a = run_pipeline(&corpus, &["pain"], &cfg, &policy, 42).unwrap();
    let b = run_pipeline(&corpus, &["pain"], &cfg, &policy, 42).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let stars = &a.starmap.starmap.stars;
    let graph_size: usize = a.starmap.subgraphs.iter().map(|s| s.paragraph_ids.len()).sum();
    assert_eq!(stars.len(), graph_size);
    assert!(a.starmap.subgraphs.iter().all(|s| s.paragraph_ids.len() <= cfg.max_subgraph_size));
    assert!(a.space.links.iter().all(|l| l.similarity > cfg.theta));
    assert!(a.starmap.starmap.converged);
    let tree_sets: usize = a.starmap.subgraphs.iter().take(3).map(|s| s.entity_set_ids.len()).sum();
    assert_eq!(a.tree.mes_count, tree_sets);

    for d in &a.documents {
        for p in &d.paragraphs {
            let chars: Vec<char> = p.text.chars().collect();
            for s in &p.spans {
                let slice: String = chars[s.start..s.end].iter().collect();
                assert_eq!(slice, s.surface);
            }
        }
    }
    assert!(run_pipeline(&corpus, &["nonexistent-term"], &cfg, &policy, 1).is_err());
}

#[test]
fn sessions_reuse_corpus_for_partial_selections() {
    let corpus = small_corpus();
    let cfg = AnalysisConfig::default();
    let ids: Vec<String> = corpus.snapshot.documents.iter().take(6).map(|d| d.id.clone()).collect();
    let view = corpus.starmap(&ids, &cfg, 9, Some(&[0])).unwrap();
    assert_eq!(view.state.stars.len(), view.partition.parts[0].len());
    assert!(corpus.starmap(&ids, &cfg, 9, Some(&[999])).is_err());
    let space = corpus.space(&ids, 1.0, 1, &cfg.space).unwrap();
    assert!(space.links.is_empty());
    assert_eq!(space.nodes.len(), 6);
}
