//! Corpus analysis and the JSON payloads behind each exploration view.
//!
//! [`ProcessedCorpus`] runs extraction, embedding and topic assignment once
//! per corpus. View builders then work on document selections: the document
//! space, the partitioned star map, the association tree over selected
//! subgraphs, the focus profile and annotated document cards.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::color::{self, Rgb};
use crate::corpus::{search_documents, CorpusSnapshot, DocumentRecord};
use crate::error::{Error, Result};
use crate::extraction::{
    annotate_document, build_entity_set, extract_entities, AnnotatedDocument, Entity, EntityExtractor,
    EntityMention, EntitySet, TypeCounts,
};
use crate::focus::{focus_profile, FocusExport, FocusTarget, DEFAULT_AXIS_UNIT};
use crate::layout::{
    init_star_map, layout_space, solve, LayoutResult, SpaceInput, SpaceLink, SpaceNodeExport, SpaceParams,
    StarMapExport, StarMapParams, StarMapState,
};
use crate::partition::{
    build_paragraph_graph, partition_graph_with, IntraEdges, ParagraphGraph, PartitionExport, PartitionOptions,
    PartitionResult,
};
use crate::relations::{
    assign_topics, embed_document, similarity_matrix, EmbeddingProvider, EmbeddingVector, TopicAssignment,
};
use crate::tree::{build_tree, AssociationTree, TreeExport};

const EMBED_BATCH: usize = 64;

/// Analysis knobs shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub theta: f64,
    pub max_subgraph_size: usize,
    pub intra_edges: IntraEdges,
    pub per_component: bool,
    pub h_t: f64,
    pub star: StarMapParams,
    pub space: SpaceParams,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            theta: 0.5,
            max_subgraph_size: 10,
            intra_edges: IntraEdges::Path,
            per_component: false,
            h_t: DEFAULT_AXIS_UNIT,
            star: StarMapParams::default(),
            space: SpaceParams::default(),
        }
    }
}

/// A corpus with entities, embeddings and topics attached.
#[derive(Debug, Clone)]
pub struct ProcessedCorpus {
    pub snapshot: CorpusSnapshot,
    /// Aligned with `snapshot.paragraphs`.
    pub entity_sets: Vec<EntitySet>,
    pub mentions: Vec<Vec<EntityMention>>,
    pub paragraph_vectors: Vec<EmbeddingVector>,
    /// Aligned with `snapshot.documents`.
    pub document_vectors: Vec<EmbeddingVector>,
    pub topics: TopicAssignment,
    /// `(paragraph id, message)` for paragraphs whose extraction failed.
    pub extraction_failures: Vec<(String, String)>,
    set_index: HashMap<String, usize>,
}

impl ProcessedCorpus {
    pub fn new(
        mut snapshot: CorpusSnapshot,
        extractor: &dyn EntityExtractor,
        embedder: &dyn EmbeddingProvider,
        topics: usize,
        topic_seed: u64,
    ) -> Result<Self> {
        let mut mentions = Vec::with_capacity(snapshot.paragraphs.len());
        let mut entity_sets = Vec::with_capacity(snapshot.paragraphs.len());
        let mut extraction_failures = Vec::new();
        for p in snapshot.paragraphs.iter_mut() {
            let ex = extract_entities(&p.text, extractor);
            if let Some(err) = ex.error {
                extraction_failures.push((p.id.clone(), err));
            }
            let set = build_entity_set(p, &ex.mentions);
            p.entity_set_id = Some(set.id.clone());
            entity_sets.push(set);
            mentions.push(ex.mentions);
        }

        let mut paragraph_vectors = Vec::with_capacity(entity_sets.len());
        let items: Vec<(&EntitySet, &str)> = entity_sets
            .iter()
            .zip(&snapshot.paragraphs)
            .map(|(s, p)| (s, p.text.as_str()))
            .collect();
        for chunk in items.chunks(EMBED_BATCH) {
            paragraph_vectors.extend(embedder.embed_paragraphs(chunk)?);
        }
        drop(items);

        let para_pos: HashMap<&str, usize> = snapshot
            .paragraphs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();
        let mut document_vectors = Vec::with_capacity(snapshot.documents.len());
        let mut doc_terms = Vec::with_capacity(snapshot.documents.len());
        for d in &snapshot.documents {
            let positions: Vec<usize> = d.paragraph_ids.iter().map(|id| para_pos[id.as_str()]).collect();
            let vectors: Vec<EmbeddingVector> = positions.iter().map(|&i| paragraph_vectors[i].clone()).collect();
            document_vectors.push(embed_document(&vectors)?);
            doc_terms.push(
                positions
                    .iter()
                    .flat_map(|&i| mentions[i].iter().map(|m| m.normalized.clone()))
                    .collect::<Vec<_>>(),
            );
        }
        let k = topics.clamp(1, snapshot.documents.len());
        let topics = assign_topics(&document_vectors, &doc_terms, k, topic_seed)?;
        for (d, &t) in snapshot.documents.iter_mut().zip(&topics.topic_of) {
            d.topic_id = Some(t);
        }
        let set_index = entity_sets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), i))
            .collect();
        Ok(ProcessedCorpus {
            snapshot,
            entity_sets,
            mentions,
            paragraph_vectors,
            document_vectors,
            topics,
            extraction_failures,
            set_index,
        })
    }

    pub fn corpus_id(&self) -> &str {
        &self.snapshot.corpus_id
    }

    pub fn entity_set(&self, id: &str) -> Option<&EntitySet> {
        self.set_index.get(id).map(|&i| &self.entity_sets[i])
    }

    fn documents(&self, ids: &[String]) -> Result<Vec<&DocumentRecord>> {
        if ids.is_empty() {
            return Err(Error::invalid("no documents selected"));
        }
        ids.iter()
            .map(|id| {
                self.snapshot
                    .document(id)
                    .ok_or_else(|| Error::not_found(format!("document {id}")))
            })
            .collect()
    }

    pub fn search<S: AsRef<str>>(&self, keywords: &[S]) -> Result<SearchPayload> {
        let ids = search_documents(&self.snapshot, keywords)?;
        let results = ids
            .iter()
            .map(|id| {
                let d = self.snapshot.document(id).expect("search returns known ids");
                let entity_count = d
                    .paragraph_ids
                    .iter()
                    .filter_map(|p| self.entity_set(&EntitySet::id_for_paragraph(p)))
                    .map(|s| s.total)
                    .sum();
                let topic_id = d.topic_id.unwrap_or(0);
                SearchHit {
                    id: d.id.clone(),
                    title: d.title.clone(),
                    text_length: d.text_length,
                    topic_id,
                    top_terms: self.topics.top_terms.get(topic_id).cloned().unwrap_or_default(),
                    paragraphs: d.paragraph_ids.len(),
                    entity_count,
                }
            })
            .collect();
        Ok(SearchPayload {
            corpus_id: self.corpus_id().to_string(),
            query: keywords.iter().map(|k| k.as_ref().to_string()).collect(),
            results,
        })
    }

    pub fn space(&self, doc_ids: &[String], theta: f64, seed: u64, params: &SpaceParams) -> Result<SpacePayload> {
        let docs = self.documents(doc_ids)?;
        let positions: Vec<usize> = doc_ids
            .iter()
            .map(|id| self.snapshot.document_position(id).expect("checked above"))
            .collect();
        let vectors: Vec<EmbeddingVector> = positions.iter().map(|&i| self.document_vectors[i].clone()).collect();
        let sims = similarity_matrix(doc_ids, &vectors)?;
        let inputs: Vec<SpaceInput<'_>> = docs
            .iter()
            .zip(&positions)
            .map(|(d, &i)| {
                let topic = self.topics.topic_of[i];
                SpaceInput {
                    document_id: &d.id,
                    text_length: d.text_length,
                    topic_id: topic,
                    topic_color_index: self.topics.topic_color_index[topic],
                }
            })
            .collect();
        let layout = layout_space(&inputs, &sims, theta, seed, params)?;
        let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
        for &i in &positions {
            *sizes.entry(self.topics.topic_of[i]).or_default() += 1;
        }
        let topics = sizes
            .into_iter()
            .map(|(t, size)| TopicExport {
                id: t,
                color: color::categorical(self.topics.topic_color_index[t]),
                top_terms: self.topics.top_terms[t].clone(),
                size,
            })
            .collect();
        Ok(SpacePayload {
            corpus_id: self.corpus_id().to_string(),
            theta,
            seed,
            nodes: layout.export_nodes(),
            links: layout.links,
            topics,
        })
    }

    /// Paragraph graph over the selected documents plus per-vertex type counts.
    pub fn paragraph_graph(
        &self,
        doc_ids: &[String],
        theta: f64,
        intra: IntraEdges,
    ) -> Result<(ParagraphGraph, Vec<TypeCounts>)> {
        let docs = self.documents(doc_ids)?;
        let pids: Vec<String> = docs.iter().flat_map(|d| d.paragraph_ids.iter().cloned()).collect();
        let vectors: Vec<EmbeddingVector> = pids
            .iter()
            .map(|p| self.paragraph_vectors[self.snapshot.paragraph_position(p).expect("known paragraph")].clone())
            .collect();
        let sims = similarity_matrix(&pids, &vectors)?;
        let graph = build_paragraph_graph(&docs, &sims, theta, intra)?;
        let counts = graph
            .vertices
            .iter()
            .map(|v| {
                self.entity_set(&v.entity_set_id)
                    .map(|s| s.counts_by_type)
                    .unwrap_or_default()
            })
            .collect();
        Ok((graph, counts))
    }

    /// Builds, partitions and lays out the paragraph graph. `selected_parts`
    /// defaults to every part.
    pub fn starmap(
        &self,
        doc_ids: &[String],
        cfg: &AnalysisConfig,
        seed: u64,
        selected_parts: Option<&[usize]>,
    ) -> Result<StarMapView> {
        let clock = std::time::Instant::now();
        let (graph, counts) = self.paragraph_graph(doc_ids, cfg.theta, cfg.intra_edges)?;
        log::debug!(
            "paragraph graph: {} vertices, {} edges in {:?}",
            graph.vertices.len(),
            graph.edges.len(),
            clock.elapsed()
        );
        let partition = partition_graph_with(
            &graph,
            cfg.max_subgraph_size,
            seed,
            PartitionOptions {
                per_component: cfg.per_component,
            },
        )?;
        log::debug!("partition: {} parts in {:?}", partition.parts.len(), clock.elapsed());
        let all: Vec<usize> = (0..partition.parts.len()).collect();
        let selected = selected_parts.unwrap_or(&all);
        let mut state = init_star_map(&graph, &partition, selected, &counts, &cfg.star, seed)?;
        let tolerance = cfg.star.tolerance * cfg.star.boundary_radius;
        let result = solve(&mut state, tolerance, cfg.star.max_iters)?;
        log::debug!(
            "star layout: {} iterations, residual {:.2e}, in {:?}",
            result.iterations_used,
            result.max_residual,
            clock.elapsed()
        );
        Ok(StarMapView {
            graph,
            partition,
            state,
            result,
        })
    }

    /// Association tree over the given entity sets, in order.
    pub fn tree(&self, mes_ids: &[String]) -> Result<AssociationTree> {
        let sets = mes_ids
            .iter()
            .map(|id| {
                self.entity_set(id)
                    .cloned()
                    .ok_or_else(|| Error::not_found(format!("entity set {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        build_tree(&sets)
    }

    pub fn focus(&self, target: &FocusTarget, h_t: f64) -> Result<FocusExport> {
        let sets: Vec<EntitySet> = target
            .scope
            .iter()
            .chain(target.mes.iter())
            .filter_map(|id| self.entity_set(id).cloned())
            .collect();
        let mut profile = focus_profile(target, &sets, h_t)?;
        if let Some(id) = &target.mes {
            if let Some(p) = self.entity_set(id).and_then(|s| self.snapshot.paragraph(&s.paragraph_id)) {
                profile.core_label = snippet(&p.text, 80);
            }
        }
        Ok(profile.export())
    }

    pub fn document(&self, id: &str) -> Result<AnnotatedDocument> {
        let doc = self
            .snapshot
            .document(id)
            .ok_or_else(|| Error::not_found(format!("document {id}")))?;
        let paragraphs = self.snapshot.paragraphs_of(doc);
        Ok(annotate_document(doc, &paragraphs, |pid| {
            let i = self.snapshot.paragraph_position(pid).expect("paragraph of document");
            self.mentions[i].as_slice()
        }))
    }
}

fn snippet(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let mut s: String = text.chars().take(max_chars).collect();
    s.push('…');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchHit {
    pub id: String,
    pub title: String,
    pub text_length: usize,
    pub topic_id: usize,
    pub top_terms: Vec<String>,
    pub paragraphs: usize,
    pub entity_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchPayload {
    pub corpus_id: String,
    pub query: Vec<String>,
    pub results: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicExport {
    pub id: usize,
    pub color: Rgb,
    pub top_terms: Vec<String>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacePayload {
    pub corpus_id: String,
    pub theta: f64,
    pub seed: u64,
    pub nodes: Vec<SpaceNodeExport>,
    pub links: Vec<SpaceLink>,
    pub topics: Vec<TopicExport>,
}

#[derive(Debug, Clone)]
pub struct StarMapView {
    pub graph: ParagraphGraph,
    pub partition: PartitionResult,
    pub state: StarMapState,
    pub result: LayoutResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subgraph {
    pub id: usize,
    pub paragraph_ids: Vec<String>,
    pub entity_set_ids: Vec<String>,
    pub document_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarMapPayload {
    pub theta: f64,
    pub max_subgraph_size: usize,
    pub partition: PartitionExport,
    pub subgraphs: Vec<Subgraph>,
    pub starmap: StarMapExport,
}

impl StarMapView {
    /// Entity set ids of the given parts, in part then vertex order.
    pub fn entity_sets_of(&self, parts: &[usize]) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for &p in parts {
            let members = self
                .partition
                .parts
                .get(p)
                .ok_or_else(|| Error::not_found(format!("subgraph {p}")))?;
            out.extend(members.iter().map(|&v| self.graph.vertices[v].entity_set_id.clone()));
        }
        Ok(out)
    }

    pub fn subgraphs(&self) -> Vec<Subgraph> {
        self.partition
            .parts
            .iter()
            .enumerate()
            .map(|(id, members)| {
                let mut document_ids: Vec<String> = members
                    .iter()
                    .map(|&v| self.graph.vertices[v].document_id.clone())
                    .collect();
                document_ids.dedup();
                Subgraph {
                    id,
                    paragraph_ids: members.iter().map(|&v| self.graph.vertices[v].id.clone()).collect(),
                    entity_set_ids: members
                        .iter()
                        .map(|&v| self.graph.vertices[v].entity_set_id.clone())
                        .collect(),
                    document_ids,
                }
            })
            .collect()
    }

    pub fn payload(&self, max_subgraph_size: usize) -> StarMapPayload {
        StarMapPayload {
            theta: self.graph.theta,
            max_subgraph_size,
            partition: self.partition.export(&self.graph),
            subgraphs: self.subgraphs(),
            starmap: self.state.export(&self.result),
        }
    }
}

/// Every payload of one batch run.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutput {
    pub search: SearchPayload,
    pub space: SpacePayload,
    pub starmap: StarMapPayload,
    pub tree: TreeExport,
    pub focus: FocusExport,
    pub focus_entity: FocusExport,
    pub documents: Vec<AnnotatedDocument>,
}

/// Batch selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    /// Search hits taken into the space and star map, in id order.
    pub max_documents: usize,
    /// Leading subgraphs fed to the association tree.
    pub tree_parts: usize,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            max_documents: 50,
            tree_parts: 3,
        }
    }
}

/// Search, then build every view from the hits: all subgraphs in the star
/// map, the first few subgraphs in the tree, a set focus on the tree's
/// richest entity set and an entity focus on its most common entity.
pub fn run_pipeline<S: AsRef<str>>(
    corpus: &ProcessedCorpus,
    query: &[S],
    cfg: &AnalysisConfig,
    policy: &SelectionPolicy,
    seed: u64,
) -> Result<PipelineOutput> {
    let search = corpus.search(query)?;
    if search.results.is_empty() {
        return Err(Error::not_found("no documents match the query"));
    }
    let doc_ids: Vec<String> = search
        .results
        .iter()
        .take(policy.max_documents.max(1))
        .map(|h| h.id.clone())
        .collect();
    let clock = std::time::Instant::now();
    let space = corpus.space(&doc_ids, cfg.theta, seed, &cfg.space)?;
    log::debug!("space: {:?}", clock.elapsed());
    let view = corpus.starmap(&doc_ids, cfg, seed, None)?;
    log::debug!("star map: {:?}", clock.elapsed());
    let tree_parts: Vec<usize> = (0..view.partition.parts.len().min(policy.tree_parts.max(1))).collect();
    let mes_ids = view.entity_sets_of(&tree_parts)?;
    let tree = corpus.tree(&mes_ids)?;

    let richest = mes_ids
        .iter()
        .filter_map(|id| corpus.entity_set(id))
        .max_by(|a, b| a.total.cmp(&b.total).then_with(|| b.id.cmp(&a.id)))
        .expect("tree parts are non-empty");
    let focus = corpus.focus(&FocusTarget::entity_set(richest.id.clone(), mes_ids.clone()), cfg.h_t)?;

    let mut freq: BTreeMap<&Entity, usize> = BTreeMap::new();
    for s in mes_ids.iter().filter_map(|id| corpus.entity_set(id)) {
        for e in &s.entities {
            *freq.entry(e).or_default() += 1;
        }
    }
    let top_entity = freq
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(e, _)| (*e).clone())
        .or_else(|| richest.entities.first().cloned());
    let focus_entity = match top_entity {
        Some(e) => corpus.focus(&FocusTarget::entity(e, mes_ids.clone()), cfg.h_t)?,
        None => focus.clone(),
    };

    let mut doc_order: Vec<String> = Vec::new();
    for id in &mes_ids {
        let pid = &corpus.entity_set(id).expect("known set").paragraph_id;
        let doc = &corpus.snapshot.paragraph(pid).expect("known paragraph").document_id;
        if !doc_order.contains(doc) {
            doc_order.push(doc.clone());
        }
    }
    let documents = doc_order
        .iter()
        .map(|d| corpus.document(d))
        .collect::<Result<Vec<_>>>()?;

    Ok(PipelineOutput {
        search,
        space,
        starmap: view.payload(cfg.max_subgraph_size),
        tree: tree.export(),
        focus,
        focus_entity,
        documents,
    })
}

pub const OUTPUT_FILES: [&str; 7] = [
    "search.json",
    "space.json",
    "starmap.json",
    "tree.json",
    "focus.json",
    "focus_entity.json",
    "documents.json",
];

impl PipelineOutput {
    /// Writes one pretty-printed JSON file per view.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let values = [
            serde_json::to_string_pretty(&self.search)?,
            serde_json::to_string_pretty(&self.space)?,
            serde_json::to_string_pretty(&self.starmap)?,
            serde_json::to_string_pretty(&self.tree)?,
            serde_json::to_string_pretty(&self.focus)?,
            serde_json::to_string_pretty(&self.focus_entity)?,
            serde_json::to_string_pretty(&self.documents)?,
        ];
        for (name, body) in OUTPUT_FILES.iter().zip(values) {
            std::fs::write(dir.join(name), body + "\n")?;
        }
        Ok(())
    }
}
