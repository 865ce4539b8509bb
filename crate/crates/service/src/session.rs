//! Exploration sessions: one pass from document selection to focus.

use std::sync::Arc;

use medlens_core::pipeline::{AnalysisConfig, ProcessedCorpus, StarMapView};
use medlens_core::tree::AssociationTree;
use medlens_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Inputs of the last star map, enough to recompute it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarMapSpec {
    pub document_ids: Vec<String>,
    pub theta: f64,
    pub max_subgraph_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub session_id: String,
    pub corpus_id: String,
    pub selected_document_ids: Vec<String>,
    pub theta: f64,
    pub max_subgraph_size: usize,
    pub seed: u64,
    pub selected_part_ids: Vec<usize>,
    pub starmap_spec: Option<StarMapSpec>,
    pub starmap: Option<Arc<StarMapView>>,
    pub tree: Option<AssociationTree>,
    pub created_at: u64,
    pub dirty: bool,
}

/// On-disk form. The tree is kept as its insertion log and the star map as
/// its inputs; both are rebuilt on restore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub session_id: String,
    pub corpus_id: String,
    pub selected_document_ids: Vec<String>,
    pub theta: f64,
    pub max_subgraph_size: usize,
    pub seed: u64,
    pub selected_part_ids: Vec<usize>,
    pub starmap: Option<StarMapSpec>,
    pub tree_log: Option<Vec<String>>,
    pub created_at: u64,
}

/// Public view of a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub corpus_id: String,
    pub selected_document_ids: Vec<String>,
    pub theta: f64,
    pub max_subgraph_size: usize,
    pub seed: u64,
    pub selected_part_ids: Vec<usize>,
    pub subgraph_count: Option<usize>,
    pub tree_size: Option<usize>,
    pub created_at: u64,
}

pub fn validate_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("theta {theta} outside [0, 1]")))
    }
}

pub fn validate_max_size(max: usize) -> Result<()> {
    if max >= 1 {
        Ok(())
    } else {
        Err(Error::invalid("max_subgraph_size must be at least 1"))
    }
}

impl Session {
    pub fn new(
        session_id: String,
        corpus: &ProcessedCorpus,
        document_ids: Vec<String>,
        theta: f64,
        max_subgraph_size: usize,
        seed: u64,
        created_at: u64,
    ) -> Result<Self> {
        validate_theta(theta)?;
        validate_max_size(max_subgraph_size)?;
        check_documents(corpus, &document_ids)?;
        Ok(Session {
            session_id,
            corpus_id: corpus.corpus_id().to_string(),
            selected_document_ids: document_ids,
            theta,
            max_subgraph_size,
            seed,
            selected_part_ids: Vec::new(),
            starmap_spec: None,
            starmap: None,
            tree: None,
            created_at,
            dirty: true,
        })
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            corpus_id: self.corpus_id.clone(),
            selected_document_ids: self.selected_document_ids.clone(),
            theta: self.theta,
            max_subgraph_size: self.max_subgraph_size,
            seed: self.seed,
            selected_part_ids: self.selected_part_ids.clone(),
            subgraph_count: self.starmap.as_ref().map(|v| v.partition.parts.len()),
            tree_size: self.tree.as_ref().map(AssociationTree::mes_count),
            created_at: self.created_at,
        }
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            session_id: self.session_id.clone(),
            corpus_id: self.corpus_id.clone(),
            selected_document_ids: self.selected_document_ids.clone(),
            theta: self.theta,
            max_subgraph_size: self.max_subgraph_size,
            seed: self.seed,
            selected_part_ids: self.selected_part_ids.clone(),
            starmap: self.starmap_spec.clone(),
            tree_log: self.tree.as_ref().map(|t| t.insertion_log().to_vec()),
            created_at: self.created_at,
        }
    }

    /// Rebuilds a session from disk. The star map is recomputed lazily.
    pub fn restore(snap: SessionSnapshot, corpus: &ProcessedCorpus) -> Result<Self> {
        if snap.corpus_id != corpus.corpus_id() {
            return Err(Error::invalid("snapshot belongs to another corpus"));
        }
        let tree = snap.tree_log.as_ref().map(|log| corpus.tree(log)).transpose()?;
        Ok(Session {
            session_id: snap.session_id,
            corpus_id: snap.corpus_id,
            selected_document_ids: snap.selected_document_ids,
            theta: snap.theta,
            max_subgraph_size: snap.max_subgraph_size,
            seed: snap.seed,
            selected_part_ids: snap.selected_part_ids,
            starmap_spec: snap.starmap,
            starmap: None,
            tree,
            created_at: snap.created_at,
            dirty: false,
        })
    }

    /// Computes a star map and makes it current.
    pub fn run_starmap(
        &mut self,
        corpus: &ProcessedCorpus,
        base: &AnalysisConfig,
        spec: StarMapSpec,
    ) -> Result<Arc<StarMapView>> {
        validate_theta(spec.theta)?;
        validate_max_size(spec.max_subgraph_size)?;
        check_documents(corpus, &spec.document_ids)?;
        let view = Arc::new(compute_starmap(corpus, base, &spec)?);
        self.selected_document_ids = spec.document_ids.clone();
        self.theta = spec.theta;
        self.max_subgraph_size = spec.max_subgraph_size;
        self.seed = spec.seed;
        self.selected_part_ids.clear();
        self.starmap_spec = Some(spec);
        self.starmap = Some(view.clone());
        self.dirty = true;
        Ok(view)
    }

    /// The current star map, recomputed from its spec after a restore.
    pub fn current_starmap(&mut self, corpus: &ProcessedCorpus, base: &AnalysisConfig) -> Result<Arc<StarMapView>> {
        if let Some(v) = &self.starmap {
            return Ok(v.clone());
        }
        let spec = self
            .starmap_spec
            .as_ref()
            .ok_or_else(|| Error::invalid("no star map computed in this session"))?;
        let view = Arc::new(compute_starmap(corpus, base, spec)?);
        self.starmap = Some(view.clone());
        Ok(view)
    }

    /// Builds the tree from every entity set of the given subgraphs.
    pub fn build_tree(
        &mut self,
        corpus: &ProcessedCorpus,
        base: &AnalysisConfig,
        part_ids: &[usize],
    ) -> Result<&AssociationTree> {
        if part_ids.is_empty() {
            return Err(Error::invalid("no subgraphs selected"));
        }
        let view = self.current_starmap(corpus, base)?;
        let mes_ids = view.entity_sets_of(part_ids)?;
        let tree = corpus.tree(&mes_ids)?;
        self.selected_part_ids = part_ids.to_vec();
        self.dirty = true;
        Ok(self.tree.insert(tree))
    }

    /// Adds entity sets to the tree, all or nothing.
    pub fn add_to_tree(&mut self, corpus: &ProcessedCorpus, mes_ids: &[String]) -> Result<&AssociationTree> {
        if mes_ids.is_empty() {
            return Err(Error::invalid("no entity sets given"));
        }
        let mut tree = self.tree.clone().unwrap_or_default();
        for id in mes_ids {
            let set = corpus
                .entity_set(id)
                .ok_or_else(|| Error::not_found(format!("entity set {id}")))?;
            tree.add_node(set)?;
        }
        self.dirty = true;
        Ok(self.tree.insert(tree))
    }

    /// Entity sets searched by focus requests without an explicit scope.
    pub fn focus_scope(&self) -> Result<Vec<String>> {
        self.tree
            .as_ref()
            .map(|t| t.insertion_log().to_vec())
            .ok_or_else(|| Error::invalid("no tree in this session; pass an explicit scope"))
    }
}

fn check_documents(corpus: &ProcessedCorpus, ids: &[String]) -> Result<()> {
    for id in ids {
        if corpus.snapshot.document(id).is_none() {
            return Err(Error::not_found(format!("document {id}")));
        }
    }
    Ok(())
}

fn compute_starmap(corpus: &ProcessedCorpus, base: &AnalysisConfig, spec: &StarMapSpec) -> Result<StarMapView> {
    let cfg = AnalysisConfig {
        theta: spec.theta,
        max_subgraph_size: spec.max_subgraph_size,
        ..base.clone()
    };
    corpus.starmap(&spec.document_ids, &cfg, spec.seed, None)
}
