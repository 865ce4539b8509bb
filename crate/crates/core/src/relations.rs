//! Embeddings, similarity, co-occurrence and topic assignment.
//!
//! The default embedding is a feature-hashing baseline: entity tokens and
//! character trigrams are hashed (xxHash64, fixed seed) into `d` signed
//! buckets and L2-normalized. Any [`EmbeddingProvider`] can replace it.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use crate::error::{Error, Result};
use crate::extraction::{normalize, Entity, EntitySet};

pub const DEFAULT_DIMENSION: usize = 256;
pub const DEFAULT_HASH_SEED: u64 = 0x9E37_79B9;
const ENTITY_WEIGHT: f64 = 2.0;
const TRIGRAM_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Scales to unit length; the zero vector is left alone.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= n);
        }
        self
    }

    /// Little-endian bytes of every component, for reproducibility checks.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed_paragraphs(&self, items: &[(&EntitySet, &str)]) -> Result<Vec<EmbeddingVector>>;
}

#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder {
            dim: DEFAULT_DIMENSION,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl HashingEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(HashingEmbedder { dim, seed })
    }

    fn add(&self, values: &mut [f64], token: &[u8], weight: f64) {
        let h = XxHash64::oneshot(self.seed, token);
        let bucket = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        values[bucket] += sign * weight;
    }

    pub fn embed_paragraph(&self, set: &EntitySet, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0; self.dim];
        let mut token = Vec::with_capacity(64);
        for e in &set.entities {
            token.clear();
            token.extend_from_slice(b"e:");
            token.extend_from_slice(e.etype.as_str().as_bytes());
            token.push(b':');
            token.extend_from_slice(e.normalized.as_bytes());
            self.add(&mut values, &token, ENTITY_WEIGHT);
        }
        let chars: Vec<char> = normalize(text).chars().collect();
        let mut buf = [0u8; 4];
        for w in chars.windows(3) {
            token.clear();
            token.extend_from_slice(b"t:");
            for c in w {
                token.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
            self.add(&mut values, &token, TRIGRAM_WEIGHT);
        }
        EmbeddingVector { values }.normalized()
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_paragraphs(&self, items: &[(&EntitySet, &str)]) -> Result<Vec<EmbeddingVector>> {
        Ok(items
            .iter()
            .map(|(set, text)| self.embed_paragraph(set, text))
            .collect())
    }
}

#[derive(Debug, Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an embedding service: `{"texts": [...]}` → `{"vectors": [[...]]}`.
#[derive(Debug, Clone)]
pub struct ExternalEmbedder {
    endpoint: String,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl ExternalEmbedder {
    pub fn new(endpoint: impl Into<String>, dim: usize) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Provider(e.to_string()))?;
        Ok(ExternalEmbedder {
            endpoint: endpoint.into(),
            dim,
            client,
        })
    }
}

fn validate_vectors(raw: Vec<Vec<f64>>, expected: usize, dim: usize) -> Result<Vec<EmbeddingVector>> {
    if raw.len() != expected {
        return Err(Error::Provider(format!(
            "expected {expected} vectors, got {}",
            raw.len()
        )));
    }
    raw.into_iter()
        .map(|values| {
            if values.len() != dim {
                return Err(Error::DimensionMismatch(values.len(), dim));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Provider("non-finite embedding component".into()));
            }
            Ok(EmbeddingVector { values })
        })
        .collect()
}

impl EmbeddingProvider for ExternalEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed_paragraphs(&self, items: &[(&EntitySet, &str)]) -> Result<Vec<EmbeddingVector>> {
        let req = EmbedRequest {
            texts: items.iter().map(|(_, t)| *t).collect(),
        };
        let resp: EmbedResponse = self
            .client
            .post(&self.endpoint)
            .json(&req)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| Error::Provider(e.to_string()))?;
        validate_vectors(resp.vectors, items.len(), self.dim)
    }
}

/// Mean of the paragraph vectors, re-normalized.
pub fn embed_document(paragraph_vectors: &[EmbeddingVector]) -> Result<EmbeddingVector> {
    let first = paragraph_vectors
        .first()
        .ok_or_else(|| Error::invalid("document has no paragraph vectors"))?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for v in paragraph_vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch(v.dim(), dim));
        }
        sum.iter_mut().zip(&v.values).for_each(|(s, x)| *s += x);
    }
    let n = paragraph_vectors.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(EmbeddingVector { values: sum }.normalized())
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    /// Row-major `n × n`.
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn index_map(&self) -> HashMap<&str, usize> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect()
    }

    pub fn by_ids(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.get(self.index_of(a)?, self.index_of(b)?))
    }
}

pub fn similarity_matrix(ids: &[String], vectors: &[EmbeddingVector]) -> Result<SimilarityMatrix> {
    if ids.len() != vectors.len() {
        return Err(Error::invalid(format!(
            "{} ids but {} vectors",
            ids.len(),
            vectors.len()
        )));
    }
    let n = ids.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = if vectors[i].is_zero() { 0.0 } else { 1.0 };
        for j in i + 1..n {
            let c = cosine(&vectors[i], &vectors[j])?;
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(SimilarityMatrix {
        ids: ids.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoOccurrence {
    pub set_a: String,
    pub set_b: String,
    pub shared: Vec<Entity>,
    pub strength: usize,
}

pub fn co_occurrence(a: &EntitySet, b: &EntitySet) -> CoOccurrence {
    let mut shared: Vec<Entity> = a
        .entities
        .iter()
        .filter(|e| b.contains(e))
        .cloned()
        .collect();
    shared.sort();
    shared.dedup();
    CoOccurrence {
        set_a: a.id.clone(),
        set_b: b.id.clone(),
        strength: shared.len(),
        shared,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub topic_of: Vec<usize>,
    pub top_terms: Vec<Vec<String>>,
    pub topic_color_index: Vec<usize>,
    /// k-means objective after each assignment step.
    pub inertia_history: Vec<f64>,
}

impl TopicAssignment {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const KMEANS_MAX_ITERS: usize = 100;
const TOP_TERMS: usize = 5;

/// Seeded k-means (k-means++ init) over document vectors, with
/// class-level TF-IDF term ranking. `doc_terms[i]` lists the entity terms of
/// document `i`, with multiplicity.
pub fn assign_topics(
    doc_vectors: &[EmbeddingVector],
    doc_terms: &[Vec<String>],
    k: usize,
    seed: u64,
) -> Result<TopicAssignment> {
    let n = doc_vectors.len();
    if k == 0 {
        return Err(Error::invalid("topic count must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("{k} topics for {n} documents")));
    }
    if doc_terms.len() != n {
        return Err(Error::invalid("doc_terms not aligned with doc_vectors"));
    }
    let dim = doc_vectors[0].dim();
    if let Some(v) = doc_vectors.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch(v.dim(), dim));
    }
    let points: Vec<&[f64]> = doc_vectors.iter().map(|v| v.values.as_slice()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![points[rng.gen_range(0..n)].to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        let c = points[pick].to_vec();
        for (d, p) in d2.iter_mut().zip(&points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }

    let mut assign = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, dist) = centers
                .iter()
                .enumerate()
                .map(|(c, center)| (c, sq_dist(p, center)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            inertia += dist;
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p.iter()).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                let cnt = counts[c] as f64;
                centers[c] = sums[c].iter().map(|s| s / cnt).collect();
            }
        }
    }

    // Class-level TF-IDF over entity terms.
    let mut tf: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); k];
    for (terms, &c) in doc_terms.iter().zip(&assign) {
        for t in terms {
            *tf[c].entry(t.as_str()).or_default() += 1;
        }
    }
    let mut cf: HashMap<&str, usize> = HashMap::new();
    for cluster in &tf {
        for t in cluster.keys() {
            *cf.entry(t).or_default() += 1;
        }
    }
    let top_terms = tf
        .iter()
        .map(|cluster| {
            let mut scored: Vec<(&str, f64)> = cluster
                .iter()
                .map(|(t, &f)| (*t, f as f64 * (1.0 + k as f64 / cf[t] as f64).ln()))
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
            scored
                .into_iter()
                .take(TOP_TERMS)
                .map(|(t, _)| t.to_string())
                .collect()
        })
        .collect();

    Ok(TopicAssignment {
        topic_color_index: assign.iter().map(|&c| c % crate::color::CATEGORICAL.len()).collect(),
        topic_of: assign,
        top_terms,
        inertia_history: history,
    })
}
