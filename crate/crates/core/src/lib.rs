//! Core algorithms for exploring unstructured medical text.
//!
//! The pipeline runs in layers that mirror the exploration views:
//!
//! - [`corpus`]: ingest JSONL documents, segment them into paragraphs, search.
//! - [`extraction`]: typed medical entities (nine classes) and per-paragraph entity sets.
//! - [`relations`]: embeddings, cosine similarity, co-occurrence and topics.
//! - [`partition`]: paragraph graph construction and size-bounded edge-cut partitioning.
//! - [`layout`]: 3D document space and the nine-pole star map solver.
//! - [`tree`]: incremental association tree over entity sets, radial coordinates.
//! - [`focus`]: the core / donut / mantle sectional profile around one entity or set.
//! - [`pipeline`]: glue that turns a corpus into the JSON payloads consumed by the UI.

pub mod color;
pub mod corpus;
pub mod error;
pub mod extraction;
pub mod focus;
pub mod layout;
pub mod partition;
pub mod pipeline;
pub mod relations;
pub mod synth;
pub mod tree;

pub use corpus::{CorpusSnapshot, DocumentRecord, Paragraph};
pub use error::{Error, Result};
pub use extraction::{EntityMention, EntitySet, EntityType, Lexicon};
pub use focus::{FocusProfile, FocusTarget};
pub use layout::{LayoutResult, SpaceNode, StarMapState};
pub use partition::{ParagraphGraph, PartitionResult};
pub use relations::{EmbeddingVector, SimilarityMatrix, TopicAssignment};
pub use tree::AssociationTree;
