//! Documents, paragraphs, ingest and keyword search.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub title: String,
    pub body: String,
    pub paragraph_ids: Vec<String>,
    pub text_length: usize,
    #[serde(default)]
    pub topic_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub document_id: String,
    pub index: usize,
    pub text: String,
    #[serde(default)]
    pub entity_set_id: Option<String>,
}

/// An immutable, content-addressed document collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSnapshot {
    pub corpus_id: String,
    pub documents: Vec<DocumentRecord>,
    pub paragraphs: Vec<Paragraph>,
    /// Unix seconds. Not part of the content identity.
    pub created_at: u64,
    pub content_hash: String,
    doc_index: HashMap<String, usize>,
    para_index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub corpus_id: String,
    pub content_hash: String,
    pub created_at: u64,
    pub documents: usize,
    pub paragraphs: usize,
}

impl CorpusSnapshot {
    fn new(
        corpus_id: String,
        documents: Vec<DocumentRecord>,
        paragraphs: Vec<Paragraph>,
        created_at: u64,
        content_hash: String,
    ) -> Self {
        let doc_index = documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        let para_index = paragraphs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        CorpusSnapshot {
            corpus_id,
            documents,
            paragraphs,
            created_at,
            content_hash,
            doc_index,
            para_index,
        }
    }

    pub fn document(&self, id: &str) -> Option<&DocumentRecord> {
        self.doc_index.get(id).map(|&i| &self.documents[i])
    }

    pub fn paragraph(&self, id: &str) -> Option<&Paragraph> {
        self.para_index.get(id).map(|&i| &self.paragraphs[i])
    }

    pub fn paragraph_position(&self, id: &str) -> Option<usize> {
        self.para_index.get(id).copied()
    }

    pub fn document_position(&self, id: &str) -> Option<usize> {
        self.doc_index.get(id).copied()
    }

    pub fn paragraphs_of(&self, doc: &DocumentRecord) -> Vec<&Paragraph> {
        doc.paragraph_ids
            .iter()
            .filter_map(|id| self.paragraph(id))
            .collect()
    }

    pub fn meta(&self) -> CorpusMeta {
        CorpusMeta {
            corpus_id: self.corpus_id.clone(),
            content_hash: self.content_hash.clone(),
            created_at: self.created_at,
            documents: self.documents.len(),
            paragraphs: self.paragraphs.len(),
        }
    }

    /// Writes `corpus.jsonl`, `paragraphs.jsonl` and `meta.json` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_jsonl(&dir.join("corpus.jsonl"), &self.documents)?;
        write_jsonl(&dir.join("paragraphs.jsonl"), &self.paragraphs)?;
        let meta = serde_json::to_string_pretty(&self.meta())?;
        fs::write(dir.join("meta.json"), meta + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: CorpusMeta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)?;
        let documents: Vec<DocumentRecord> = read_jsonl(&dir.join("corpus.jsonl"))?;
        let paragraphs: Vec<Paragraph> = read_jsonl(&dir.join("paragraphs.jsonl"))?;
        Ok(CorpusSnapshot::new(
            meta.corpus_id,
            documents,
            paragraphs,
            meta.created_at,
            meta.content_hash,
        ))
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let content = fs::read_to_string(path)?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Directory of persisted corpora, one subdirectory per corpus id.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    root: PathBuf,
}

impl CorpusStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        CorpusStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn save(&self, snapshot: &CorpusSnapshot) -> Result<PathBuf> {
        let dir = self.root.join(&snapshot.corpus_id);
        snapshot.save(&dir)?;
        Ok(dir)
    }

    pub fn load(&self, corpus_id: &str) -> Result<CorpusSnapshot> {
        let dir = self.root.join(corpus_id);
        if corpus_id.contains(['/', '\\']) || !dir.join("meta.json").is_file() {
            return Err(Error::not_found(format!("corpus {corpus_id}")));
        }
        CorpusSnapshot::load(&dir)
    }

    pub fn list(&self) -> Result<Vec<String>> {
        if !self.root.is_dir() {
            return Ok(Vec::new());
        }
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if entry.path().join("meta.json").is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// How a document body is cut into paragraphs.
#[derive(Debug, Clone, Default)]
pub enum SegmentationRules {
    /// Split on blank lines.
    #[default]
    BlankLine,
    /// Split on blank lines and before every line matching one of the headers.
    SectionHeaders(Vec<Regex>),
}

impl SegmentationRules {
    /// Section headers common in clinical records (chief complaint, history, ...).
    pub fn clinical_sections() -> Self {
        let pattern = r"(?i)^\s*(chief complaint|history of present illness|present illness|past history|history|physical examination|specialist examination|auxiliary examination|examination|diagnosis|treatment plan|treatment|intervention|plan|medication|drug instructions|follow-up)\s*[:：]";
        SegmentationRules::SectionHeaders(vec![Regex::new(pattern).expect("static regex")])
    }

    pub fn with_headers<I, S>(patterns: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let headers = patterns
            .into_iter()
            .map(|p| Regex::new(p.as_ref()).map_err(|e| Error::invalid(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(SegmentationRules::SectionHeaders(headers))
    }

    fn is_header(&self, line: &str) -> bool {
        match self {
            SegmentationRules::BlankLine => false,
            SegmentationRules::SectionHeaders(h) => h.iter().any(|r| r.is_match(line)),
        }
    }
}

/// Segmentation output. `separators` has one more element than `paragraphs`:
/// `separators[0] + paragraphs[0] + separators[1] + ... + separators[n]`
/// reconstructs the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmented {
    pub paragraphs: Vec<String>,
    pub separators: Vec<String>,
    pub whitespace_only: bool,
}

impl Segmented {
    pub fn reconstruct(&self) -> String {
        let mut out = String::new();
        for (i, sep) in self.separators.iter().enumerate() {
            out.push_str(sep);
            if let Some(p) = self.paragraphs.get(i) {
                out.push_str(p);
            }
        }
        out
    }
}

pub fn segment_document(body: &str, rules: &SegmentationRules) -> Segmented {
    // Byte spans of trimmed blocks.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        let trimmed = line.trim();
        if trimmed.is_empty() {
            spans.extend(current.take());
            continue;
        }
        let s = line_start + (line.len() - line.trim_start().len());
        let e = line_start + line.trim_end().len();
        if rules.is_header(line) {
            spans.extend(current.take());
        }
        current = Some(match current {
            Some((cs, _)) => (cs, e),
            None => (s, e),
        });
    }
    spans.extend(current);

    let mut paragraphs = Vec::with_capacity(spans.len());
    let mut separators = Vec::with_capacity(spans.len() + 1);
    let mut cursor = 0;
    for &(s, e) in &spans {
        separators.push(body[cursor..s].to_string());
        paragraphs.push(body[s..e].to_string());
        cursor = e;
    }
    separators.push(body[cursor..].to_string());
    Segmented {
        whitespace_only: paragraphs.is_empty(),
        paragraphs,
        separators,
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawEntry {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    title: String,
    body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub snapshot: CorpusSnapshot,
    pub rejected: Vec<Rejection>,
}

fn created_at_now() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
    {
        return epoch;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Parses JSONL documents, segments them and builds a snapshot.
///
/// Malformed lines are rejected individually; the ingest fails only when no
/// document survives.
pub fn ingest_corpus<R: BufRead>(source: R, rules: &SegmentationRules) -> Result<IngestReport> {
    let mut rejected = Vec::new();
    let mut accepted: Vec<(RawEntry, Segmented)> = Vec::new();
    let mut seen_ids = HashSet::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: RawEntry = match serde_json::from_str(&line) {
            Ok(e) => e,
            Err(e) => {
                rejected.push(Rejection {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if let Some(id) = &entry.id {
            if id.trim().is_empty() || !seen_ids.insert(id.clone()) {
                rejected.push(Rejection {
                    line: line_no,
                    reason: format!("empty or duplicate id {id:?}"),
                });
                continue;
            }
        }
        let seg = segment_document(&entry.body, rules);
        if seg.whitespace_only {
            rejected.push(Rejection {
                line: line_no,
                reason: "body has no text".into(),
            });
            continue;
        }
        accepted.push((entry, seg));
    }
    for r in &rejected {
        log::warn!("ingest: line {} rejected: {}", r.line, r.reason);
    }
    if accepted.is_empty() {
        return Err(Error::invalid("ingest produced no valid documents"));
    }

    let mut hasher = Sha256::new();
    for (e, _) in &accepted {
        for part in [e.id.as_deref().unwrap_or(""), &e.title, &e.body] {
            hasher.update(part.as_bytes());
            hasher.update([0u8]);
        }
    }
    let content_hash: String = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let corpus_id = content_hash[..12].to_string();

    let mut documents = Vec::with_capacity(accepted.len());
    let mut paragraphs = Vec::new();
    for (ordinal, (entry, seg)) in accepted.into_iter().enumerate() {
        let doc_id = entry
            .id
            .clone()
            .unwrap_or_else(|| format!("{}-{ordinal:05}", &content_hash[..8]));
        let mut paragraph_ids = Vec::with_capacity(seg.paragraphs.len());
        let mut text_length = 0;
        for (index, text) in seg.paragraphs.into_iter().enumerate() {
            let id = format!("{doc_id}:p{index}");
            text_length += text.chars().count();
            paragraph_ids.push(id.clone());
            paragraphs.push(Paragraph {
                id,
                document_id: doc_id.clone(),
                index,
                text,
                entity_set_id: None,
            });
        }
        documents.push(DocumentRecord {
            id: doc_id,
            title: entry.title,
            body: entry.body,
            paragraph_ids,
            text_length,
            topic_id: None,
        });
    }
    let snapshot = CorpusSnapshot::new(
        corpus_id,
        documents,
        paragraphs,
        created_at_now(),
        content_hash,
    );
    Ok(IngestReport { snapshot, rejected })
}

/// Conjunctive, case-folded substring search over title and body.
/// Returns matching document ids sorted ascending.
pub fn search_documents<S: AsRef<str>>(
    snapshot: &CorpusSnapshot,
    keywords: &[S],
) -> Result<Vec<String>> {
    if keywords.is_empty() {
        return Err(Error::invalid("empty keyword list"));
    }
    let needles: Vec<String> = keywords
        .iter()
        .map(|k| k.as_ref().trim().to_lowercase())
        .collect();
    if needles.iter().any(String::is_empty) {
        return Err(Error::invalid("empty keyword"));
    }
    let mut hits: Vec<String> = snapshot
        .documents
        .iter()
        .filter(|d| {
            let title = d.title.to_lowercase();
            let body = d.body.to_lowercase();
            needles
                .iter()
                .all(|n| title.contains(n.as_str()) || body.contains(n.as_str()))
        })
        .map(|d| d.id.clone())
        .collect();
    hits.sort();
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(s: &str) -> Result<IngestReport> {
        ingest_corpus(s.as_bytes(), &SegmentationRules::BlankLine)
    }

    #[test]
    fn blank_line_segmentation() {
        let s = segment_document("A\n\nB\n\nC", &SegmentationRules::BlankLine);
        assert_eq!(s.paragraphs, ["A", "B", "C"]);
        assert_eq!(s.reconstruct(), "A\n\nB\n\nC");

        let s = segment_document("A", &SegmentationRules::BlankLine);
        assert_eq!(s.paragraphs, ["A"]);
    }

    #[test]
    fn whitespace_only_body_flags() {
        let s = segment_document("  \n\t\n ", &SegmentationRules::BlankLine);
        assert!(s.paragraphs.is_empty());
        assert!(s.whitespace_only);
        assert_eq!(s.reconstruct(), "  \n\t\n ");
    }

    #[test]
    fn section_header_segmentation() {
        let body = "Chief complaint: exposed bone in the jaw\nHistory: zoledronic acid for 3 years\nDiagnosis: MRONJ stage 2";
        let s = segment_document(body, &SegmentationRules::clinical_sections());
        assert_eq!(
            s.paragraphs,
            [
                "Chief complaint: exposed bone in the jaw",
                "History: zoledronic acid for 3 years",
                "Diagnosis: MRONJ stage 2"
            ]
        );
        assert_eq!(s.reconstruct(), body);
        // Non-header continuation lines stay in their section.
        let body = "History: long\ncontinued line\n\nfree text";
        let s = segment_document(body, &SegmentationRules::clinical_sections());
        assert_eq!(s.paragraphs, ["History: long\ncontinued line", "free text"]);
    }

    #[test]
    fn ingest_one_document() {
        let r = ingest(r#"{"title":"t","body":"a\n\nb\n\nc"}"#).unwrap();
        assert_eq!(r.snapshot.documents.len(), 1);
        assert_eq!(r.snapshot.paragraphs.len(), 3);
        let d = &r.snapshot.documents[0];
        assert_eq!(d.text_length, 3);
        assert_eq!(d.paragraph_ids.len(), 3);
    }

    #[test]
    fn ingest_empty_source_fails() {
        assert!(ingest("").is_err());
        assert!(ingest("not json\n").is_err());
    }

    #[test]
    fn ingest_rejects_per_line_and_continues() {
        let src = "{\"title\":\"a\",\"body\":\"x\"}\n{broken\n{\"title\":\"b\",\"body\":\"  \"}\n{\"title\":\"c\",\"body\":\"y\"}\n";
        let r = ingest(src).unwrap();
        assert_eq!(r.snapshot.documents.len(), 2);
        let lines: Vec<_> = r.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, [2, 3]);
    }

    #[test]
    fn ingest_is_deterministic() {
        let src = "{\"title\":\"a\",\"body\":\"x\\n\\ny\"}\n{\"id\":\"k\",\"title\":\"b\",\"body\":\"z\"}\n";
        let a = ingest(src).unwrap().snapshot;
        let b = ingest(src).unwrap().snapshot;
        assert_eq!(a.content_hash, b.content_hash);
        assert_eq!(a.documents, b.documents);
        assert_eq!(a.paragraphs, b.paragraphs);
        assert_eq!(a.documents[1].id, "k");
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let snap = ingest("{\"title\":\"a\",\"body\":\"x\\n\\ny\"}\n").unwrap().snapshot;
        let store = CorpusStore::new(dir.path());
        store.save(&snap).unwrap();
        assert_eq!(store.list().unwrap(), vec![snap.corpus_id.clone()]);
        let back = store.load(&snap.corpus_id).unwrap();
        assert_eq!(back, snap);
        assert!(matches!(store.load("nope"), Err(Error::NotFound(_))));
    }

    fn docs(bodies: &[(&str, &str)]) -> CorpusSnapshot {
        let src: String = bodies
            .iter()
            .map(|(id, b)| format!("{{\"id\":\"{id}\",\"title\":\"\",\"body\":\"{b}\"}}\n"))
            .collect();
        ingest(&src).unwrap().snapshot
    }

    #[test]
    fn search_is_conjunctive() {
        let s = docs(&[
            ("1", "bone pain"),
            ("2", "Bone was EXPOSED"),
            ("3", "exposed skin"),
        ]);
        assert_eq!(search_documents(&s, &["bone", "expose"]).unwrap(), ["2"]);
        assert!(search_documents(&s, &["zzz"]).unwrap().is_empty());
    }

    #[test]
    fn search_substring_sorted() {
        let s = docs(&[("3", "a"), ("1", "abc"), ("2", "xyz")]);
        assert_eq!(search_documents(&s, &["a"]).unwrap(), ["1", "3"]);
    }

    #[test]
    fn search_rejects_empty_keywords() {
        let s = docs(&[("1", "a")]);
        let none: [&str; 0] = [];
        assert!(search_documents(&s, &none).is_err());
        assert!(search_documents(&s, &["  "]).is_err());
    }
}
