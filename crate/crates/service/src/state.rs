//! Shared server state: durable corpora, cached analyses and live sessions.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use medlens_core::corpus::{ingest_corpus, CorpusSnapshot, CorpusStore, Rejection};
use medlens_core::pipeline::ProcessedCorpus;
use medlens_core::{Error, Result};
use serde::Serialize;
use tokio::sync::Mutex;

use crate::config::ServiceConfig;
use crate::session::{Session, SessionSnapshot};

pub type SessionHandle = Arc<Mutex<Session>>;

pub struct AppState {
    pub config: ServiceConfig,
    store: CorpusStore,
    session_dir: PathBuf,
    corpora: RwLock<HashMap<String, Arc<ProcessedCorpus>>>,
    sessions: RwLock<BTreeMap<String, SessionHandle>>,
    next_session: AtomicU64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub corpus_id: String,
    pub content_hash: String,
    pub documents: usize,
    pub paragraphs: usize,
    pub entity_sets: usize,
    pub rejected: Vec<Rejection>,
    pub extraction_failures: Vec<(String, String)>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            store: CorpusStore::new(config.server.corpus_dir.clone()),
            session_dir: config.server.session_dir.clone(),
            config,
            corpora: RwLock::new(HashMap::new()),
            sessions: RwLock::new(BTreeMap::new()),
            next_session: AtomicU64::new(1),
        }
    }

    pub fn store(&self) -> &CorpusStore {
        &self.store
    }

    /// Runs extraction, embedding and topics on a snapshot. Blocking.
    pub fn process(&self, snapshot: CorpusSnapshot) -> Result<ProcessedCorpus> {
        self.config.analyse(snapshot).map_err(into_core)
    }

    /// Ingests JSONL, persists the snapshot and caches its analysis. Blocking.
    pub fn ingest<R: BufRead>(&self, source: R) -> Result<IngestSummary> {
        let rules = self.config.segmentation.rules().map_err(into_core)?;
        let report = ingest_corpus(source, &rules)?;
        self.store.save(&report.snapshot)?;
        let corpus = self.process(report.snapshot)?;
        let summary = IngestSummary {
            corpus_id: corpus.corpus_id().to_string(),
            content_hash: corpus.snapshot.content_hash.clone(),
            documents: corpus.snapshot.documents.len(),
            paragraphs: corpus.snapshot.paragraphs.len(),
            entity_sets: corpus.entity_sets.iter().filter(|s| !s.is_empty()).count(),
            rejected: report.rejected,
            extraction_failures: corpus.extraction_failures.clone(),
        };
        self.corpora
            .write()
            .expect("corpus cache poisoned")
            .insert(summary.corpus_id.clone(), Arc::new(corpus));
        Ok(summary)
    }

    /// Cached analysis of a stored corpus, computed on first use. Blocking.
    pub fn corpus(&self, corpus_id: &str) -> Result<Arc<ProcessedCorpus>> {
        if let Some(c) = self.corpora.read().expect("corpus cache poisoned").get(corpus_id) {
            return Ok(c.clone());
        }
        let snapshot = self.store.load(corpus_id)?;
        let processed = Arc::new(self.process(snapshot)?);
        let mut cache = self.corpora.write().expect("corpus cache poisoned");
        Ok(cache.entry(corpus_id.to_string()).or_insert(processed).clone())
    }

    pub fn corpus_ids(&self) -> Result<Vec<String>> {
        self.store.list()
    }

    pub fn next_session_id(&self) -> String {
        format!("s{:06}", self.next_session.fetch_add(1, Ordering::SeqCst))
    }

    pub fn insert_session(&self, session: Session) -> SessionHandle {
        let id = session.session_id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id, handle.clone());
        handle
    }

    pub fn session(&self, id: &str) -> Result<SessionHandle> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::not_found(format!("session {id}")))
    }

    fn handles(&self) -> Vec<SessionHandle> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .values()
            .cloned()
            .collect()
    }

    /// Writes every modified session to the session directory and returns how
    /// many were written.
    pub async fn snapshot_sessions(&self) -> Result<usize> {
        let mut written = 0;
        for handle in self.handles() {
            let snap = {
                let mut s = handle.lock().await;
                if !s.dirty {
                    continue;
                }
                s.dirty = false;
                s.snapshot()
            };
            let dir = self.session_dir.clone();
            tokio::task::spawn_blocking(move || write_snapshot(&dir, &snap))
                .await
                .map_err(|e| Error::Io(std::io::Error::other(e)))??;
            written += 1;
        }
        Ok(written)
    }

    /// Loads saved sessions. Sessions whose corpus is gone are skipped with a
    /// warning. Blocking.
    pub fn restore_sessions(&self) -> Result<usize> {
        if !self.session_dir.is_dir() {
            return Ok(0);
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&self.session_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut restored = 0;
        for path in paths {
            let snap: SessionSnapshot = serde_json::from_slice(&std::fs::read(&path)?)?;
            let session = match self
                .corpus(&snap.corpus_id)
                .and_then(|c| Session::restore(snap, &c))
            {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("skipping session {}: {e}", path.display());
                    continue;
                }
            };
            if let Some(n) = session.session_id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                self.next_session.fetch_max(n + 1, Ordering::SeqCst);
            }
            self.sessions
                .write()
                .expect("session table poisoned")
                .insert(session.session_id.clone(), Arc::new(Mutex::new(session)));
            restored += 1;
        }
        Ok(restored)
    }
}

fn write_snapshot(dir: &std::path::Path, snap: &SessionSnapshot) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{}.json.tmp", snap.session_id));
    std::fs::write(&tmp, serde_json::to_vec_pretty(snap)?)?;
    std::fs::rename(&tmp, dir.join(format!("{}.json", snap.session_id)))?;
    Ok(())
}

fn into_core(e: crate::ServiceError) -> Error {
    match e {
        crate::ServiceError::Core(e) => e,
        other => Error::invalid(other.to_string()),
    }
}
