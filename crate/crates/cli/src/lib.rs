//! Subcommands of the `medlens` binary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use medlens_core::corpus::{ingest_corpus, CorpusSnapshot, CorpusStore};
use medlens_core::pipeline::{run_pipeline, ProcessedCorpus, SelectionPolicy};
use medlens_core::synth::{synth_documents, write_jsonl};
use medlens_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "medlens", version, about = "Explore entity structure in medical text collections")]
pub struct Cli {
    /// TOML configuration file; `MEDLENS_*` variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic clinical corpus as JSONL.
    Synth {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest JSONL files (or directories of them) into the corpus store.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Corpus store directory; defaults to `server.corpus_dir`.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        /// Overrides `server.listen`.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Search a corpus and export every view payload as JSON files.
    Pipeline {
        /// Stored corpus id or path to a JSONL file.
        #[arg(long)]
        corpus: String,
        #[arg(long, num_args = 1.., required = true)]
        query: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        max_subgraph_size: Option<usize>,
        #[arg(long, default_value_t = SelectionPolicy::default().max_documents)]
        max_documents: usize,
        #[arg(long, default_value_t = SelectionPolicy::default().tree_parts)]
        tree_parts: usize,
    },
    /// Write paragraph then document embeddings as little-endian f64 bytes.
    Embed {
        /// Stored corpus id or path to a JSONL file.
        #[arg(long)]
        corpus: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = ServiceConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synth { count, seed, out } => {
            let docs = synth_documents(count, seed);
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            write_jsonl(&docs, &mut w)?;
            w.flush()?;
            eprintln!("wrote {} documents to {}", docs.len(), out.display());
        }
        Command::Ingest { paths, store } => {
            let store = CorpusStore::new(store.unwrap_or_else(|| config.server.corpus_dir.clone()));
            let mut out = std::io::stdout().lock();
            for file in expand_inputs(&paths)? {
                let snapshot = read_snapshot(&config, &file)?;
                let dir = store.save(&snapshot)?;
                let meta = snapshot.meta();
                writeln!(out, "{}", serde_json::to_string(&meta)?)?;
                log::info!("{} -> {}", file.display(), dir.display());
            }
        }
        Command::Serve { listen } => {
            if let Some(l) = listen {
                config.server.listen = l;
            }
            tokio::runtime::Runtime::new()?.block_on(medlens_service::serve(config))?;
        }
        Command::Pipeline {
            corpus,
            query,
            out,
            seed,
            store,
            theta,
            max_subgraph_size,
            max_documents,
            tree_parts,
        } => {
            if let Some(t) = theta {
                config.analysis.theta = t;
            }
            if let Some(m) = max_subgraph_size {
                config.analysis.max_subgraph_size = m;
            }
            config.validate()?;
            let start = Instant::now();
            let processed = load_processed(&config, &corpus, store)?;
            let policy = SelectionPolicy {
                max_documents,
                tree_parts,
            };
            let output = run_pipeline(&processed, &query, &config.analysis, &policy, seed)?;
            output.write_to(&out)?;
            eprintln!(
                "{} hits, {} subgraphs, {} tree sets; wrote {} in {:.2}s",
                output.search.results.len(),
                output.starmap.subgraphs.len(),
                output.tree.mes_count,
                out.display(),
                start.elapsed().as_secs_f64()
            );
        }
        Command::Embed { corpus, out, store } => {
            let processed = load_processed(&config, &corpus, store)?;
            let mut w = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            for v in processed.paragraph_vectors.iter().chain(&processed.document_vectors) {
                w.write_all(&v.to_le_bytes())?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Files named directly plus every `*.jsonl` inside named directories, sorted.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("no .jsonl files in {}", p.display());
            }
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            bail!("{} does not exist", p.display());
        }
    }
    Ok(out)
}

fn read_snapshot(config: &ServiceConfig, path: &Path) -> Result<CorpusSnapshot> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let report = ingest_corpus(BufReader::new(file), &config.segmentation.rules()?)?;
    for r in &report.rejected {
        log::warn!("{}:{}: {}", path.display(), r.line, r.reason);
    }
    Ok(report.snapshot)
}

/// Reads `corpus` as a JSONL path if one exists, else loads it from the store.
fn load_processed(config: &ServiceConfig, corpus: &str, store: Option<PathBuf>) -> Result<ProcessedCorpus> {
    let path = Path::new(corpus);
    let snapshot = if path.is_file() {
        read_snapshot(config, path)?
    } else {
        CorpusStore::new(store.unwrap_or_else(|| config.server.corpus_dir.clone())).load(corpus)?
    };
    Ok(config.analyse(snapshot)?)
}
