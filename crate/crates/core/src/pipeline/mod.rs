//! End-to-end experiments: dataset → walks → embeddings → classifier →
//! scores, in memory ([`run_experiment`]) or as file-producing stages
//! ([`stages`]).

mod config;
pub mod manifest;
pub mod stages;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{parse_train_percentages, DatasetSpec, NegativeSpec, PipelineConfig, CONFIG_VERSION};

use crate::datasets::{self, synthetic, DatasetError, LabeledSplit, SetDataset};
use crate::dhe::{self, DheConfig, DheError, DheModel, History};
use crate::hypergraph::Hypergraph;
use crate::metrics::{ConfusionMatrix, MetricsError, ResultRow};
use crate::rng::derive_seed;
use crate::sgns::{self, EmbeddingTable, SgnsError};
use crate::walks::{self, WalkError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing {what} at {}: {message}", path.display())]
    Missing {
        what: String,
        path: PathBuf,
        message: String,
    },
    #[error("hash mismatch for {}: manifest records {expected}, file has {found}", path.display())]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("i/o error at {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Embedding(#[from] SgnsError),
    #[error(transparent)]
    Model(#[from] DheError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl PipelineError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 3,
            PipelineError::Missing { .. } => 4,
            PipelineError::HashMismatch { .. } => 5,
            PipelineError::Io { .. } => 6,
            PipelineError::Dataset(_) => 7,
            PipelineError::Walk(_) | PipelineError::Embedding(_) => 8,
            PipelineError::Model(_) | PipelineError::Metrics(_) => 9,
        }
    }
}

/// A dataset turned into a labeled hypergraph.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub name: String,
    pub hypergraph: Hypergraph,
    /// One label per hyperedge.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub hyperedge_names: Vec<String>,
    pub features: Option<Vec<Vec<f64>>>,
}

impl Prepared {
    pub fn from_sets(name: &str, d: &SetDataset) -> Result<Self, PipelineError> {
        Ok(Prepared {
            name: name.to_string(),
            hypergraph: d.hypergraph()?,
            labels: d.labels(),
            class_names: d.class_names.clone(),
            hyperedge_names: d.records.iter().map(|r| r.id.clone()).collect(),
            features: None,
        })
    }
}

fn with_negatives(d: SetDataset, negatives: &Option<NegativeSpec>, seed: u64) -> Result<SetDataset, PipelineError> {
    Ok(match negatives {
        Some(n) => datasets::synthesize_negatives(&d, n.scheme, n.ratio, seed)?,
        None => d,
    })
}

/// Loads and converts the configured dataset. `seed` drives subsampling,
/// multi-label picks and negative synthesis.
pub fn prepare(spec: &DatasetSpec, seed: u64) -> Result<Prepared, PipelineError> {
    let prepared = match spec {
        DatasetSpec::Citation {
            name,
            content,
            cites,
            feature_width,
            neighborhood,
            subsample,
        } => {
            let mut d = datasets::ingest_citation(content, cites, *feature_width)?;
            if d.skipped_citations > 0 {
                log::warn!("{name}: skipped {} citations naming unknown papers", d.skipped_citations);
            }
            if let Some(f) = subsample {
                d = d.subsample(*f, seed)?;
                log::info!("{name}: subsampled to {} papers", d.n_papers());
            }
            let (hypergraph, centroid) = datasets::neighborhood_hypergraph(&d, *neighborhood)?;
            Prepared {
                name: name.clone(),
                hypergraph,
                labels: centroid.iter().map(|&p| d.labels[p]).collect(),
                class_names: d.class_names.clone(),
                hyperedge_names: centroid.iter().map(|&p| d.paper_ids[p].clone()).collect(),
                features: Some(centroid.iter().map(|&p| d.features[p].clone()).collect()),
            }
        }
        DatasetSpec::Sets {
            name,
            path,
            relabel,
            negatives,
        } => {
            let reader = datasets_open(path)?;
            let d = datasets::parse_set_dataset(reader, &path.display().to_string(), relabel.as_ref(), seed)?;
            Prepared::from_sets(name, &with_negatives(d, negatives, seed)?)?
        }
        DatasetSpec::Planted {
            name,
            planted,
            negatives,
        } => {
            let d = synthetic::planted_communities(planted)?;
            Prepared::from_sets(name, &with_negatives(d, negatives, seed)?)?
        }
    };
    if !prepared.hypergraph.is_connected() {
        log::warn!(
            "{}: hypergraph has {} connected components",
            prepared.name,
            prepared.hypergraph.vertex_components().len()
        );
    }
    Ok(prepared)
}

fn datasets_open(path: &std::path::Path) -> Result<std::io::BufReader<std::fs::File>, PipelineError> {
    std::fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(|e| PipelineError::Missing {
            what: "dataset file".into(),
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

const WALK_STREAM: u64 = 1;
const VERTEX_STREAM: u64 = 2;
const HYPEREDGE_STREAM: u64 = 3;
const SPLIT_STREAM: u64 = 4;
const MODEL_STREAM: u64 = 5;

/// Seeds of every stochastic stage of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub walks: u64,
    pub vertex_embedding: u64,
    pub hyperedge_embedding: u64,
}

impl RunSeeds {
    pub fn new(cfg: &PipelineConfig, run_seed: u64) -> Self {
        RunSeeds {
            walks: derive_seed(run_seed, &[WALK_STREAM, cfg.walks.seed]),
            vertex_embedding: derive_seed(run_seed, &[VERTEX_STREAM, cfg.vertex_embedding.seed]),
            hyperedge_embedding: derive_seed(run_seed, &[HYPEREDGE_STREAM, cfg.hyperedge_embedding.seed]),
        }
    }
}

/// `[0.5, 0.5]` → `50:50`.
pub fn split_name(fractions: &[f64]) -> String {
    fractions
        .iter()
        .map(|f| format!("{}", (f * 100.0).round()))
        .collect::<Vec<_>>()
        .join(":")
}

/// Stable key for a split's fractions, used in seeds.
fn split_key(fractions: &[f64]) -> u64 {
    fractions.iter().fold(0, |acc, f| acc * 1001 + (f * 1000.0).round() as u64)
}

pub fn split_seed(run_seed: u64, fractions: &[f64]) -> u64 {
    derive_seed(run_seed, &[SPLIT_STREAM, split_key(fractions)])
}

pub fn model_seed(cfg: &DheConfig, run_seed: u64, fractions: &[f64]) -> u64 {
    derive_seed(run_seed, &[MODEL_STREAM, split_key(fractions), cfg.seed])
}

/// Vertex and hyperedge embeddings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEmbeddings {
    pub vertex: EmbeddingTable,
    pub hyperedge: EmbeddingTable,
}

pub fn walk_corpora(
    h: &Hypergraph,
    cfg: &PipelineConfig,
    run_seed: u64,
) -> Result<(walks::WalkCorpus, walks::WalkCorpus), PipelineError> {
    let mut wc = cfg.walks;
    wc.seed = RunSeeds::new(cfg, run_seed).walks;
    Ok((walks::generate_vertex_corpus(h, &wc)?, walks::generate_hyperedge_corpus(h, &wc)?))
}

pub fn embed_corpora(
    vertex_corpus: &walks::WalkCorpus,
    hyperedge_corpus: &walks::WalkCorpus,
    cfg: &PipelineConfig,
    run_seed: u64,
) -> Result<RunEmbeddings, PipelineError> {
    let seeds = RunSeeds::new(cfg, run_seed);
    let mut vc = cfg.vertex_embedding;
    vc.seed = seeds.vertex_embedding;
    let mut hc = cfg.hyperedge_embedding;
    hc.seed = seeds.hyperedge_embedding;
    Ok(RunEmbeddings {
        vertex: sgns::train(vertex_corpus, &vc)?,
        hyperedge: sgns::train(hyperedge_corpus, &hc)?,
    })
}

pub fn embed(h: &Hypergraph, cfg: &PipelineConfig, run_seed: u64) -> Result<RunEmbeddings, PipelineError> {
    let (v, e) = walk_corpora(h, cfg, run_seed)?;
    embed_corpora(&v, &e, cfg, run_seed)
}

/// A trained and scored split.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub split: LabeledSplit,
    pub model: DheModel,
    pub history: History,
    pub test: ConfusionMatrix,
}

impl SplitOutcome {
    pub fn row(&self, dataset: &str, run: usize, seed: u64) -> Result<ResultRow, PipelineError> {
        Ok(ResultRow {
            dataset: dataset.to_string(),
            split: self.split.name(),
            run,
            seed,
            micro_f1: self.test.micro_f1()?,
            macro_f1: self.test.macro_f1()?,
            accuracy: self.test.accuracy()?,
        })
    }
}

/// The model config actually trained for `prepared` and this run/split.
pub fn effective_model_config(cfg: &DheConfig, prepared: &Prepared, run_seed: u64, fractions: &[f64]) -> DheConfig {
    let mut model = cfg.clone();
    model.classes = prepared.class_names.len();
    model.use_features = cfg.use_features && prepared.features.is_some();
    model.seed = model_seed(cfg, run_seed, fractions);
    model
}

pub fn run_split(
    prepared: &Prepared,
    embeddings: &RunEmbeddings,
    model_cfg: &DheConfig,
    fractions: &[f64],
    run_seed: u64,
) -> Result<SplitOutcome, PipelineError> {
    let model = effective_model_config(model_cfg, prepared, run_seed, fractions);
    let examples = dhe::build_examples(
        &prepared.hypergraph,
        &embeddings.hyperedge,
        &embeddings.vertex,
        prepared.features.as_deref().filter(|_| model.use_features),
        &prepared.labels,
    )?;
    let ids: Vec<usize> = (0..examples.len()).collect();
    let split = datasets::split(&ids, fractions, split_seed(run_seed, fractions))?;
    if split.test.is_empty() {
        return Err(PipelineError::Config(format!("split {} leaves no test hyperedges", split.name())));
    }
    let (trained, history) = dhe::train(&examples, &split.train, &split.validation, &model)?;
    let (_, test) = trained.evaluate(&examples, &split.test)?;
    Ok(SplitOutcome {
        split,
        model: trained,
        history,
        test,
    })
}

/// Every run × split of `cfg`, one result row each, runs outermost.
/// Embeddings are shared by all splits of a run.
pub fn run_experiment(cfg: &PipelineConfig) -> Result<Vec<ResultRow>, PipelineError> {
    cfg.validate()?;
    let prepared = prepare(&cfg.dataset, cfg.seed)?;
    let mut rows = Vec::new();
    for run in 0..cfg.runs {
        let run_seed = cfg.seed + run as u64;
        let embeddings = embed(&prepared.hypergraph, cfg, run_seed)?;
        for fractions in &cfg.splits {
            let outcome = run_split(&prepared, &embeddings, &cfg.model, fractions, run_seed)?;
            let row = outcome.row(&prepared.name, run, run_seed)?;
            log::info!(
                "{} {} run {run}: micro-F1 {:.4} macro-F1 {:.4}",
                row.dataset,
                row.split,
                row.micro_f1,
                row.macro_f1
            );
            rows.push(row);
        }
    }
    Ok(rows)
}
