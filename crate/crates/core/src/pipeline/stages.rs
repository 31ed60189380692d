//! File-producing pipeline stages. Every stage writes fixed file names
//! into its own directory under the output root, plus a `manifest.json`
//! with the config snapshot, seed and content hashes of inputs and
//! outputs. Downstream stages check upstream hashes before reading.
//!
//! ```text
//! <out>/ingest/                      dataset.json hypergraph.txt labels.tsv [features.tsv]
//! <out>/runs/seed-<s>/walks/         vertex.walks hyperedge.walks
//! <out>/runs/seed-<s>/embed/         vertex.emb hyperedge.emb *_embeddings.csv
//! <out>/runs/seed-<s>/train-<split>/ model.json split.json history.json scores.json
//! <out>/runs/seed-<s>/eval-<split>/  metrics.csv
//! <out>/metrics.csv, <out>/summary.csv  (pipeline)
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use super::{prepare, run_split, PipelineConfig, PipelineError, Prepared, RunEmbeddings, SplitOutcome};
use crate::datasets::LabeledSplit;
use crate::dhe::{self, DheModel, History};
use crate::hypergraph::Hypergraph;
use crate::metrics::{aggregate_runs, write_results, ConfusionMatrix, ResultRow};
use crate::sgns::EmbeddingTable;
use crate::walks::WalkCorpus;

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn make_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn config_value(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("serializable")
}

/// Directory layout of one output root.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn ingest(&self) -> PathBuf {
        self.root.join("ingest")
    }

    pub fn run(&self, seed: u64) -> PathBuf {
        self.root.join("runs").join(format!("seed-{seed}"))
    }

    pub fn walks(&self, seed: u64) -> PathBuf {
        self.run(seed).join("walks")
    }

    pub fn embed(&self, seed: u64) -> PathBuf {
        self.run(seed).join("embed")
    }

    pub fn train(&self, seed: u64, fractions: &[f64]) -> PathBuf {
        self.run(seed).join(format!("train-{}", split_tag(fractions)))
    }

    pub fn eval(&self, seed: u64, fractions: &[f64]) -> PathBuf {
        self.run(seed).join(format!("eval-{}", split_tag(fractions)))
    }
}

/// `[0.5, 0.5]` → `50-50`.
pub fn split_tag(fractions: &[f64]) -> String {
    fractions
        .iter()
        .map(|f| format!("{}", (f * 100.0).round()))
        .collect::<Vec<_>>()
        .join("-")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetMeta {
    name: String,
    n_vertices: usize,
    n_hyperedges: usize,
    class_names: Vec<String>,
    feature_width: Option<usize>,
}

pub fn ingest(cfg: &PipelineConfig, layout: &Layout) -> Result<Prepared, PipelineError> {
    let dir = layout.ingest();
    make_dir(&dir)?;
    let prepared = prepare(&cfg.dataset, cfg.seed)?;
    let mut manifest = Manifest::new("ingest", cfg.seed, config_value(cfg));
    for p in cfg.dataset.input_paths() {
        manifest.add_input(&p)?;
    }
    let h = &prepared.hypergraph;
    write_json(
        &dir.join("dataset.json"),
        &DatasetMeta {
            name: prepared.name.clone(),
            n_vertices: h.n_vertices(),
            n_hyperedges: h.n_hyperedges(),
            class_names: prepared.class_names.clone(),
            feature_width: prepared.features.as_ref().map(|f| f.first().map_or(0, Vec::len)),
        },
    )?;
    write_with(&dir.join("hypergraph.txt"), |w| h.write_canonical(w))?;
    write_with(&dir.join("labels.tsv"), |w| {
        for (e, &l) in prepared.labels.iter().enumerate() {
            writeln!(w, "{}\t{}", prepared.hyperedge_names[e], prepared.class_names[l])?;
        }
        Ok(())
    })?;
    let mut outputs = vec!["dataset.json", "hypergraph.txt", "labels.tsv"];
    if let Some(features) = &prepared.features {
        write_with(&dir.join("features.tsv"), |w| {
            for row in features {
                let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
                writeln!(w, "{}", line.join("\t"))?;
            }
            Ok(())
        })?;
        outputs.push("features.tsv");
    }
    for name in outputs {
        manifest.add_output(&dir, name)?;
    }
    manifest.write(&dir)?;
    log::info!(
        "ingested {}: {} vertices, {} hyperedges, {} classes",
        prepared.name,
        h.n_vertices(),
        h.n_hyperedges(),
        prepared.class_names.len()
    );
    Ok(prepared)
}

fn parse_error(path: &Path, line: usize, message: impl std::fmt::Display) -> PipelineError {
    io_err(path, format!("line {line}: {message}"))
}

/// Reads the ingest stage output back, verifying its hashes.
pub fn load_ingested(layout: &Layout) -> Result<Prepared, PipelineError> {
    let dir = layout.ingest();
    let manifest = Manifest::read(&dir, "ingest")?;
    let meta: DatasetMeta = read_json(&manifest.verified_output(&dir, "dataset.json")?)?;
    let hpath = manifest.verified_output(&dir, "hypergraph.txt")?;
    let hypergraph = Hypergraph::read_canonical(open(&hpath)?, Some(meta.n_vertices)).map_err(|e| io_err(&hpath, e))?;
    let lpath = manifest.verified_output(&dir, "labels.tsv")?;
    let mut labels = Vec::new();
    let mut hyperedge_names = Vec::new();
    for (i, line) in open(&lpath)?.lines().enumerate() {
        let line = line.map_err(|e| io_err(&lpath, e))?;
        let (name, class) = line.split_once('\t').ok_or_else(|| parse_error(&lpath, i + 1, "expected two columns"))?;
        let label = meta
            .class_names
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| parse_error(&lpath, i + 1, format!("unknown class {class:?}")))?;
        hyperedge_names.push(name.to_string());
        labels.push(label);
    }
    let features = match meta.feature_width {
        Some(width) => {
            let fpath = manifest.verified_output(&dir, "features.tsv")?;
            let mut rows = Vec::with_capacity(meta.n_hyperedges);
            for (i, line) in open(&fpath)?.lines().enumerate() {
                let line = line.map_err(|e| io_err(&fpath, e))?;
                let row = line
                    .split('\t')
                    .filter(|s| !s.is_empty())
                    .map(str::parse::<f64>)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| parse_error(&fpath, i + 1, e))?;
                if row.len() != width {
                    return Err(parse_error(&fpath, i + 1, format!("{} features, expected {width}", row.len())));
                }
                rows.push(row);
            }
            Some(rows)
        }
        None => None,
    };
    if labels.len() != hypergraph.n_hyperedges() || features.as_ref().is_some_and(|f| f.len() != labels.len()) {
        return Err(io_err(&dir, "ingest outputs disagree on the hyperedge count"));
    }
    Ok(Prepared {
        name: meta.name,
        hypergraph,
        labels,
        class_names: meta.class_names,
        hyperedge_names,
        features,
    })
}

pub fn walks(cfg: &PipelineConfig, layout: &Layout, seed: u64) -> Result<(), PipelineError> {
    let prepared = load_ingested(layout)?;
    let dir = layout.walks(seed);
    make_dir(&dir)?;
    let (vertex, hyperedge) = super::walk_corpora(&prepared.hypergraph, cfg, seed)?;
    let mut manifest = Manifest::new("walks", seed, config_value(cfg));
    manifest.add_input(&layout.ingest().join("hypergraph.txt"))?;
    write_with(&dir.join("vertex.walks"), |w| vertex.write(w))?;
    write_with(&dir.join("hyperedge.walks"), |w| hyperedge.write(w))?;
    manifest.add_output(&dir, "vertex.walks")?;
    manifest.add_output(&dir, "hyperedge.walks")?;
    manifest.write(&dir)?;
    log::info!("seed {seed}: {} vertex and {} hyperedge walks", vertex.len(), hyperedge.len());
    Ok(())
}

fn write_embedding_csv(path: &Path, table: &EmbeddingTable) -> Result<(), PipelineError> {
    write_with(path, |w| {
        let header: Vec<String> = (0..table.dim()).map(|i| format!("e{i}")).collect();
        writeln!(w, "token,{}", header.join(","))?;
        for t in 0..table.tokens() {
            let row: Vec<String> = table.vector(t).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{t},{}", row.join(","))?;
        }
        Ok(())
    })
}

pub fn embed(cfg: &PipelineConfig, layout: &Layout, seed: u64) -> Result<RunEmbeddings, PipelineError> {
    let wdir = layout.walks(seed);
    let wm = Manifest::read(&wdir, "walks")?;
    let read_corpus = |name: &str, vocab: usize| -> Result<WalkCorpus, PipelineError> {
        let path = wm.verified_output(&wdir, name)?;
        Ok(WalkCorpus::read(open(&path)?, Some(vocab))?)
    };
    let prepared = load_ingested(layout)?;
    let vertex_corpus = read_corpus("vertex.walks", prepared.hypergraph.n_vertices())?;
    let hyperedge_corpus = read_corpus("hyperedge.walks", prepared.hypergraph.n_hyperedges())?;
    let embeddings = super::embed_corpora(&vertex_corpus, &hyperedge_corpus, cfg, seed)?;
    let dir = layout.embed(seed);
    make_dir(&dir)?;
    let mut manifest = Manifest::new("embed", seed, config_value(cfg));
    manifest.add_input(&wdir.join("vertex.walks"))?;
    manifest.add_input(&wdir.join("hyperedge.walks"))?;
    write_with(&dir.join("vertex.emb"), |w| embeddings.vertex.write_text(w))?;
    write_with(&dir.join("hyperedge.emb"), |w| embeddings.hyperedge.write_text(w))?;
    write_embedding_csv(&dir.join("vertex_embeddings.csv"), &embeddings.vertex)?;
    write_embedding_csv(&dir.join("hyperedge_embeddings.csv"), &embeddings.hyperedge)?;
    for name in ["vertex.emb", "hyperedge.emb", "vertex_embeddings.csv", "hyperedge_embeddings.csv"] {
        manifest.add_output(&dir, name)?;
    }
    manifest.write(&dir)?;
    Ok(embeddings)
}

/// Embeddings exactly as stored by the embed stage.
pub fn load_embeddings(layout: &Layout, seed: u64) -> Result<RunEmbeddings, PipelineError> {
    let dir = layout.embed(seed);
    let m = Manifest::read(&dir, "embed")?;
    let read = |name: &str| -> Result<EmbeddingTable, PipelineError> {
        let path = m.verified_output(&dir, name)?;
        Ok(EmbeddingTable::read_text(open(&path)?)?)
    };
    Ok(RunEmbeddings {
        vertex: read("vertex.emb")?,
        hyperedge: read("hyperedge.emb")?,
    })
}

/// Test-set scores as recorded by `train` and `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scores {
    pub split: String,
    pub seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Row-major test confusion matrix.
    pub confusion: Vec<Vec<u64>>,
}

impl Scores {
    fn new(split: &LabeledSplit, seed: u64, cm: &ConfusionMatrix) -> Result<Self, PipelineError> {
        let c = cm.classes();
        Ok(Scores {
            split: split.name(),
            seed,
            micro_f1: cm.micro_f1()?,
            macro_f1: cm.macro_f1()?,
            accuracy: cm.accuracy()?,
            confusion: (0..c).map(|t| (0..c).map(|p| cm.get(t, p)).collect()).collect(),
        })
    }
}

pub fn train(
    cfg: &PipelineConfig,
    layout: &Layout,
    seed: u64,
    fractions: &[f64],
) -> Result<(SplitOutcome, Scores), PipelineError> {
    let prepared = load_ingested(layout)?;
    let embeddings = load_embeddings(layout, seed)?;
    let outcome = run_split(&prepared, &embeddings, &cfg.model, fractions, seed)?;
    let dir = layout.train(seed, fractions);
    make_dir(&dir)?;
    let mut manifest = Manifest::new("train", seed, config_value(cfg));
    manifest.add_input(&layout.embed(seed).join("vertex.emb"))?;
    manifest.add_input(&layout.embed(seed).join("hyperedge.emb"))?;
    manifest.add_input(&layout.ingest().join("labels.tsv"))?;
    let scores = Scores::new(&outcome.split, seed, &outcome.test)?;
    std::fs::write(dir.join("model.json"), outcome.model.to_json()).map_err(|e| io_err(&dir, e))?;
    write_json(&dir.join("split.json"), &outcome.split)?;
    write_json(&dir.join("history.json"), &outcome.history)?;
    write_json(&dir.join("scores.json"), &scores)?;
    for name in ["model.json", "split.json", "history.json", "scores.json"] {
        manifest.add_output(&dir, name)?;
    }
    manifest
        .extra
        .insert("model_seed".into(), serde_json::json!(outcome.model.config.seed));
    manifest.write(&dir)?;
    log::info!(
        "seed {seed} split {}: test micro-F1 {:.4} macro-F1 {:.4}",
        scores.split,
        scores.micro_f1,
        scores.macro_f1
    );
    Ok((outcome, scores))
}

/// Re-scores a stored model on its stored test split.
pub fn eval(cfg: &PipelineConfig, layout: &Layout, seed: u64, fractions: &[f64]) -> Result<ResultRow, PipelineError> {
    let tdir = layout.train(seed, fractions);
    let tm = Manifest::read(&tdir, "train")?;
    let model_text = std::fs::read_to_string(tm.verified_output(&tdir, "model.json")?).map_err(|e| io_err(&tdir, e))?;
    let model = DheModel::from_json(&model_text)?;
    let split: LabeledSplit = read_json(&tm.verified_output(&tdir, "split.json")?)?;
    let _: History = read_json(&tm.verified_output(&tdir, "history.json")?)?;
    let prepared = load_ingested(layout)?;
    let embeddings = load_embeddings(layout, seed)?;
    let examples = dhe::build_examples(
        &prepared.hypergraph,
        &embeddings.hyperedge,
        &embeddings.vertex,
        prepared.features.as_deref().filter(|_| model.config.use_features),
        &prepared.labels,
    )?;
    let (_, cm) = model.evaluate(&examples, &split.test)?;
    let row = ResultRow {
        dataset: prepared.name.clone(),
        split: split.name(),
        run: 0,
        seed,
        micro_f1: cm.micro_f1()?,
        macro_f1: cm.macro_f1()?,
        accuracy: cm.accuracy()?,
    };
    let dir = layout.eval(seed, fractions);
    make_dir(&dir)?;
    let mut manifest = Manifest::new("eval", seed, config_value(cfg));
    manifest.add_input(&tdir.join("model.json"))?;
    manifest.add_input(&tdir.join("split.json"))?;
    write_with(&dir.join("metrics.csv"), |w| write_results(w, std::slice::from_ref(&row)))?;
    write_json(&dir.join("scores.json"), &Scores::new(&split, seed, &cm)?)?;
    manifest.add_output(&dir, "metrics.csv")?;
    manifest.add_output(&dir, "scores.json")?;
    manifest.write(&dir)?;
    Ok(row)
}

/// Ingest once, then walks → embed → train → eval for every run and
/// split. Writes `metrics.csv` (one row per run and split) and
/// `summary.csv` (mean and sample standard deviation per split).
pub fn pipeline(cfg: &PipelineConfig, layout: &Layout) -> Result<Vec<ResultRow>, PipelineError> {
    cfg.validate()?;
    make_dir(&layout.root)?;
    ingest(cfg, layout)?;
    let mut rows = Vec::new();
    for run in 0..cfg.runs {
        let seed = cfg.seed + run as u64;
        walks(cfg, layout, seed)?;
        embed(cfg, layout, seed)?;
        for fractions in &cfg.splits {
            train(cfg, layout, seed, fractions)?;
            let mut row = eval(cfg, layout, seed, fractions)?;
            row.run = run;
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| {
        let key = |r: &ResultRow| cfg.splits.iter().position(|s| super::split_name(s) == r.split);
        key(a).cmp(&key(b)).then(a.run.cmp(&b.run))
    });
    write_with(&layout.root.join("metrics.csv"), |w| write_results(w, &rows))?;
    write_summary(&layout.root.join("summary.csv"), &rows)?;
    let mut manifest = Manifest::new("pipeline", cfg.seed, config_value(cfg));
    manifest.add_output(&layout.root, "metrics.csv")?;
    manifest.add_output(&layout.root, "summary.csv")?;
    manifest.write(&layout.root)?;
    Ok(rows)
}

type Metric = (&'static str, fn(&ResultRow) -> f64);

fn write_summary(path: &Path, rows: &[ResultRow]) -> Result<(), PipelineError> {
    let mut groups: BTreeMap<(String, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.dataset.clone(), r.split.clone())).or_default().push(r);
    }
    let mut lines = vec!["dataset,split,metric,mean,stddev,runs".to_string()];
    for ((dataset, split), group) in groups {
        let metrics: [Metric; 3] = [
            ("micro_f1", |r| r.micro_f1),
            ("macro_f1", |r| r.macro_f1),
            ("accuracy", |r| r.accuracy),
        ];
        for (name, get) in metrics {
            let s = aggregate_runs(&group.iter().map(|r| get(r)).collect::<Vec<_>>())?;
            lines.push(format!("{dataset},{split},{name},{:.6},{:.6},{}", s.mean, s.stddev, s.runs));
        }
    }
    std::fs::write(path, lines.join("\n") + "\n").map_err(|e| io_err(path, e))
}
