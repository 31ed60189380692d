use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::datasets::{NegativeScheme, NeighborhoodMode, Relabel};
use crate::datasets::synthetic::PlantedConfig;
use crate::dhe::DheConfig;
use crate::sgns::SgnsConfig;
use crate::walks::WalkConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativeSpec {
    pub scheme: NegativeScheme,
    #[serde(default = "one")]
    pub ratio: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// `id f1..fk label` content file plus `citing cited` pairs.
    Citation {
        name: String,
        content: PathBuf,
        cites: PathBuf,
        #[serde(default)]
        feature_width: Option<usize>,
        #[serde(default)]
        neighborhood: NeighborhoodMode,
        /// Keep this share of papers by snowball sampling.
        #[serde(default)]
        subsample: Option<f64>,
    },
    /// JSON-lines set records.
    Sets {
        name: String,
        path: PathBuf,
        #[serde(default)]
        relabel: Option<Relabel>,
        #[serde(default)]
        negatives: Option<NegativeSpec>,
    },
    /// Generated planted-community sets.
    Planted {
        name: String,
        #[serde(default)]
        planted: PlantedConfig,
        #[serde(default)]
        negatives: Option<NegativeSpec>,
    },
}

impl DatasetSpec {
    pub fn name(&self) -> &str {
        match self {
            DatasetSpec::Citation { name, .. } | DatasetSpec::Sets { name, .. } | DatasetSpec::Planted { name, .. } => {
                name
            }
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetSpec::Citation { content, cites, .. } => {
                fix(content);
                fix(cites);
            }
            DatasetSpec::Sets { path, .. } => fix(path),
            DatasetSpec::Planted { .. } => {}
        }
    }

    pub fn input_paths(&self) -> Vec<PathBuf> {
        match self {
            DatasetSpec::Citation { content, cites, .. } => vec![content.clone(), cites.clone()],
            DatasetSpec::Sets { path, .. } => vec![path.clone()],
            DatasetSpec::Planted { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub walks: WalkConfig,
    #[serde(default = "vertex_sgns")]
    pub vertex_embedding: SgnsConfig,
    #[serde(default = "hyperedge_sgns")]
    pub hyperedge_embedding: SgnsConfig,
    #[serde(default)]
    pub model: DheConfig,
    /// Each entry lists train[:validation]:test fractions.
    #[serde(default = "default_splits")]
    pub splits: Vec<Vec<f64>>,
    #[serde(default = "one_run")]
    pub runs: usize,
    /// Run `r` uses seed `seed + r`.
    #[serde(default)]
    pub seed: u64,
}

fn vertex_sgns() -> SgnsConfig {
    SgnsConfig::with_dim(16)
}

fn hyperedge_sgns() -> SgnsConfig {
    SgnsConfig::with_dim(128)
}

fn default_splits() -> Vec<Vec<f64>> {
    vec![vec![0.5, 0.5]]
}

fn one_run() -> usize {
    1
}

impl PipelineConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            dataset,
            walks: WalkConfig::default(),
            vertex_embedding: vertex_sgns(),
            hyperedge_embedding: hyperedge_sgns(),
            model: DheConfig::default(),
            splits: default_splits(),
            runs: 1,
            seed: 0,
        }
    }

    /// Parses a config; relative dataset paths resolve against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.dataset.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Missing {
            what: "config file".into(),
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.version != CONFIG_VERSION {
            return fail(format!("config version {} is not supported (expected {CONFIG_VERSION})", self.version));
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.splits.is_empty() {
            return fail("at least one split is required".into());
        }
        for s in &self.splits {
            if !(2..=3).contains(&s.len()) || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return fail(format!("split {s:?} must have 2 or 3 fractions summing to 1"));
            }
        }
        self.walks.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.vertex_embedding.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.hyperedge_embedding.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut model = self.model.clone();
        model.classes = model.classes.max(2);
        model.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Parses `10,30,50` into train:test splits `[0.1, 0.9]`, ...
pub fn parse_train_percentages(text: &str) -> Result<Vec<Vec<f64>>, PipelineError> {
    text.split(',')
        .map(|p| {
            let pct: f64 = p
                .trim()
                .parse()
                .map_err(|_| PipelineError::Config(format!("bad split percentage {p:?}")))?;
            if !(pct > 0.0 && pct < 100.0) {
                return Err(PipelineError::Config(format!("split percentage {pct} must lie in (0, 100)")));
            }
            Ok(vec![pct / 100.0, 1.0 - pct / 100.0])
        })
        .collect()
}
