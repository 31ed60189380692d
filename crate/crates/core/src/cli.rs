//! Command-line front end for the pipeline stages.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::metrics::write_results;
use crate::pipeline::stages::{self, Layout};
use crate::pipeline::{parse_train_percentages, PipelineConfig, PipelineError};

#[derive(Debug, Parser)]
#[command(name = "hyperwalk", version, about = "Hypergraph walks, embeddings and hyperedge classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for walk generation and embedding (1 = sequential,
    /// bit-reproducible).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output root.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArg {
    /// Split as train:test or train:validation:test percentages, e.g.
    /// `50:50`; defaults to the first split of the config.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the dataset and write the hypergraph, labels and features.
    Ingest(Common),
    /// Generate vertex and hyperedge walk corpora.
    Walks(Common),
    /// Train vertex and hyperedge embeddings on the corpora.
    Embed(Common),
    /// Train and test the classifier on one split.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        split: SplitArg,
    },
    /// Re-score a trained model on its test split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        split: SplitArg,
    },
    /// Run every stage for every run and split; writes metrics.csv.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Train percentages, e.g. `10,30,50` (test gets the rest).
        #[arg(long)]
        splits: Option<String>,
        /// Number of runs; run r uses seed + r.
        #[arg(long)]
        runs: Option<usize>,
    },
}

fn parse_split(text: &str) -> Result<Vec<f64>, PipelineError> {
    let parts = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map(|x| x / 100.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| PipelineError::Config(format!("bad split {text:?}; expected e.g. 50:50")))?;
    if !(2..=3).contains(&parts.len()) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(PipelineError::Config(format!("split {text:?} must have 2 or 3 parts summing to 100")));
    }
    Ok(parts)
}

fn load(common: &Common) -> Result<(PipelineConfig, Layout), PipelineError> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.jobs == 0 {
        return Err(PipelineError::Config("--jobs must be at least 1".into()));
    }
    cfg.vertex_embedding.workers = common.jobs;
    cfg.hyperedge_embedding.workers = common.jobs;
    // The global pool may already exist when called more than once in a process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(common.jobs).build_global();
    Ok((cfg, Layout::new(&common.out)))
}

fn chosen_split(cfg: &PipelineConfig, arg: &SplitArg) -> Result<Vec<f64>, PipelineError> {
    match &arg.split {
        Some(s) => parse_split(s),
        None => Ok(cfg.splits[0].clone()),
    }
}

/// Runs one command; the caller maps errors to exit codes.
pub fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest(common) => {
            let (cfg, layout) = load(&common)?;
            stages::ingest(&cfg, &layout)?;
        }
        Command::Walks(common) => {
            let (cfg, layout) = load(&common)?;
            stages::walks(&cfg, &layout, cfg.seed)?;
        }
        Command::Embed(common) => {
            let (cfg, layout) = load(&common)?;
            stages::embed(&cfg, &layout, cfg.seed)?;
        }
        Command::Train { common, split } => {
            let (cfg, layout) = load(&common)?;
            let fractions = chosen_split(&cfg, &split)?;
            let (_, scores) = stages::train(&cfg, &layout, cfg.seed, &fractions)?;
            println!(
                "{} seed {}: micro_f1 {:.6} macro_f1 {:.6} accuracy {:.6}",
                scores.split, scores.seed, scores.micro_f1, scores.macro_f1, scores.accuracy
            );
        }
        Command::Eval { common, split } => {
            let (cfg, layout) = load(&common)?;
            let fractions = chosen_split(&cfg, &split)?;
            let row = stages::eval(&cfg, &layout, cfg.seed, &fractions)?;
            write_results(std::io::stdout().lock(), &[row]).map_err(|e| PipelineError::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?;
        }
        Command::Pipeline { common, splits, runs } => {
            let (mut cfg, layout) = load(&common)?;
            if let Some(s) = splits {
                cfg.splits = parse_train_percentages(&s)?;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            cfg.validate()?;
            let rows = stages::pipeline(&cfg, &layout)?;
            write_results(std::io::stdout().lock(), &rows).map_err(|e| PipelineError::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_pipeline_flags() {
        let cli = Cli::try_parse_from([
            "hyperwalk", "pipeline", "--config", "c.json", "--out", "o", "--splits", "10,30,50", "--runs", "5", "--seed",
            "3", "--jobs", "2",
        ])
        .unwrap();
        match cli.command {
            Command::Pipeline { common, splits, runs } => {
                assert_eq!(common.seed, Some(3));
                assert_eq!(common.jobs, 2);
                assert_eq!(splits.as_deref(), Some("10,30,50"));
                assert_eq!(runs, Some(5));
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn split_flag() {
        assert_eq!(parse_split("80:10:10").unwrap(), vec![0.8, 0.1, 0.1]);
        assert!(parse_split("80:10").is_err());
        assert!(parse_split("a:b").is_err());
    }
}
