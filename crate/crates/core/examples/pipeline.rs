//! The staged pipeline with on-disk artifacts and manifests. Runs the
//! config given as the first argument, or a small planted dataset, into a
//! temporary directory (or the second argument) and prints the results CSV.

use std::path::PathBuf;

use hyperwalk::pipeline::stages::{pipeline, Layout};
use hyperwalk::pipeline::PipelineConfig;
use hyperwalk::metrics::write_results;

const SMALL: &str = r#"{
  "version": 1,
  "dataset": {
    "kind": "planted",
    "name": "small",
    "planted": {"communities": 8, "community_size": 10, "positives": 120, "max_cardinality": 8},
    "negatives": {"scheme": "empirical_cardinality"}
  },
  "walks": {"walks_per_start": 5, "walk_length": 20},
  "vertex_embedding": {"dim": 8, "epochs": 1},
  "hyperedge_embedding": {"dim": 16, "epochs": 1},
  "model": {"hidden_width": 24, "epochs": 30},
  "splits": [[0.5, 0.5], [0.8, 0.1, 0.1]],
  "runs": 2,
  "seed": 1
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = match args.first() {
        Some(path) => PipelineConfig::load(path.as_ref())?,
        None => PipelineConfig::from_json(SMALL, ".".as_ref())?,
    };
    let scratch = tempfile::tempdir()?;
    let root = args.get(1).map(PathBuf::from).unwrap_or_else(|| scratch.path().to_path_buf());
    let rows = pipeline(&cfg, &Layout::new(&root))?;
    write_results(std::io::stdout(), &rows)?;
    println!("artifacts under {}", root.display());
    Ok(())
}
