//! Citation neighborhoods as hyperedges: one hyperedge per paper holding
//! the paper and its citation neighbors. Reads `data/cora` by default or
//! the `.content`/`.cites` pair given on the command line.

use std::path::PathBuf;

use hyperwalk::datasets::{ingest_citation, neighborhood_hypergraph, NeighborhoodMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (content, cites) = match args.as_slice() {
        [c, e] => (PathBuf::from(c), PathBuf::from(e)),
        _ => {
            let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/cora");
            (root.join("cora.content"), root.join("cora.cites"))
        }
    };
    let d = ingest_citation(&content, &cites, None)?;
    println!(
        "{} papers, {} citations ({} skipped), {} classes, {} features",
        d.n_papers(),
        d.citations.len(),
        d.skipped_citations,
        d.class_names.len(),
        d.feature_width
    );
    for mode in [NeighborhoodMode::Undirected, NeighborhoodMode::CitedOnly] {
        let (h, _) = neighborhood_hypergraph(&d, mode)?;
        let sizes: Vec<usize> = h.hyperedges().map(<[usize]>::len).collect();
        let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        println!(
            "{mode:?}: mean cardinality {mean:.2}, largest {}, singletons {}, vertex components {}",
            sizes.iter().max().unwrap(),
            sizes.iter().filter(|&&s| s == 1).count(),
            h.vertex_components().len()
        );
    }
    let sub = d.subsample(0.2, 1)?;
    println!("20% snowball subsample: {} papers, {} citations", sub.n_papers(), sub.citations.len());
    Ok(())
}
