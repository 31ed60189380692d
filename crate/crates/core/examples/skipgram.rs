//! Skip-gram embeddings from vertex walks on two loosely joined clusters:
//! vertices score higher with their own cluster than with the other one.

use hyperwalk::hypergraph::Hypergraph;
use hyperwalk::sgns::{self, SgnsConfig};
use hyperwalk::walks::{generate_vertex_corpus, WalkConfig};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for base in [0, 10] {
        for i in 0..10 {
            edges.push(vec![base + i, base + (i + 1) % 10, base + (i + 3) % 10]);
        }
    }
    edges.push(vec![0, 10]);
    let h = Hypergraph::new(20, edges)?;
    let corpus = generate_vertex_corpus(
        &h,
        &WalkConfig {
            walks_per_start: 20,
            walk_length: 30,
            ..Default::default()
        },
    )?;
    let table = sgns::train(
        &corpus,
        &SgnsConfig {
            dim: 16,
            epochs: 3,
            ..Default::default()
        },
    )?;
    let (mut same, mut other) = (Vec::new(), Vec::new());
    for a in 0..20 {
        for b in a + 1..20 {
            let c = cosine(table.vector(a), table.vector(b));
            if (a < 10) == (b < 10) {
                same.push(c)
            } else {
                other.push(c)
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("{} tokens in {} walks", corpus.token_count(), corpus.len());
    println!("mean cosine within a cluster {:.3}, across clusters {:.3}", mean(&same), mean(&other));
    println!("sigma(u1 . v2) = {:.3}, sigma(u1 . v15) = {:.3}", table.pair_score(1, 2), table.pair_score(1, 15));
    Ok(())
}
