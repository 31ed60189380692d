//! Subsample-and-traverse walks over vertices and over hyperedges, and how
//! alpha and beta change how long a walk stays inside one hyperedge.

use hyperwalk::hypergraph::Hypergraph;
use hyperwalk::rng;
use hyperwalk::walks::{generate_hyperedge_corpus, generate_vertex_corpus, sat_walk_with, traverse_probability, WalkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a chain of overlapping hyperedges of growing size
    let mut edges = Vec::new();
    let mut start = 0;
    for size in [2, 4, 8, 16] {
        edges.push((start..start + size).collect());
        start += size - 1;
    }
    let h = Hypergraph::new(start + 1, edges)?;

    for (alpha, beta) in [(1.0, 0.0), (1.0, 0.1), (4.0, 0.0), (0.0, 1.0)] {
        let cfg = WalkConfig {
            alpha,
            beta,
            walks_per_start: 1,
            walk_length: 20_000,
            seed: 3,
        };
        let mut r = rng::stream(7, &[]);
        let (mut runs, mut steps, mut last) = (0usize, 0usize, None);
        sat_walk_with(&h, 0, &cfg, &mut r, |s| {
            if last != Some(s.hyperedge) {
                runs += 1;
                last = Some(s.hyperedge);
            }
            steps += 1;
        })?;
        let probs: Vec<String> = h
            .hyperedges()
            .map(|m| format!("{:.2}", traverse_probability(m.len(), &cfg).unwrap()))
            .collect();
        println!(
            "alpha {alpha} beta {beta}: traverse probability by hyperedge [{}], mean steps per hyperedge visit {:.2}",
            probs.join(", "),
            steps as f64 / runs as f64
        );
    }

    let cfg = WalkConfig {
        walks_per_start: 2,
        walk_length: 10,
        ..Default::default()
    };
    let vertex = generate_vertex_corpus(&h, &cfg)?;
    let hyperedge = generate_hyperedge_corpus(&h, &cfg)?;
    println!("vertex corpus: {} walks, first {:?}", vertex.len(), vertex.walks[0]);
    println!("hyperedge corpus: {} walks, first {:?}", hyperedge.len(), hyperedge.walks[0]);
    Ok(())
}
