//! Library results against independent reference computations.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use hyperwalk::datasets::synthetic::{planted_communities, PlantedConfig};
use hyperwalk::datasets::{
    ingest_citation, neighborhood_hypergraph, parse_citation, synthesize_negatives, NegativeScheme, NeighborhoodMode,
};
use hyperwalk::hypergraph::Hypergraph;
use hyperwalk::rng;
use hyperwalk::sgns::{self, SgnsConfig};
use hyperwalk::walks::{generate_hyperedge_corpus, traverse_probability, TokenSpace, WalkConfig, WalkCorpus};
use rand::Rng;

use common::random_covered_hypergraph;

/// TaS walks written directly against the primal hypergraph: the walk sits
/// on a hyperedge, dwells inside the set of hyperedges sharing a pivot
/// vertex, and moves the pivot to another member of the current hyperedge
/// when it traverses. Consumes randomness in the same order as a walk on
/// the dual.
fn direct_tas(h: &Hypergraph, start: usize, cfg: &WalkConfig, r: &mut impl Rng) -> Vec<u32> {
    let members = h.members(start);
    let mut pivot = members[r.gen_range(0..members.len())];
    let mut edge = start;
    let mut out = Vec::new();
    for i in 0..cfg.walk_length {
        out.push(edge as u32);
        if i + 1 == cfg.walk_length {
            break;
        }
        let p = traverse_probability(h.incident(pivot).len(), cfg).unwrap();
        if r.gen::<f64>() < p {
            let m = h.members(edge);
            if m.len() > 1 {
                let k = r.gen_range(0..m.len() - 1);
                let pos = m.iter().position(|&v| v == pivot).unwrap();
                pivot = m[if k >= pos { k + 1 } else { k }];
            }
        }
        let sharing = h.incident(pivot);
        edge = sharing[r.gen_range(0..sharing.len())];
    }
    out
}

#[test]
fn hyperedge_walks_match_direct_implementation() {
    let mut r = rng::stream(0x7a5, &[]);
    for case in 0..30 {
        let h = random_covered_hypergraph(&mut r, 25, 25);
        let cfg = WalkConfig {
            alpha: r.gen_range(0.0..3.0),
            beta: r.gen_range(0.0..0.5),
            walks_per_start: 3,
            walk_length: 15,
            seed: case,
        };
        let corpus = generate_hyperedge_corpus(&h, &cfg).unwrap();
        assert_eq!(corpus.space, TokenSpace::Hyperedge);
        let mut expected = Vec::new();
        for w in 0..cfg.walks_per_start {
            for e in 0..h.n_hyperedges() {
                let mut wr = rng::stream(cfg.seed, &[e as u64, w as u64]);
                expected.push(direct_tas(&h, e, &cfg, &mut wr));
            }
        }
        assert_eq!(corpus.walks, expected, "case {case}");
    }
}

#[test]
fn alternating_pair_scores_high() {
    let corpus = WalkCorpus {
        space: TokenSpace::Vertex,
        vocab_size: 2,
        walk_length: 20,
        walks: (0..200).map(|w| (0..20).map(|i| ((i + w) % 2) as u32).collect()).collect(),
    };
    let cfg = SgnsConfig {
        dim: 8,
        window: 1,
        negatives: 1,
        epochs: 3,
        seed: 4,
        ..Default::default()
    };
    let table = sgns::train(&corpus, &cfg).unwrap();
    assert!(table.pair_score(0, 1) > 0.9, "{}", table.pair_score(0, 1));
    assert!(table.pair_score(1, 0) > 0.9, "{}", table.pair_score(1, 0));
}

fn brute_force_neighborhoods(n: usize, citations: &[(usize, usize)], undirected: bool) -> Vec<Vec<usize>> {
    (0..n)
        .map(|p| {
            (0..n)
                .filter(|&q| {
                    q == p
                        || citations.iter().any(|&(a, b)| (a == p && b == q) || (undirected && a == q && b == p))
                })
                .collect()
        })
        .collect()
}

#[test]
fn neighborhoods_match_adjacency_scan() {
    let mut r = rng::stream(0xc17e, &[]);
    for _ in 0..20 {
        let n = r.gen_range(1..40);
        let m = r.gen_range(0..120);
        let content: String = (0..n).map(|i| format!("p{i}\t{}\tc{}\n", i % 2, i % 3)).collect();
        let pairs: Vec<(usize, usize)> = (0..m).map(|_| (r.gen_range(0..n), r.gen_range(0..n))).collect();
        let cites: String = pairs.iter().map(|(a, b)| format!("p{a}\tp{b}\n")).collect();
        let d = parse_citation(content.as_bytes(), "content", cites.as_bytes(), "cites", Some(1)).unwrap();
        for (mode, undirected) in [(NeighborhoodMode::Undirected, true), (NeighborhoodMode::CitedOnly, false)] {
            let (h, centroid) = neighborhood_hypergraph(&d, mode).unwrap();
            let expected = brute_force_neighborhoods(n, &d.citations, undirected);
            let got: Vec<Vec<usize>> = h.hyperedges().map(<[usize]>::to_vec).collect();
            assert_eq!(got, expected);
            assert_eq!(centroid, (0..n).collect::<Vec<_>>());
        }
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn line_count(path: &PathBuf) -> usize {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).count()
}

#[test]
fn citation_counts_equal_file_line_counts() {
    for (name, width) in [("cora", 1433), ("pubmed", 500)] {
        let content = data_dir().join(format!("{name}/{name}.content"));
        let cites = data_dir().join(format!("{name}/{name}.cites"));
        if !content.exists() {
            eprintln!("skipping {name}: data not present");
            continue;
        }
        let d = ingest_citation(&content, &cites, Some(width)).unwrap();
        assert_eq!(d.n_papers(), line_count(&content), "{name} papers");
        assert_eq!(d.citations.len() + d.skipped_citations, line_count(&cites), "{name} citations");
        assert_eq!(d.feature_width, width);
    }
}

#[test]
fn empirical_negatives_follow_positive_cardinalities() {
    let positives = planted_communities(&PlantedConfig {
        communities: 50,
        community_size: 40,
        positives: 1000,
        max_cardinality: 12,
        ..Default::default()
    })
    .unwrap();
    let d = synthesize_negatives(&positives, NegativeScheme::EmpiricalCardinality, 10.0, 3).unwrap();
    let max = 12;
    let mut observed = vec![0.0; max + 1];
    let mut expected = vec![0.0; max + 1];
    for r in &d.records {
        if r.label == 1 {
            observed[r.members.len()] += 1.0;
        } else {
            expected[r.members.len()] += 1.0;
        }
    }
    let negatives: f64 = observed.iter().sum();
    assert_eq!(negatives, 10_000.0);
    let scale = negatives / expected.iter().sum::<f64>();
    // pool cardinalities with fewer than 5 expected draws into one cell
    let (mut chi2, mut cells, mut tail_o, mut tail_e) = (0.0, 0usize, 0.0, 0.0);
    for n in 0..=max {
        let e = expected[n] * scale;
        if e >= 5.0 {
            chi2 += (observed[n] - e).powi(2) / e;
            cells += 1;
        } else {
            tail_o += observed[n];
            tail_e += e;
        }
    }
    if tail_e > 0.0 {
        chi2 += (tail_o - tail_e).powi(2) / tail_e;
        cells += 1;
    }
    // 99.9th percentile of chi-square with up to 11 degrees of freedom
    assert!(cells >= 5, "{cells} cells");
    assert!(chi2 < 31.26, "chi2 {chi2} over {cells} cells");
}

#[test]
fn uniform_negatives_cover_the_positive_range() {
    let positives = planted_communities(&PlantedConfig {
        positives: 300,
        ..Default::default()
    })
    .unwrap();
    let cards: BTreeSet<usize> = positives.records.iter().map(|r| r.members.len()).collect();
    let (lo, hi) = (*cards.first().unwrap(), *cards.last().unwrap());
    let d = synthesize_negatives(&positives, NegativeScheme::UniformCardinality, 5.0, 8).unwrap();
    let neg: BTreeSet<usize> = d.records.iter().filter(|r| r.label == 1).map(|r| r.members.len()).collect();
    assert_eq!(*neg.first().unwrap(), lo);
    assert_eq!(*neg.last().unwrap(), hi);
    let positive_sets: BTreeSet<&Vec<usize>> = positives.records.iter().map(|r| &r.members).collect();
    assert!(d.records.iter().filter(|r| r.label == 1).all(|r| !positive_sets.contains(&r.members)));
}
