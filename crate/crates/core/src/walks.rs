//! Subsample-and-traverse (SaT) walks over vertices and their dual
//! counterpart, traverse-and-select (TaS) walks over hyperedges.
//!
//! A walk sits inside a current hyperedge `e`. After emitting the current
//! vertex it traverses with probability `p = min(alpha / |e| + beta, 1)`
//! to another hyperedge incident to that vertex and picks a member of it;
//! otherwise it resamples a member of `e`. The number of tokens drawn from
//! one hyperedge is therefore geometric with mean `1 / p`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{HyperedgeId, Hypergraph, HypergraphError, VertexId};
use crate::rng;

/// Corpus token. Vertex or hyperedge id depending on the corpus space.
pub type Token = u32;

#[derive(Debug, Error, PartialEq)]
pub enum WalkError {
    #[error("invalid walk config: {0}")]
    Config(String),
    #[error("hyperedge cardinality must be at least 1")]
    ZeroCardinality,
    #[error("vertex {0} is out of range")]
    UnknownStart(VertexId),
    #[error("vertex {0} belongs to no hyperedge and cannot start a walk")]
    IsolatedStart(VertexId),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error("corpus line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for WalkError {
    fn from(e: std::io::Error) -> Self {
        WalkError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkConfig {
    pub alpha: f64,
    pub beta: f64,
    pub walks_per_start: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            alpha: 1.0,
            beta: 0.1,
            walks_per_start: 25,
            walk_length: 25,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(WalkError::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(WalkError::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.walk_length == 0 {
            return Err(WalkError::Config("walk_length must be >= 1".into()));
        }
        if self.walks_per_start == 0 {
            return Err(WalkError::Config("walks_per_start must be >= 1".into()));
        }
        Ok(())
    }
}

/// Probability of leaving a hyperedge of the given cardinality.
pub fn traverse_probability(cardinality: usize, cfg: &WalkConfig) -> Result<f64, WalkError> {
    if cardinality == 0 {
        return Err(WalkError::ZeroCardinality);
    }
    Ok((cfg.alpha / cardinality as f64 + cfg.beta).min(1.0))
}

/// One emitted walk step: the vertex and the hyperedge the walk was in
/// when it emitted it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub vertex: VertexId,
    pub hyperedge: HyperedgeId,
}

/// Runs one SaT walk, handing every emitted step to `emit`.
pub fn sat_walk_with<R: Rng + ?Sized>(
    h: &Hypergraph,
    start: VertexId,
    cfg: &WalkConfig,
    rng: &mut R,
    mut emit: impl FnMut(Step),
) -> Result<(), WalkError> {
    if start >= h.n_vertices() {
        return Err(WalkError::UnknownStart(start));
    }
    let first = h.incident(start);
    if first.is_empty() {
        return Err(WalkError::IsolatedStart(start));
    }
    let mut edge = first[rng.gen_range(0..first.len())];
    let mut vertex = start;
    for i in 0..cfg.walk_length {
        emit(Step {
            vertex,
            hyperedge: edge,
        });
        if i + 1 == cfg.walk_length {
            break;
        }
        let p = traverse_probability(h.cardinality(edge), cfg)?;
        if rng.gen::<f64>() < p {
            let incident = h.incident(vertex);
            if incident.len() > 1 {
                // uniform over incident hyperedges other than the current one
                let k = rng.gen_range(0..incident.len() - 1);
                let pos = incident.binary_search(&edge).expect("walk hyperedge contains vertex");
                edge = incident[if k >= pos { k + 1 } else { k }];
            }
        }
        let members = h.members(edge);
        vertex = members[rng.gen_range(0..members.len())];
    }
    Ok(())
}

/// One SaT walk as a vertex sequence starting at `start`.
pub fn sat_walk<R: Rng + ?Sized>(
    h: &Hypergraph,
    start: VertexId,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<Vec<Token>, WalkError> {
    let mut out = Vec::with_capacity(cfg.walk_length);
    sat_walk_with(h, start, cfg, rng, |s| out.push(s.vertex as Token))?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenSpace {
    Vertex,
    Hyperedge,
}

impl fmt::Display for TokenSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenSpace::Vertex => "vertex",
            TokenSpace::Hyperedge => "hyperedge",
        })
    }
}

impl FromStr for TokenSpace {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "vertex" => Ok(TokenSpace::Vertex),
            "hyperedge" => Ok(TokenSpace::Hyperedge),
            other => Err(format!("unknown token space {other:?}")),
        }
    }
}

/// Fixed-length walks over one token space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub space: TokenSpace,
    /// Size of the token space; every token is below this.
    pub vocab_size: usize,
    pub walk_length: usize,
    pub walks: Vec<Vec<Token>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// Occurrence count of every token in the corpus.
    pub fn frequencies(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocab_size];
        for walk in &self.walks {
            for &t in walk {
                counts[t as usize] += 1;
            }
        }
        counts
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "#space={} length={} count={}",
            self.space,
            self.walk_length,
            self.walks.len()
        )?;
        let mut line = String::new();
        for walk in &self.walks {
            line.clear();
            for (i, t) in walk.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&t.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Parses a corpus file. `vocab_size` defaults to the largest token
    /// plus one.
    pub fn read<R: BufRead>(reader: R, vocab_size: Option<usize>) -> Result<WalkCorpus, WalkError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| WalkError::Parse {
            line: 1,
            message: "missing header".into(),
        })??;
        let bad_header = |message: String| WalkError::Parse { line: 1, message };
        let rest = header
            .strip_prefix('#')
            .ok_or_else(|| bad_header(format!("expected '#space=...' header, got {header:?}")))?;
        let (mut space, mut length, mut count) = (None, None, None);
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad_header(format!("malformed header field {field:?}")))?;
            match key {
                "space" => space = Some(value.parse::<TokenSpace>().map_err(bad_header)?),
                "length" => length = value.parse::<usize>().ok(),
                "count" => count = value.parse::<usize>().ok(),
                _ => return Err(bad_header(format!("unknown header field {key:?}"))),
            }
        }
        let (space, walk_length, count) = match (space, length, count) {
            (Some(s), Some(l), Some(c)) => (s, l, c),
            _ => return Err(bad_header("header needs space, length and count".into())),
        };
        let mut walks = Vec::with_capacity(count);
        let mut max_token = 0usize;
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            let walk = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<Token>().map_err(|_| WalkError::Parse {
                        line: lineno,
                        message: format!("invalid token {t:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if walk.len() != walk_length {
                return Err(WalkError::Parse {
                    line: lineno,
                    message: format!("walk has {} tokens, header says {walk_length}", walk.len()),
                });
            }
            if let Some(&m) = walk.iter().max() {
                max_token = max_token.max(m as usize);
            }
            walks.push(walk);
        }
        if walks.len() != count {
            return Err(WalkError::Parse {
                line: walks.len() + 1,
                message: format!("found {} walks, header says {count}", walks.len()),
            });
        }
        let vocab_size = vocab_size.unwrap_or(if walks.is_empty() { 0 } else { max_token + 1 });
        if !walks.is_empty() && max_token >= vocab_size {
            return Err(WalkError::Parse {
                line: 1,
                message: format!("token {max_token} outside vocabulary of size {vocab_size}"),
            });
        }
        Ok(WalkCorpus {
            space,
            vocab_size,
            walk_length,
            walks,
        })
    }
}

/// `walks_per_start` SaT walks from every vertex.
///
/// Walk `w` from start `v` uses the stream keyed by `(seed, v, w)`. Output
/// is ordered round by round (`w` major, `v` minor) whatever the thread
/// count.
pub fn generate_vertex_corpus(h: &Hypergraph, cfg: &WalkConfig) -> Result<WalkCorpus, WalkError> {
    cfg.validate()?;
    if let Some(v) = h.isolated_vertices().next() {
        return Err(WalkError::IsolatedStart(v));
    }
    let n = h.n_vertices();
    let per_start: Vec<Vec<Vec<Token>>> = (0..n)
        .into_par_iter()
        .map(|v| {
            (0..cfg.walks_per_start)
                .map(|w| {
                    let mut r = rng::stream(cfg.seed, &[v as u64, w as u64]);
                    sat_walk(h, v, cfg, &mut r)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut walks = Vec::with_capacity(n * cfg.walks_per_start);
    let mut per_start: Vec<_> = per_start.into_iter().map(Vec::into_iter).collect();
    for _ in 0..cfg.walks_per_start {
        for it in per_start.iter_mut() {
            walks.push(it.next().expect("walks_per_start walks per start"));
        }
    }
    Ok(WalkCorpus {
        space: TokenSpace::Vertex,
        vocab_size: n,
        walk_length: cfg.walk_length,
        walks,
    })
}

/// TaS walks: SaT walks on the dual, yielding hyperedge-id sequences.
pub fn generate_hyperedge_corpus(h: &Hypergraph, cfg: &WalkConfig) -> Result<WalkCorpus, WalkError> {
    let dual = h.dual()?;
    let mut corpus = generate_vertex_corpus(&dual, cfg)?;
    corpus.space = TokenSpace::Hyperedge;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(alpha: f64, beta: f64, len: usize) -> WalkConfig {
        WalkConfig {
            alpha,
            beta,
            walks_per_start: 2,
            walk_length: len,
            seed: 11,
        }
    }

    #[test]
    fn probability_formula_and_clamp() {
        assert_eq!(traverse_probability(4, &cfg(1.0, 0.0, 1)).unwrap(), 0.25);
        assert_eq!(traverse_probability(2, &cfg(0.5, 0.75, 1)).unwrap(), 1.0);
        assert_eq!(traverse_probability(4, &cfg(2.0, 0.9, 1)).unwrap(), 1.0);
        assert_eq!(
            traverse_probability(0, &cfg(1.0, 0.0, 1)),
            Err(WalkError::ZeroCardinality)
        );
    }

    #[test]
    fn length_one_walk_is_start() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sat_walk(&h, 2, &cfg(1.0, 0.1, 1), &mut r).unwrap(), vec![2]);
    }

    #[test]
    fn no_traversal_when_p_is_zero() {
        let h = Hypergraph::new(5, vec![vec![0, 1, 2], vec![2, 3, 4]]).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let mut edges = std::collections::BTreeSet::new();
        sat_walk_with(&h, 0, &cfg(0.0, 0.0, 500), &mut r, |s| {
            edges.insert(s.hyperedge);
            assert!(s.vertex <= 2);
        })
        .unwrap();
        assert_eq!(edges.into_iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn always_traverses_when_p_is_one() {
        // every vertex lies in two hyperedges, so each step must switch
        let h = Hypergraph::new(3, vec![vec![0, 1, 2], vec![0, 1, 2]]).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let mut prev = None;
        sat_walk_with(&h, 1, &cfg(0.0, 1.0, 200), &mut r, |s| {
            if let Some(p) = prev {
                assert_ne!(p, s.hyperedge);
            }
            prev = Some(s.hyperedge);
        })
        .unwrap();
    }

    #[test]
    fn start_errors() {
        let h = Hypergraph::new(3, vec![vec![0, 1]]).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sat_walk(&h, 2, &cfg(1.0, 0.1, 3), &mut r), Err(WalkError::IsolatedStart(2)));
        assert_eq!(sat_walk(&h, 9, &cfg(1.0, 0.1, 3), &mut r), Err(WalkError::UnknownStart(9)));
    }

    #[test]
    fn corpus_sizes_and_determinism() {
        let h = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let c = WalkConfig {
            walks_per_start: 25,
            ..WalkConfig::default()
        };
        let a = generate_vertex_corpus(&h, &c).unwrap();
        assert_eq!(a.len(), 75);
        assert!(a.walks.iter().all(|w| w.len() == 25));
        assert_eq!(a, generate_vertex_corpus(&h, &c).unwrap());
        // round-robin order: the first n walks start at 0, 1, 2
        assert_eq!(a.walks[0][0], 0);
        assert_eq!(a.walks[1][0], 1);
        assert_eq!(a.walks[2][0], 2);

        let e = generate_hyperedge_corpus(&h, &c).unwrap();
        assert_eq!(e.len(), 50);
        assert_eq!(e.space, TokenSpace::Hyperedge);
        assert!(e.walks.iter().flatten().all(|&t| t < 2));
    }

    #[test]
    fn zero_walks_per_start_rejected() {
        let h = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        let c = WalkConfig {
            walks_per_start: 0,
            ..WalkConfig::default()
        };
        assert!(matches!(generate_vertex_corpus(&h, &c), Err(WalkError::Config(_))));
        let c = WalkConfig {
            alpha: -1.0,
            ..WalkConfig::default()
        };
        assert!(matches!(c.validate(), Err(WalkError::Config(_))));
    }

    #[test]
    fn corpus_file_round_trip() {
        let h = Hypergraph::new(4, vec![vec![0, 1, 2], vec![2, 3]]).unwrap();
        let c = generate_vertex_corpus(&h, &cfg(1.0, 0.1, 6)).unwrap();
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("#space=vertex length=6 count=8\n"));
        assert_eq!(WalkCorpus::read(&buf[..], Some(4)).unwrap(), c);

        let bad = b"#space=vertex length=3 count=1\n0 1\n";
        assert!(matches!(WalkCorpus::read(&bad[..], None), Err(WalkError::Parse { line: 2, .. })));
    }
}
