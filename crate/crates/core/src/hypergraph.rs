//! Hypergraph storage with a vertex → hyperedge incidence index.
//!
//! Hyperedges are stored as sorted member arrays so that iteration order,
//! and therefore every seeded random walk, is reproducible.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use thiserror::Error;

/// Dense 0-based vertex index.
pub type VertexId = usize;
/// Dense 0-based hyperedge index.
pub type HyperedgeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("hypergraph must have at least one vertex")]
    NoVertices,
    #[error("hyperedge {hyperedge} is empty")]
    EmptyHyperedge { hyperedge: HyperedgeId },
    #[error("hyperedge {hyperedge} references vertex {vertex} but only {n_vertices} vertices exist")]
    VertexOutOfRange {
        hyperedge: HyperedgeId,
        vertex: VertexId,
        n_vertices: usize,
    },
    #[error("hyperedge {hyperedge} lists vertex {vertex} more than once")]
    DuplicateMember {
        hyperedge: HyperedgeId,
        vertex: VertexId,
    },
    #[error("vertex {vertex} belongs to no hyperedge; the dual would contain an empty hyperedge")]
    IsolatedVertex { vertex: VertexId },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HypergraphError {
    fn from(e: std::io::Error) -> Self {
        HypergraphError::Io(e.to_string())
    }
}

/// A finite vertex set together with a family of nonempty vertex subsets.
///
/// Immutable once built. The family may contain repeated sets; each one
/// keeps its own hyperedge id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    n_vertices: usize,
    hyperedges: Vec<Vec<VertexId>>,
    incidence: Vec<Vec<HyperedgeId>>,
}

impl Hypergraph {
    /// Builds a hypergraph, sorting each member list and deriving the
    /// incidence index.
    pub fn new(n_vertices: usize, hyperedges: Vec<Vec<VertexId>>) -> Result<Self, HypergraphError> {
        if n_vertices == 0 {
            return Err(HypergraphError::NoVertices);
        }
        let mut hyperedges = hyperedges;
        let mut incidence = vec![Vec::new(); n_vertices];
        for (e, members) in hyperedges.iter_mut().enumerate() {
            if members.is_empty() {
                return Err(HypergraphError::EmptyHyperedge { hyperedge: e });
            }
            members.sort_unstable();
            for pair in members.windows(2) {
                if pair[0] == pair[1] {
                    return Err(HypergraphError::DuplicateMember {
                        hyperedge: e,
                        vertex: pair[0],
                    });
                }
            }
            if let Some(&last) = members.last() {
                if last >= n_vertices {
                    return Err(HypergraphError::VertexOutOfRange {
                        hyperedge: e,
                        vertex: last,
                        n_vertices,
                    });
                }
            }
            for &v in members.iter() {
                incidence[v].push(e);
            }
        }
        Ok(Hypergraph {
            n_vertices,
            hyperedges,
            incidence,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    /// Sorted members of hyperedge `e`.
    pub fn members(&self, e: HyperedgeId) -> &[VertexId] {
        &self.hyperedges[e]
    }

    /// Hyperedges containing `v`, in increasing id order.
    pub fn incident(&self, v: VertexId) -> &[HyperedgeId] {
        &self.incidence[v]
    }

    pub fn cardinality(&self, e: HyperedgeId) -> usize {
        self.hyperedges[e].len()
    }

    pub fn hyperedges(&self) -> impl ExactSizeIterator<Item = &[VertexId]> {
        self.hyperedges.iter().map(Vec::as_slice)
    }

    pub fn isolated_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.incidence
            .iter()
            .enumerate()
            .filter(|(_, inc)| inc.is_empty())
            .map(|(v, _)| v)
    }

    /// The dual hypergraph: hyperedge `k` becomes vertex `k` and vertex `k`
    /// becomes hyperedge `k`, with membership transposed.
    pub fn dual(&self) -> Result<Hypergraph, HypergraphError> {
        if let Some(vertex) = self.isolated_vertices().next() {
            return Err(HypergraphError::IsolatedVertex { vertex });
        }
        if self.hyperedges.is_empty() {
            return Err(HypergraphError::NoVertices);
        }
        // incidence lists are already sorted, so they are valid member lists
        Ok(Hypergraph {
            n_vertices: self.hyperedges.len(),
            hyperedges: self.incidence.clone(),
            incidence: self.hyperedges.clone(),
        })
    }

    /// Whether the bipartite vertex/hyperedge incidence graph is connected.
    ///
    /// Isolated vertices count as their own component.
    pub fn is_connected(&self) -> bool {
        let mut sets = DisjointSets::new(self.n_vertices);
        for members in &self.hyperedges {
            for pair in members.windows(2) {
                sets.union(pair[0], pair[1]);
            }
        }
        sets.components() == 1
    }

    /// Reads the canonical text form: one hyperedge per line, members
    /// separated by whitespace, line number = hyperedge id. When
    /// `n_vertices` is `None` it is inferred as the largest id plus one.
    pub fn read_canonical<R: BufRead>(
        reader: R,
        n_vertices: Option<usize>,
    ) -> Result<Hypergraph, HypergraphError> {
        let mut hyperedges = Vec::new();
        let mut max_id = None::<usize>;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let members = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| HypergraphError::Parse {
                        line: i + 1,
                        message: format!("invalid vertex id {tok:?}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(&m) = members.iter().max() {
                max_id = Some(max_id.map_or(m, |x| x.max(m)));
            }
            hyperedges.push(members);
        }
        let n = n_vertices.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
        Hypergraph::new(n, hyperedges)
    }

    pub fn write_canonical<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for members in &self.hyperedges {
            let mut first = true;
            for v in members {
                if !first {
                    w.write_all(b" ")?;
                }
                write!(w, "{v}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Connected components of the incidence graph as vertex lists, found
    /// by breadth-first search. Used for diagnostics.
    pub fn vertex_components(&self) -> Vec<Vec<VertexId>> {
        let mut seen_v = vec![false; self.n_vertices];
        let mut seen_e = vec![false; self.hyperedges.len()];
        let mut out = Vec::new();
        for start in 0..self.n_vertices {
            if seen_v[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen_v[start] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &e in &self.incidence[v] {
                    if std::mem::replace(&mut seen_e[e], true) {
                        continue;
                    }
                    for &u in &self.hyperedges[e] {
                        if !std::mem::replace(&mut seen_v[u], true) {
                            queue.push_back(u);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
    count: usize,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            rank: vec![0; n],
            count: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.count -= 1;
    }

    fn components(&self) -> usize {
        self.count
    }
}
