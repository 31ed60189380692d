use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{open, DatasetError};
use crate::hypergraph::Hypergraph;
use crate::rng;

/// Papers with dense feature rows, class labels and directed citations.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationDataset {
    pub paper_ids: Vec<String>,
    /// One row per paper, all `feature_width` long.
    pub features: Vec<Vec<f64>>,
    pub feature_width: usize,
    /// Index into `class_names` (sorted label strings).
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// `(citing, cited)` pairs over dense paper indices.
    pub citations: Vec<(usize, usize)>,
    /// Citation lines naming an unknown paper.
    pub skipped_citations: usize,
}

impl CitationDataset {
    pub fn n_papers(&self) -> usize {
        self.paper_ids.len()
    }

    fn from_parts(
        paper_ids: Vec<String>,
        features: Vec<Vec<f64>>,
        raw_labels: Vec<String>,
        citations: Vec<(usize, usize)>,
        skipped_citations: usize,
    ) -> Self {
        let class_names: Vec<String> = raw_labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let labels = raw_labels
            .iter()
            .map(|l| class_names.binary_search(l).expect("label collected above"))
            .collect();
        let feature_width = features.first().map_or(0, Vec::len);
        CitationDataset {
            paper_ids,
            features,
            feature_width,
            labels,
            class_names,
            citations,
            skipped_citations,
        }
    }

    /// Keeps roughly `fraction` of the papers, grown by breadth-first
    /// snowball sampling from random seeds so neighbourhoods stay intact,
    /// and restricts citations to the kept set. Class names are preserved.
    pub fn subsample(&self, fraction: f64, seed: u64) -> Result<CitationDataset, DatasetError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(DatasetError::Invalid(format!("subsample fraction {fraction} not in (0, 1]")));
        }
        let n = self.n_papers();
        let target = ((n as f64 * fraction).round() as usize).clamp(1, n);
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.citations {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut r = rng::stream(seed, &[0x5ab5]);
        let mut keep = vec![false; n];
        let mut kept = 0;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let mut seeds = order.into_iter();
        'outer: while kept < target {
            let Some(s) = seeds.next() else { break };
            if keep[s] {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            keep[s] = true;
            kept += 1;
            while let Some(p) = queue.pop_front() {
                let mut nbrs = adj[p].clone();
                nbrs.shuffle(&mut r);
                for q in nbrs {
                    if kept >= target {
                        break 'outer;
                    }
                    if !keep[q] {
                        keep[q] = true;
                        kept += 1;
                        queue.push_back(q);
                    }
                }
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut next = 0;
        for (i, &k) in keep.iter().enumerate() {
            if k {
                remap[i] = next;
                next += 1;
            }
        }
        let pick = |i: usize| keep[i];
        Ok(CitationDataset {
            paper_ids: (0..n).filter(|&i| pick(i)).map(|i| self.paper_ids[i].clone()).collect(),
            features: (0..n).filter(|&i| pick(i)).map(|i| self.features[i].clone()).collect(),
            feature_width: self.feature_width,
            labels: (0..n).filter(|&i| pick(i)).map(|i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            citations: self
                .citations
                .iter()
                .filter(|&&(a, b)| keep[a] && keep[b])
                .map(|&(a, b)| (remap[a], remap[b]))
                .collect(),
            skipped_citations: 0,
        })
    }
}

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        source_name: source_name.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a content file (`id f1..fk label`, whitespace separated) and a
/// cites file (`citing cited`).
pub fn ingest_citation(
    content_path: &Path,
    cites_path: &Path,
    declared_width: Option<usize>,
) -> Result<CitationDataset, DatasetError> {
    parse_citation(
        open(content_path)?,
        &content_path.display().to_string(),
        open(cites_path)?,
        &cites_path.display().to_string(),
        declared_width,
    )
}

pub fn parse_citation<A: BufRead, B: BufRead>(
    content: A,
    content_name: &str,
    cites: B,
    cites_name: &str,
    declared_width: Option<usize>,
) -> Result<CitationDataset, DatasetError> {
    let mut ids = Vec::new();
    let mut index = HashMap::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(content_name, lineno, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(parse_err(content_name, lineno, "expected 'id f1..fk label'"));
        }
        let row = fields[1..fields.len() - 1]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(content_name, lineno, format!("bad feature value {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    content_name,
                    lineno,
                    format!("{} features, earlier rows have {w}", row.len()),
                ))
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if index.insert(id.clone(), ids.len()).is_some() {
            return Err(parse_err(content_name, lineno, format!("duplicate paper id {id:?}")));
        }
        ids.push(id);
        features.push(row);
        labels.push(fields[fields.len() - 1].to_string());
    }
    if let (Some(declared), Some(found)) = (declared_width, width) {
        if declared != found {
            return Err(DatasetError::FeatureWidth { found, declared });
        }
    }
    let (citations, skipped) = parse_cites(cites, cites_name, |tok| index.get(tok).copied(), |fields| {
        (fields.len() == 2).then(|| (fields[0], fields[1]))
    })?;
    if skipped > 0 {
        log::warn!("{cites_name}: skipped {skipped} citations naming unknown papers");
    }
    Ok(CitationDataset::from_parts(ids, features, labels, citations, skipped))
}

fn parse_cites<'a, B: BufRead>(
    cites: B,
    cites_name: &str,
    lookup: impl Fn(&str) -> Option<usize>,
    endpoints: impl for<'l> Fn(&[&'l str]) -> Option<(&'l str, &'l str)>,
) -> Result<(Vec<(usize, usize)>, usize), DatasetError> {
    let mut citations = Vec::new();
    let mut skipped = 0;
    for (i, line) in cites.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(cites_name, lineno, e.to_string()))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let (a, b) = endpoints(&fields).ok_or_else(|| parse_err(cites_name, lineno, "malformed citation line"))?;
        match (lookup(a), lookup(b)) {
            (Some(x), Some(y)) => citations.push((x, y)),
            _ => skipped += 1,
        }
    }
    Ok((citations, skipped))
}

/// Adapter for the native LINQS PubMed-Diabetes files
/// (`Pubmed-Diabetes.NODE.paper.tab`, `Pubmed-Diabetes.DIRECTED.cites.tab`).
/// Feature columns follow the order declared in the node file header.
pub fn ingest_pubmed_linqs(node_path: &Path, cites_path: &Path) -> Result<CitationDataset, DatasetError> {
    parse_pubmed_linqs(
        open(node_path)?,
        &node_path.display().to_string(),
        open(cites_path)?,
        &cites_path.display().to_string(),
    )
}

pub fn parse_pubmed_linqs<A: BufRead, B: BufRead>(
    nodes: A,
    nodes_name: &str,
    cites: B,
    cites_name: &str,
) -> Result<CitationDataset, DatasetError> {
    let mut lines = nodes.lines().enumerate();
    let mut header = |expect: usize| -> Result<String, DatasetError> {
        match lines.next() {
            Some((_, Ok(l))) => Ok(l),
            _ => Err(parse_err(nodes_name, expect, "missing header line")),
        }
    };
    header(1)?;
    let schema = header(2)?;
    let columns: Vec<String> = schema
        .split('\t')
        .filter_map(|f| f.strip_prefix("numeric:"))
        .map(|f| f.split(':').next().unwrap_or(f).to_string())
        .collect();
    let column_index: HashMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut ids = Vec::new();
    let mut index = HashMap::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(nodes_name, lineno, e.to_string()))?;
        let mut fields = line.split('\t').filter(|f| !f.is_empty());
        let Some(id) = fields.next() else { continue };
        let mut row = vec![0.0; columns.len()];
        let mut label = None;
        for field in fields {
            let Some((key, value)) = field.split_once('=') else {
                return Err(parse_err(nodes_name, lineno, format!("malformed field {field:?}")));
            };
            match key {
                "label" => label = Some(value.to_string()),
                "summary" => {}
                _ => {
                    let col = *column_index
                        .get(key)
                        .ok_or_else(|| parse_err(nodes_name, lineno, format!("unknown feature {key:?}")))?;
                    row[col] = value
                        .parse()
                        .map_err(|_| parse_err(nodes_name, lineno, format!("bad value {value:?}")))?;
                }
            }
        }
        let label = label.ok_or_else(|| parse_err(nodes_name, lineno, "missing label"))?;
        index.insert(id.to_string(), ids.len());
        ids.push(id.to_string());
        features.push(row);
        labels.push(label);
    }
    let (citations, skipped) = parse_cites(
        cites,
        cites_name,
        |tok| tok.strip_prefix("paper:").and_then(|id| index.get(id).copied()),
        |fields| match fields {
            [_, a, "|", b] => Some((*a, *b)),
            [a, "|", b] => Some((*a, *b)),
            ["DIRECTED", ..] | ["NO_FEATURES", ..] => Some(("", "")),
            _ => None,
        },
    )?;
    // the two header lines of the cites file land in `skipped`
    let skipped = skipped.saturating_sub(2);
    Ok(CitationDataset::from_parts(ids, features, labels, citations, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodMode {
    /// Centroid plus everything it cites or is cited by.
    #[default]
    Undirected,
    /// Centroid plus the papers it cites.
    CitedOnly,
}

/// One hyperedge per paper, in paper order, so hyperedge `i` has centroid
/// paper `i`. Returns the hypergraph and the hyperedge → centroid map.
pub fn neighborhood_hypergraph(
    d: &CitationDataset,
    mode: NeighborhoodMode,
) -> Result<(Hypergraph, Vec<usize>), DatasetError> {
    let n = d.n_papers();
    let mut sets: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
    for &(citing, cited) in &d.citations {
        sets[citing].insert(cited);
        if mode == NeighborhoodMode::Undirected {
            sets[cited].insert(citing);
        }
    }
    let h = Hypergraph::new(n, sets.into_iter().map(|s| s.into_iter().collect()).collect())?;
    Ok((h, (0..n).collect()))
}
