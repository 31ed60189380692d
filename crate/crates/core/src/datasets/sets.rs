use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::hypergraph::Hypergraph;
use crate::rng;

/// Class name given to synthesized negative hyperedges.
pub const NEGATIVE_CLASS: &str = "negative";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetRecord {
    pub id: String,
    /// Sorted, distinct vertex indices.
    pub members: Vec<usize>,
    pub label: usize,
}

/// Labeled vertex sets over a shared vertex universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetDataset {
    pub vertex_names: Vec<String>,
    pub records: Vec<SetRecord>,
    pub class_names: Vec<String>,
}

/// Label regrouping applied while reading, e.g. folding many meetup
/// categories into two balanced classes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relabel {
    /// Original label → group label.
    pub groups: BTreeMap<String, String>,
    /// Group for labels not listed; `None` keeps them unchanged.
    #[serde(default)]
    pub default: Option<String>,
}

impl Relabel {
    fn apply(&self, label: &str) -> String {
        match self.groups.get(label) {
            Some(g) => g.clone(),
            None => self.default.clone().unwrap_or_else(|| label.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Member {
    Name(String),
    Index(u64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelField {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: serde_json::Value,
    members: Vec<Member>,
    label: LabelField,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    members: Vec<&'a str>,
    label: &'a str,
}

/// Reads JSON lines `{"id": .., "members": [..], "label": ".." | [..]}`.
/// Records with several labels keep one chosen uniformly with `seed`.
pub fn parse_set_dataset<R: BufRead>(
    reader: R,
    source_name: &str,
    relabel: Option<&Relabel>,
    seed: u64,
) -> Result<SetDataset, DatasetError> {
    let mut r = rng::stream(seed, &[0x1abe1]);
    let mut vertex_index: HashMap<String, usize> = HashMap::new();
    let mut vertex_names = Vec::new();
    let mut raw = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let err = |message: String| DatasetError::Parse {
            source_name: source_name.to_string(),
            line: lineno,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let id = match rec.id {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        let mut members = BTreeSet::new();
        for m in rec.members {
            let name = match m {
                Member::Name(s) => s,
                Member::Index(i) => i.to_string(),
            };
            let next = vertex_names.len();
            let v = *vertex_index.entry(name.clone()).or_insert(next);
            if v == next {
                vertex_names.push(name);
            }
            members.insert(v);
        }
        if members.is_empty() {
            return Err(err(format!("record {id:?} has no members")));
        }
        let label = match rec.label {
            LabelField::One(l) => l,
            LabelField::Many(ls) if !ls.is_empty() => ls[r.gen_range(0..ls.len())].clone(),
            LabelField::Many(_) => return Err(err(format!("record {id:?} has an empty label list"))),
        };
        let label = relabel.map_or(label.clone(), |rl| rl.apply(&label));
        raw.push((id, members.into_iter().collect::<Vec<_>>(), label));
    }
    let class_names: Vec<String> = raw.iter().map(|(_, _, l)| l.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let records = raw
        .into_iter()
        .map(|(id, members, label)| SetRecord {
            id,
            members,
            label: class_names.binary_search(&label).expect("collected above"),
        })
        .collect();
    Ok(SetDataset {
        vertex_names,
        records,
        class_names,
    })
}

impl SetDataset {
    pub fn n_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// One hyperedge per record, in record order.
    pub fn hypergraph(&self) -> Result<Hypergraph, DatasetError> {
        Ok(Hypergraph::new(
            self.n_vertices(),
            self.records.iter().map(|r| r.members.clone()).collect(),
        )?)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            let rec = JsonRecordOut {
                id: &r.id,
                members: r.members.iter().map(|&m| self.vertex_names[m].as_str()).collect(),
                label: &self.class_names[r.label],
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// How synthesized negatives choose their cardinality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeScheme {
    /// Uniform between the smallest and largest positive cardinality.
    UniformCardinality,
    /// Drawn from the positive cardinality distribution.
    EmpiricalCardinality,
}

const MAX_RESAMPLES: usize = 1000;

/// Appends `round(ratio × positives)` random vertex sets labeled
/// [`NEGATIVE_CLASS`]. Members are drawn uniformly without replacement
/// from the whole vertex universe; a draw equal to a positive set is
/// redrawn.
pub fn synthesize_negatives(
    d: &SetDataset,
    scheme: NegativeScheme,
    ratio: f64,
    seed: u64,
) -> Result<SetDataset, DatasetError> {
    if d.records.is_empty() {
        return Err(DatasetError::NoPositives);
    }
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(DatasetError::Invalid(format!("negative ratio {ratio} must be >= 0")));
    }
    if d.class_names.iter().any(|c| c == NEGATIVE_CLASS) {
        return Err(DatasetError::Invalid(format!("dataset already has a {NEGATIVE_CLASS:?} class")));
    }
    let universe = d.n_vertices();
    let cards: Vec<usize> = d.records.iter().map(|r| r.members.len()).collect();
    let (lo, hi) = (*cards.iter().min().unwrap(), *cards.iter().max().unwrap());
    if hi > universe {
        return Err(DatasetError::UniverseTooSmall {
            requested: hi,
            universe,
        });
    }
    let positives: HashSet<&[usize]> = d.records.iter().map(|r| r.members.as_slice()).collect();
    let count = (ratio * d.records.len() as f64).round() as usize;
    let negative_label = d.class_names.len();
    let mut r = rng::stream(seed, &[0xa11e]);
    let mut out = d.clone();
    out.class_names.push(NEGATIVE_CLASS.to_string());
    for k in 0..count {
        let n = match scheme {
            NegativeScheme::UniformCardinality => r.gen_range(lo..=hi),
            NegativeScheme::EmpiricalCardinality => cards[r.gen_range(0..cards.len())],
        };
        let mut attempts = 0;
        let members = loop {
            let mut m = index::sample(&mut r, universe, n).into_vec();
            m.sort_unstable();
            if !positives.contains(m.as_slice()) {
                break m;
            }
            attempts += 1;
            if attempts >= MAX_RESAMPLES {
                return Err(DatasetError::NegativeExhausted(attempts));
            }
        };
        out.records.push(SetRecord {
            id: format!("neg-{k}"),
            members,
            label: negative_label,
        });
    }
    Ok(out)
}
