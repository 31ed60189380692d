//! Seeded generators for planted set datasets.

use std::collections::{BTreeSet, HashSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, SetDataset, SetRecord};
use crate::rng;

/// Positives are subsets of planted vertex communities, with a heavy
/// tail of small cardinalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantedConfig {
    pub communities: usize,
    pub community_size: usize,
    pub positives: usize,
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    /// Cardinality n is drawn with weight n^-exponent.
    pub cardinality_exponent: f64,
    /// Chance that a member is swapped for a vertex from anywhere.
    pub noise: f64,
    /// Average number of communities each vertex belongs to. 1 gives
    /// disjoint consecutive blocks; above 1 every community is a random
    /// draw from a universe shrunk by this factor.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            communities: 40,
            community_size: 30,
            positives: 800,
            min_cardinality: 2,
            max_cardinality: 30,
            cardinality_exponent: 1.5,
            noise: 0.0,
            overlap: 1.0,
            seed: 0,
        }
    }
}

fn invalid(msg: String) -> DatasetError {
    DatasetError::Invalid(msg)
}

/// Single-class dataset of distinct community subsets, labeled `"positive"`.
pub fn planted_communities(cfg: &PlantedConfig) -> Result<SetDataset, DatasetError> {
    if cfg.communities == 0 || cfg.community_size == 0 || cfg.positives == 0 {
        return Err(invalid("communities, community_size and positives must be positive".into()));
    }
    if cfg.min_cardinality == 0 || cfg.min_cardinality > cfg.max_cardinality || cfg.max_cardinality > cfg.community_size {
        return Err(invalid(format!(
            "cardinality range {}..={} must be nonempty and fit a community of {}",
            cfg.min_cardinality, cfg.max_cardinality, cfg.community_size
        )));
    }
    if !(0.0..=1.0).contains(&cfg.noise) {
        return Err(invalid(format!("noise {} must lie in [0, 1]", cfg.noise)));
    }
    if !(cfg.overlap >= 1.0 && cfg.overlap.is_finite()) {
        return Err(invalid(format!("overlap {} must be >= 1", cfg.overlap)));
    }
    let slots = cfg.communities * cfg.community_size;
    let universe = ((slots as f64 / cfg.overlap).round() as usize).max(cfg.community_size);
    let blocks: Vec<Vec<usize>> = if cfg.overlap == 1.0 {
        (0..cfg.communities)
            .map(|c| (c * cfg.community_size..(c + 1) * cfg.community_size).collect())
            .collect()
    } else {
        let mut r = rng::stream(cfg.seed, &[0xb10c]);
        (0..cfg.communities)
            .map(|_| index::sample(&mut r, universe, cfg.community_size).into_vec())
            .collect()
    };
    let cards: Vec<usize> = (cfg.min_cardinality..=cfg.max_cardinality).collect();
    let weights = cards.iter().map(|&n| (n as f64).powf(-cfg.cardinality_exponent));
    let card_dist = WeightedIndex::new(weights).map_err(|e| invalid(e.to_string()))?;
    let mut r = rng::stream(cfg.seed, &[0x91a7]);
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(cfg.positives);
    let mut attempts = 0usize;
    while records.len() < cfg.positives {
        attempts += 1;
        if attempts > 100 * cfg.positives {
            return Err(DatasetError::NegativeExhausted(attempts));
        }
        let community = r.gen_range(0..cfg.communities);
        let n = cards[card_dist.sample(&mut r)];
        let mut members: BTreeSet<usize> = index::sample(&mut r, cfg.community_size, n)
            .into_iter()
            .map(|i| blocks[community][i])
            .collect();
        if cfg.noise > 0.0 {
            let picked: Vec<usize> = members.iter().copied().collect();
            for v in picked {
                if r.gen_bool(cfg.noise) {
                    let w = r.gen_range(0..universe);
                    if !members.contains(&w) {
                        members.remove(&v);
                        members.insert(w);
                    }
                }
            }
        }
        let members: Vec<usize> = members.into_iter().collect();
        if seen.insert(members.clone()) {
            records.push(SetRecord {
                id: format!("c{}", records.len()),
                members,
                label: 0,
            });
        }
    }
    Ok(finish(universe, records, vec!["positive".into()]))
}

/// Drops vertices that no record uses and renumbers the rest densely.
fn finish(universe: usize, mut records: Vec<SetRecord>, class_names: Vec<String>) -> SetDataset {
    let mut used = vec![usize::MAX; universe];
    let mut vertex_names = Vec::new();
    for r in &mut records {
        for m in &mut r.members {
            if used[*m] == usize::MAX {
                used[*m] = vertex_names.len();
                vertex_names.push(format!("v{m}"));
            }
            *m = used[*m];
        }
        r.members.sort_unstable();
    }
    SetDataset {
        vertex_names,
        records,
        class_names,
    }
}

/// Uniformly random hyperedges with cardinalities in `min..=max` and
/// `classes` random labels; used for throughput measurements.
pub fn random_sets(
    vertices: usize,
    sets: usize,
    min_cardinality: usize,
    max_cardinality: usize,
    classes: usize,
    seed: u64,
) -> Result<SetDataset, DatasetError> {
    if min_cardinality == 0 || min_cardinality > max_cardinality {
        return Err(invalid(format!("bad cardinality range {min_cardinality}..={max_cardinality}")));
    }
    if max_cardinality > vertices {
        return Err(DatasetError::UniverseTooSmall {
            requested: max_cardinality,
            universe: vertices,
        });
    }
    if classes < 2 || sets == 0 {
        return Err(invalid("need at least one set and two classes".into()));
    }
    let mut r = rng::stream(seed, &[0x5e75]);
    let records = (0..sets)
        .map(|i| {
            let n = r.gen_range(min_cardinality..=max_cardinality);
            let mut members = index::sample(&mut r, vertices, n).into_vec();
            members.sort_unstable();
            SetRecord {
                id: format!("s{i}"),
                members,
                label: r.gen_range(0..classes),
            }
        })
        .collect();
    Ok(finish(vertices, records, (0..classes).map(|c| format!("class{c}")).collect()))
}
