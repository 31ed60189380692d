//! Planted positive sets plus synthetic negatives drawn under the two
//! cardinality schemes.

use std::collections::BTreeMap;

use hyperwalk::datasets::synthetic::{planted_communities, PlantedConfig};
use hyperwalk::datasets::{synthesize_negatives, NegativeScheme, NEGATIVE_CLASS};

fn histogram<'a>(sizes: impl Iterator<Item = &'a Vec<usize>>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for m in sizes {
        *h.entry(m.len()).or_default() += 1;
    }
    h
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let positives = planted_communities(&PlantedConfig {
        communities: 10,
        community_size: 12,
        positives: 200,
        max_cardinality: 8,
        ..Default::default()
    })?;
    println!("positive cardinalities {:?}", histogram(positives.records.iter().map(|r| &r.members)));
    for scheme in [NegativeScheme::UniformCardinality, NegativeScheme::EmpiricalCardinality] {
        let d = synthesize_negatives(&positives, scheme, 1.0, 4)?;
        let negative = d.class_names.iter().position(|c| c == NEGATIVE_CLASS).unwrap();
        let negatives = d.records.iter().filter(|r| r.label == negative).map(|r| &r.members);
        println!("{scheme:?} negative cardinalities {:?}", histogram(negatives));
    }
    Ok(())
}
