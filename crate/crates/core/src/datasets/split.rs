use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::rng;

/// A seeded partition of ids into train, validation and test parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub fractions: Vec<f64>,
    pub seed: u64,
}

impl LabeledSplit {
    /// `"50:50"` or `"80:10:10"` style name built from the fractions.
    pub fn name(&self) -> String {
        crate::pipeline::split_name(&self.fractions)
    }
}

/// Part sizes by the largest-remainder rule; ties go to the earlier part.
fn part_sizes(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Uniform random (unstratified) partition of `ids`. `fractions` holds two
/// (train, test) or three (train, validation, test) shares summing to 1.
pub fn split(ids: &[usize], fractions: &[f64], seed: u64) -> Result<LabeledSplit, DatasetError> {
    if !(2..=3).contains(&fractions.len()) {
        return Err(DatasetError::Split(format!(
            "expected 2 or 3 fractions, got {}",
            fractions.len()
        )));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(DatasetError::Split(format!("fractions {fractions:?} must lie in [0, 1]")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DatasetError::Split(format!("fractions sum to {total}, not 1")));
    }
    let sizes = part_sizes(ids.len(), fractions);
    if sizes[0] == 0 {
        return Err(DatasetError::Split("training part is empty".into()));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut rng::stream(seed, &[0x5b1e]));
    let mut rest = shuffled.into_iter();
    let mut take = |k: usize| -> Vec<usize> { rest.by_ref().take(k).collect() };
    let train = take(sizes[0]);
    let (validation, test) = if sizes.len() == 3 {
        (take(sizes[1]), take(sizes[2]))
    } else {
        (Vec::new(), take(sizes[1]))
    };
    Ok(LabeledSplit {
        train,
        validation,
        test,
        fractions: fractions.to_vec(),
        seed,
    })
}
