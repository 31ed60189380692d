//! Confusion-matrix scores and multi-run aggregation.

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("confusion matrix is empty")]
    Empty,
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("{truth} labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no runs to aggregate")]
    NoRuns,
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), classes * classes);
        ConfusionMatrix { classes, counts }
    }

    pub fn from_predictions(classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        let mut cm = Self::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<(), MetricsError> {
        for class in [truth, predicted] {
            if class >= self.classes {
                return Err(MetricsError::ClassOutOfRange {
                    class,
                    classes: self.classes,
                });
            }
        }
        self.counts[truth * self.classes + predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    fn nonempty(&self) -> Result<f64, MetricsError> {
        match self.total() {
            0 => Err(MetricsError::Empty),
            n => Ok(n as f64),
        }
    }

    /// (true positives, false positives, false negatives) of one class.
    fn class_counts(&self, c: usize) -> (u64, u64, u64) {
        let tp = self.get(c, c);
        let predicted: u64 = (0..self.classes).map(|t| self.get(t, c)).sum();
        let actual: u64 = (0..self.classes).map(|p| self.get(c, p)).sum();
        (tp, predicted - tp, actual - tp)
    }

    pub fn accuracy(&self) -> Result<f64, MetricsError> {
        Ok(self.trace() as f64 / self.nonempty()?)
    }

    /// F1 of pooled true/false positive and false negative counts.
    pub fn micro_f1(&self) -> Result<f64, MetricsError> {
        self.nonempty()?;
        let (mut tp, mut fp, mut fnn) = (0, 0, 0);
        for c in 0..self.classes {
            let (a, b, d) = self.class_counts(c);
            tp += a;
            fp += b;
            fnn += d;
        }
        Ok(f1(tp, fp, fnn))
    }

    /// Unweighted mean of per-class F1. A class with a zero denominator
    /// (never true, never predicted) scores 0.
    pub fn macro_f1(&self) -> Result<f64, MetricsError> {
        self.nonempty()?;
        let sum: f64 = (0..self.classes)
            .map(|c| {
                let (tp, fp, fnn) = self.class_counts(c);
                f1(tp, fp, fnn)
            })
            .sum();
        Ok(sum / self.classes as f64)
    }
}

fn f1(tp: u64, fp: u64, fnn: u64) -> f64 {
    let denom = 2 * tp + fp + fnn;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev: f64,
    pub runs: usize,
}

pub fn aggregate_runs(scores: &[f64]) -> Result<RunSummary, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let stddev = if scores.len() < 2 {
        0.0
    } else {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok(RunSummary {
        mean,
        stddev,
        runs: scores.len(),
    })
}

/// One row of the results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub split: String,
    pub run: usize,
    pub seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

pub const RESULTS_HEADER: &str = "dataset,split,run,seed,micro_f1,macro_f1,accuracy";

pub fn write_results<W: Write>(mut w: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            r.dataset, r.split, r.run, r.seed, r.micro_f1, r.macro_f1, r.accuracy
        )?;
    }
    Ok(())
}
