//! Skip-gram with negative sampling over walk corpora.
//!
//! For a center token `c`, an observed context `o` and `k` noise tokens
//! `n_1..n_k`, the per-pair loss is
//!
//! ```text
//! L = -ln σ(in_c · out_o) - Σ_k ln σ(-in_c · out_nk)
//! ```
//!
//! The input table is the exported embedding; the output table only
//! serves as the context side during training.

use std::cell::Cell;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::WeightedAliasIndex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::walks::{Token, WalkCorpus};

#[derive(Debug, Error, PartialEq)]
pub enum SgnsError {
    #[error("invalid skip-gram config: {0}")]
    Config(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("token space must hold at least 2 tokens, got {0}")]
    TinyVocabulary(usize),
    #[error("token {token} outside table of {tokens} rows")]
    UnknownToken { token: usize, tokens: usize },
    #[error("embedding file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SgnsError {
    fn from(e: std::io::Error) -> Self {
        SgnsError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Floor of the linear learning-rate decay.
    pub min_learning_rate: f64,
    pub noise_exponent: f64,
    pub seed: u64,
    /// 1 = sequential and bit-reproducible; more = lock-free shared updates.
    pub workers: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            noise_exponent: 0.75,
            seed: 0,
            workers: 1,
        }
    }
}

impl SgnsConfig {
    pub fn with_dim(dim: usize) -> Self {
        SgnsConfig {
            dim,
            ..SgnsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SgnsError> {
        let fail = |m: &str| Err(SgnsError::Config(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be >= 1");
        }
        if self.window == 0 {
            return fail("window must be >= 1");
        }
        if self.negatives == 0 {
            return fail("negatives must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be > 0");
        }
        if !(self.min_learning_rate >= 0.0 && self.min_learning_rate <= self.learning_rate) {
            return fail("min_learning_rate must lie in [0, learning_rate]");
        }
        if !self.noise_exponent.is_finite() {
            return fail("noise_exponent must be finite");
        }
        if self.workers == 0 {
            return fail("workers must be >= 1");
        }
        Ok(())
    }
}

/// Input (Φ) and output (context) vectors, row-major `tokens × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    tokens: usize,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(tokens: usize, dim: usize) -> Self {
        EmbeddingTable {
            tokens,
            dim,
            input: vec![0.0; tokens * dim],
            output: vec![0.0; tokens * dim],
        }
    }

    /// Input rows uniform in `[-0.5/dim, 0.5/dim]`, output rows zero.
    pub fn initialized(tokens: usize, dim: usize, seed: u64) -> Self {
        let mut t = Self::zeros(tokens, dim);
        let mut r = rng::stream(seed, &[0x1417]);
        let bound = 0.5 / dim as f64;
        for x in t.input.iter_mut() {
            *x = r.gen_range(-bound..bound);
        }
        t
    }

    pub fn from_rows(input: Vec<Vec<f64>>, output: Vec<Vec<f64>>) -> Self {
        let tokens = input.len();
        let dim = input.first().map_or(0, Vec::len);
        assert_eq!(output.len(), tokens, "row count mismatch");
        EmbeddingTable {
            tokens,
            dim,
            input: input.into_iter().flatten().collect(),
            output: output.into_iter().flatten().collect(),
        }
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Φ(token).
    pub fn vector(&self, token: usize) -> &[f64] {
        &self.input[token * self.dim..(token + 1) * self.dim]
    }

    pub fn output_vector(&self, token: usize) -> &[f64] {
        &self.output[token * self.dim..(token + 1) * self.dim]
    }

    pub fn input_mut(&mut self) -> &mut [f64] {
        &mut self.input
    }

    pub fn output_mut(&mut self) -> &mut [f64] {
        &mut self.output
    }

    /// σ(Φ_in(a) · Φ_out(b)).
    pub fn pair_score(&self, a: usize, b: usize) -> f64 {
        sigmoid(dot(self.vector(a), self.output_vector(b)))
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }

    /// Text form: `<tokens> <dim>` then `<id> <f1> ... <fdim>` per token,
    /// in shortest round-trip notation. Only the input table is written.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.tokens, self.dim)?;
        let mut line = String::new();
        for t in 0..self.tokens {
            line.clear();
            line.push_str(&t.to_string());
            for x in self.vector(t) {
                line.push_str(&format!(" {x}"));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Reads the text form. Output vectors come back as zeros.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self, SgnsError> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or(SgnsError::Parse {
            line: 1,
            message: "missing header".into(),
        })??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| SgnsError::Parse {
                line: 1,
                message: format!("bad header {header:?}"),
            })?;
        let [tokens, dim] = dims[..] else {
            return Err(SgnsError::Parse {
                line: 1,
                message: format!("expected '<tokens> <dim>', got {header:?}"),
            });
        };
        let mut table = Self::zeros(tokens, dim);
        let mut seen = vec![false; tokens];
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            let err = |message: String| SgnsError::Parse { line: lineno, message };
            let mut fields = line.split_whitespace();
            let Some(id) = fields.next() else { continue };
            let id: usize = id.parse().map_err(|_| err(format!("bad token id {id:?}")))?;
            if id >= tokens {
                return Err(err(format!("token {id} >= {tokens}")));
            }
            let row = fields
                .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad value {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != dim {
                return Err(err(format!("expected {dim} values, got {}", row.len())));
            }
            table.input[id * dim..(id + 1) * dim].copy_from_slice(&row);
            seen[id] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(SgnsError::Parse {
                line: 0,
                message: format!("no row for token {missing}"),
            });
        }
        Ok(table)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln σ(x)` without overflow for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradients {
    /// ∂L/∂in_c
    pub center: Vec<f64>,
    /// ∂L/∂out_o
    pub context: Vec<f64>,
    /// ∂L/∂out_nk, one row per negative slot (repeated tokens accumulate).
    pub negatives: Vec<Vec<f64>>,
}

/// Loss and exact gradients of one (center, context, negatives) term.
pub fn pair_loss_and_grads(
    table: &EmbeddingTable,
    center: usize,
    context: usize,
    negatives: &[usize],
) -> Result<(f64, PairGradients), SgnsError> {
    for &t in std::iter::once(&center).chain(std::iter::once(&context)).chain(negatives) {
        if t >= table.tokens {
            return Err(SgnsError::UnknownToken {
                token: t,
                tokens: table.tokens,
            });
        }
    }
    let c = table.vector(center);
    let o = table.output_vector(context);
    let s_o = dot(c, o);
    let g_o = sigmoid(s_o) - 1.0;
    let mut loss = -log_sigmoid(s_o);
    let mut grad_c: Vec<f64> = o.iter().map(|x| g_o * x).collect();
    let grad_o = c.iter().map(|x| g_o * x).collect();
    let mut grad_n = Vec::with_capacity(negatives.len());
    for &n in negatives {
        let out_n = table.output_vector(n);
        let s_n = dot(c, out_n);
        let g_n = sigmoid(s_n);
        loss -= log_sigmoid(-s_n);
        for (gc, x) in grad_c.iter_mut().zip(out_n) {
            *gc += g_n * x;
        }
        grad_n.push(c.iter().map(|x| g_n * x).collect());
    }
    Ok((
        loss,
        PairGradients {
            center: grad_c,
            context: grad_o,
            negatives: grad_n,
        },
    ))
}

/// A parameter cell the update kernel can read and write through a shared
/// reference: `Cell` for the sequential trainer, relaxed atomics for the
/// lock-free one.
trait Slot {
    fn get(&self) -> f64;
    fn set(&self, v: f64);
}

impl Slot for Cell<f64> {
    #[inline]
    fn get(&self) -> f64 {
        Cell::get(self)
    }
    #[inline]
    fn set(&self, v: f64) {
        Cell::set(self, v)
    }
}

impl Slot for AtomicU64 {
    #[inline]
    fn get(&self) -> f64 {
        f64::from_bits(self.load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, v: f64) {
        self.store(v.to_bits(), Ordering::Relaxed)
    }
}

struct Kernel<'a, S> {
    input: &'a [S],
    output: &'a [S],
    dim: usize,
    center_buf: Vec<f64>,
    grad_buf: Vec<f64>,
}

impl<S: Slot> Kernel<'_, S> {
    /// One SGD step on the pair loss. Output rows are updated with the
    /// pre-step center vector, the center row last.
    /// Returns the pair loss when `track_loss` is set, otherwise 0.
    fn step(&mut self, center: usize, context: usize, negatives: &[usize], lr: f64, track_loss: bool) -> f64 {
        let d = self.dim;
        let in_c = &self.input[center * d..(center + 1) * d];
        for (b, s) in self.center_buf.iter_mut().zip(in_c) {
            *b = s.get();
        }
        self.grad_buf.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n, false)));
        for (token, positive) in targets {
            let row = &self.output[token * d..(token + 1) * d];
            let s = slot_dot(row, &self.center_buf);
            if track_loss {
                loss -= log_sigmoid(if positive { s } else { -s });
            }
            let g = if positive { sigmoid(s) - 1.0 } else { sigmoid(s) };
            for ((o, c), gc) in row.iter().zip(&self.center_buf).zip(self.grad_buf.iter_mut()) {
                let ov = o.get();
                *gc += g * ov;
                o.set(ov - lr * g * c);
            }
        }
        for (slot, g) in in_c.iter().zip(&self.grad_buf) {
            slot.set(slot.get() - lr * g);
        }
        loss
    }
}

/// Dot product with four independent partial sums.
#[inline]
fn slot_dot<S: Slot>(row: &[S], dense: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut rows = row.chunks_exact(4);
    let mut dens = dense.chunks_exact(4);
    for (r, d) in (&mut rows).zip(&mut dens) {
        for k in 0..4 {
            acc[k] += r[k].get() * d[k];
        }
    }
    let tail: f64 = rows.remainder().iter().zip(dens.remainder()).map(|(r, d)| r.get() * d).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

struct NoiseSampler {
    dist: WeightedAliasIndex<f64>,
}

impl NoiseSampler {
    fn new(freq: &[u64], exponent: f64) -> Option<Self> {
        let weights: Vec<f64> = freq
            .iter()
            .map(|&f| if f == 0 { 0.0 } else { (f as f64).powf(exponent) })
            .collect();
        WeightedAliasIndex::new(weights).ok().map(|dist| NoiseSampler { dist })
    }

    /// `k` noise tokens, redrawing (a bounded number of times) any that
    /// equal the observed context.
    fn fill<R: Rng>(&self, rng: &mut R, context: usize, out: &mut Vec<usize>, k: usize) {
        out.clear();
        for _ in 0..k {
            let mut t = self.dist.sample(rng);
            for _ in 0..8 {
                if t != context {
                    break;
                }
                t = self.dist.sample(rng);
            }
            out.push(t);
        }
    }
}

/// Visits every (center, context) pair of one walk.
fn for_each_pair(walk: &[Token], window: usize, mut f: impl FnMut(usize, usize)) {
    for (i, &c) in walk.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(walk.len());
        for (j, &o) in walk.iter().enumerate().take(hi).skip(lo) {
            if j != i {
                f(c as usize, o as usize);
            }
        }
    }
}

fn pairs_in_walk(len: usize, window: usize) -> usize {
    (0..len)
        .map(|i| (i + window + 1).min(len) - i.saturating_sub(window) - 1)
        .sum()
}

/// Trains input/output tables on every windowed pair of the corpus.
///
/// The learning rate decays linearly from `learning_rate` to
/// `min_learning_rate` over all pairs of all epochs. Noise tokens follow
/// corpus frequency raised to `noise_exponent`.
pub fn train(corpus: &WalkCorpus, cfg: &SgnsConfig) -> Result<EmbeddingTable, SgnsError> {
    cfg.validate()?;
    if corpus.is_empty() || corpus.token_count() == 0 {
        return Err(SgnsError::EmptyCorpus);
    }
    if corpus.vocab_size < 2 {
        return Err(SgnsError::TinyVocabulary(corpus.vocab_size));
    }
    let noise = NoiseSampler::new(&corpus.frequencies(), cfg.noise_exponent)
        .ok_or(SgnsError::EmptyCorpus)?;
    let mut table = EmbeddingTable::initialized(corpus.vocab_size, cfg.dim, cfg.seed);
    let per_epoch: usize = corpus.walks.iter().map(|w| pairs_in_walk(w.len(), cfg.window)).sum();
    let total = (per_epoch * cfg.epochs).max(1) as f64;
    let lr_at = |done: usize| {
        let frac = done as f64 / total;
        (cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * frac).max(cfg.min_learning_rate)
    };

    if cfg.workers == 1 {
        let dim = cfg.dim;
        let EmbeddingTable { input, output, .. } = &mut table;
        let input = Cell::from_mut(input.as_mut_slice()).as_slice_of_cells();
        let output = Cell::from_mut(output.as_mut_slice()).as_slice_of_cells();
        let mut kernel = Kernel {
            input,
            output,
            dim,
            center_buf: vec![0.0; dim],
            grad_buf: vec![0.0; dim],
        };
        let mut negs = Vec::with_capacity(cfg.negatives);
        let mut done = 0usize;
        for epoch in 0..cfg.epochs {
            let mut r = rng::stream(cfg.seed, &[epoch as u64]);
            let mut loss = 0.0;
            let track = log::log_enabled!(log::Level::Debug);
            for walk in &corpus.walks {
                for_each_pair(walk, cfg.window, |c, o| {
                    noise.fill(&mut r, o, &mut negs, cfg.negatives);
                    loss += kernel.step(c, o, &negs, lr_at(done), track);
                    done += 1;
                });
            }
            log::debug!("sgns epoch {epoch}: mean pair loss {:.5}", loss / per_epoch.max(1) as f64);
        }
    } else {
        train_shared(corpus, cfg, &noise, &mut table, per_epoch, total);
    }
    Ok(table)
}

/// Lock-free variant: workers own disjoint shards of the walk list and
/// update the shared tables without synchronization.
fn train_shared(
    corpus: &WalkCorpus,
    cfg: &SgnsConfig,
    noise: &NoiseSampler,
    table: &mut EmbeddingTable,
    per_epoch: usize,
    total: f64,
) {
    let to_atomic = |v: &mut Vec<f64>| -> Vec<AtomicU64> { v.iter().map(|x| AtomicU64::new(x.to_bits())).collect() };
    let input = to_atomic(&mut table.input);
    let output = to_atomic(&mut table.output);
    let shard_len = corpus.walks.len().div_ceil(cfg.workers);
    let progress = AtomicU64::new(0);
    for epoch in 0..cfg.epochs {
        corpus
            .walks
            .par_chunks(shard_len.max(1))
            .enumerate()
            .for_each(|(shard, walks)| {
                let mut kernel = Kernel {
                    input: &input,
                    output: &output,
                    dim: cfg.dim,
                    center_buf: vec![0.0; cfg.dim],
                    grad_buf: vec![0.0; cfg.dim],
                };
                let mut r = rng::stream(cfg.seed, &[epoch as u64, shard as u64 + 1]);
                let mut negs = Vec::with_capacity(cfg.negatives);
                for walk in walks {
                    let base = epoch as f64 * per_epoch as f64 + progress.load(Ordering::Relaxed) as f64;
                    let lr = (cfg.learning_rate
                        - (cfg.learning_rate - cfg.min_learning_rate) * base / total)
                        .max(cfg.min_learning_rate);
                    let mut n = 0u64;
                    for_each_pair(walk, cfg.window, |c, o| {
                        noise.fill(&mut r, o, &mut negs, cfg.negatives);
                        kernel.step(c, o, &negs, lr, false);
                        n += 1;
                    });
                    progress.fetch_add(n, Ordering::Relaxed);
                }
            });
        progress.store(0, Ordering::Relaxed);
    }
    for (dst, src) in table.input.iter_mut().zip(&input) {
        *dst = src.get();
    }
    for (dst, src) in table.output.iter_mut().zip(&output) {
        *dst = src.get();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::TokenSpace;
    use approx::assert_relative_eq;

    fn random_table(tokens: usize, dim: usize, seed: u64) -> EmbeddingTable {
        let mut r = rng::stream(seed, &[]);
        let mut rows = || (0..tokens).map(|_| (0..dim).map(|_| r.gen_range(-0.8..0.8)).collect()).collect::<Vec<Vec<f64>>>();
        let input = rows();
        let output = rows();
        EmbeddingTable::from_rows(input, output)
    }

    #[test]
    fn zero_point_loss_is_k_plus_one_ln2() {
        let t = EmbeddingTable::zeros(10, 4);
        let (loss, g) = pair_loss_and_grads(&t, 0, 1, &[2, 3, 4, 5, 6]).unwrap();
        assert_relative_eq!(loss, 6.0 * std::f64::consts::LN_2, epsilon = 1e-12);
        assert_relative_eq!(loss, 4.1589, epsilon = 1e-4);
        assert!(g.center.iter().all(|&x| x == 0.0));
        assert!(g.context.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn output_gradients_scale_by_half_at_zero_scores() {
        // in_c nonzero, out rows zero: every score is 0, σ = 1/2
        let mut t = EmbeddingTable::zeros(4, 3);
        t.input_mut()[..3].copy_from_slice(&[1.0, -2.0, 0.5]);
        let (_, g) = pair_loss_and_grads(&t, 0, 1, &[2, 3]).unwrap();
        assert_eq!(g.context, vec![-0.5, 1.0, -0.25]);
        assert_eq!(g.negatives[0], vec![0.5, -1.0, 0.25]);
    }

    #[test]
    fn unknown_token_rejected() {
        let t = EmbeddingTable::zeros(3, 2);
        assert_eq!(
            pair_loss_and_grads(&t, 0, 1, &[7]).unwrap_err(),
            SgnsError::UnknownToken { token: 7, tokens: 3 }
        );
    }

    #[test]
    fn single_step_descends() {
        let mut t = random_table(6, 5, 3);
        let negs = [2, 3, 4];
        let (before, _) = pair_loss_and_grads(&t, 0, 1, &negs).unwrap();
        let dim = t.dim();
        {
            let EmbeddingTable { input, output, .. } = &mut t;
            let mut k = Kernel {
                input: Cell::from_mut(input.as_mut_slice()).as_slice_of_cells(),
                output: Cell::from_mut(output.as_mut_slice()).as_slice_of_cells(),
                dim,
                center_buf: vec![0.0; dim],
                grad_buf: vec![0.0; dim],
            };
            let reported = k.step(0, 1, &negs, 0.01, true);
            assert_relative_eq!(reported, before, epsilon = 1e-12);
        }
        let (after, _) = pair_loss_and_grads(&t, 0, 1, &negs).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn kernel_step_matches_explicit_gradients() {
        let t0 = random_table(6, 4, 9);
        let negs = [2, 5, 3];
        let lr = 0.05;
        let (_, g) = pair_loss_and_grads(&t0, 0, 1, &negs).unwrap();
        let mut t = t0.clone();
        let dim = t.dim();
        {
            let EmbeddingTable { input, output, .. } = &mut t;
            let mut k = Kernel {
                input: Cell::from_mut(input.as_mut_slice()).as_slice_of_cells(),
                output: Cell::from_mut(output.as_mut_slice()).as_slice_of_cells(),
                dim,
                center_buf: vec![0.0; dim],
                grad_buf: vec![0.0; dim],
            };
            k.step(0, 1, &negs, lr, true);
        }
        for i in 0..dim {
            assert_relative_eq!(t.vector(0)[i], t0.vector(0)[i] - lr * g.center[i], epsilon = 1e-12);
            assert_relative_eq!(t.output_vector(1)[i], t0.output_vector(1)[i] - lr * g.context[i], epsilon = 1e-12);
            assert_relative_eq!(t.output_vector(5)[i], t0.output_vector(5)[i] - lr * g.negatives[1][i], epsilon = 1e-12);
        }
    }

    #[test]
    fn pair_counting() {
        let mut n = 0;
        for_each_pair(&[0, 1, 2, 3], 1, |_, _| n += 1);
        assert_eq!(n, 6);
        assert_eq!(pairs_in_walk(4, 1), 6);
        assert_eq!(pairs_in_walk(25, 5), (0..25).map(|i: usize| (i + 6).min(25) - i.saturating_sub(5) - 1).sum::<usize>());
    }

    fn alternating_corpus() -> WalkCorpus {
        WalkCorpus {
            space: TokenSpace::Vertex,
            vocab_size: 2,
            walk_length: 10,
            walks: (0..40).map(|i| (0..10).map(|j| ((i + j) % 2) as Token).collect()).collect(),
        }
    }

    #[test]
    fn config_and_corpus_errors() {
        let c = alternating_corpus();
        let bad = SgnsConfig { dim: 0, ..SgnsConfig::default() };
        assert!(matches!(train(&c, &bad), Err(SgnsError::Config(_))));
        let empty = WalkCorpus { walks: vec![], ..c.clone() };
        assert_eq!(train(&empty, &SgnsConfig::with_dim(4)), Err(SgnsError::EmptyCorpus));
    }

    #[test]
    fn deterministic_and_finite() {
        let c = alternating_corpus();
        let cfg = SgnsConfig { seed: 4, ..SgnsConfig::with_dim(8) };
        let a = train(&c, &cfg).unwrap();
        assert_eq!(a, train(&c, &cfg).unwrap());
        assert!(a.is_finite());
        assert_eq!(a.tokens(), 2);
        assert_eq!(a.dim(), 8);
    }

    #[test]
    fn shared_workers_train_too() {
        let c = alternating_corpus();
        let cfg = SgnsConfig { workers: 4, window: 1, epochs: 20, learning_rate: 0.1, ..SgnsConfig::with_dim(8) };
        let t = train(&c, &cfg).unwrap();
        assert!(t.is_finite());
        assert!(t.pair_score(0, 1) > 0.5);
    }

    #[test]
    fn text_format_round_trip() {
        let t = random_table(3, 2, 1);
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 2\n0 "));
        let back = EmbeddingTable::read_text(&buf[..]).unwrap();
        for tok in 0..3 {
            assert_eq!(back.vector(tok), t.vector(tok));
        }
        assert!(EmbeddingTable::read_text(&b"2 2\n0 1 2\n"[..]).is_err());
    }
}
