//! Property checks shared by the integration tests and the acceptance runner.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use hyperwalk::dhe::{DheConfig, DheModel, HyperedgeExample, InputDims, Mode, Variant};
use hyperwalk::hypergraph::Hypergraph;
use hyperwalk::metrics::ConfusionMatrix;
use hyperwalk::neural::{softmax_cross_entropy_batch, Activation, Dropout, Mlp};
use hyperwalk::rng;
use hyperwalk::sgns::{pair_loss_and_grads, EmbeddingTable};
use hyperwalk::walks::{sat_walk_with, traverse_probability, WalkConfig};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EPS: f64 = 1e-4;

/// `‖a − n‖ / (‖a‖ + ‖n‖)`; 0 when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = norm(analytic) + norm(numeric);
    if denom == 0.0 {
        0.0
    } else {
        diff / denom
    }
}

pub fn central_difference(params: &mut [f64], i: usize, mut loss: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = params[i];
    params[i] = orig + EPS;
    let up = loss(params);
    params[i] = orig - EPS;
    let down = loss(params);
    params[i] = orig;
    (up - down) / (2.0 * EPS)
}

fn random_table(tokens: usize, dim: usize, seed: u64) -> EmbeddingTable {
    let mut r = rng::stream(seed, &[]);
    let mut rows = || (0..tokens).map(|_| (0..dim).map(|_| r.gen_range(-0.8..0.8)).collect()).collect();
    let input = rows();
    let output = rows();
    EmbeddingTable::from_rows(input, output)
}

fn slot(t: &mut EmbeddingTable, input: bool, i: usize) -> &mut f64 {
    if input {
        &mut t.input_mut()[i]
    } else {
        &mut t.output_mut()[i]
    }
}

/// Largest relative error of the skip-gram pair gradients (center, context
/// and every noise token) over `seeds` random tables.
pub fn skipgram_gradient_error(seeds: u64) -> f64 {
    let (tokens, dim) = (7, 6);
    let (center, context) = (1, 4);
    // token 2 appears twice: repeated noise slots accumulate
    let negatives = [2, 5, 2, 0];
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut table = random_table(tokens, dim, seed);
        let (_, grads) = pair_loss_and_grads(&table, center, context, &negatives).unwrap();
        let loss_of = |t: &EmbeddingTable| pair_loss_and_grads(t, center, context, &negatives).unwrap().0;
        let numeric = |table: &mut EmbeddingTable, token: usize, input: bool| -> Vec<f64> {
            (0..dim)
                .map(|k| {
                    let i = token * dim + k;
                    let orig = *slot(table, input, i);
                    *slot(table, input, i) = orig + EPS;
                    let up = loss_of(table);
                    *slot(table, input, i) = orig - EPS;
                    let down = loss_of(table);
                    *slot(table, input, i) = orig;
                    (up - down) / (2.0 * EPS)
                })
                .collect()
        };
        worst = worst.max(relative_error(&grads.center, &numeric(&mut table, center, true)));
        worst = worst.max(relative_error(&grads.context, &numeric(&mut table, context, false)));
        let mut per_token = vec![vec![0.0; dim]; tokens];
        for (slot, &n) in negatives.iter().enumerate() {
            for (acc, g) in per_token[n].iter_mut().zip(&grads.negatives[slot]) {
                *acc += g;
            }
        }
        for n in [0, 2, 5] {
            worst = worst.max(relative_error(&per_token[n], &numeric(&mut table, n, false)));
        }
    }
    worst
}

fn mlp_params(m: &Mlp) -> Vec<f64> {
    m.layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
        .collect()
}

fn set_mlp_params(m: &mut Mlp, values: &[f64]) {
    let mut it = values.iter();
    for l in &mut m.layers {
        for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
            *p = *it.next().unwrap();
        }
    }
}

/// Relative errors (parameters, inputs) of a three-layer stack under mean
/// softmax cross-entropy, optionally through sampled-then-fixed dropout masks.
pub fn mlp_gradient_error(activations: &[Activation], dropout: bool, seed: u64) -> (f64, f64) {
    let widths = [5, 7, 6, 3];
    let mut r = rng::stream(seed, &[]);
    let mut net = Mlp::build(&widths, activations, &[dropout, dropout, false], &mut r).unwrap();
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| r.gen_range(-0.5..0.5));
    }
    let mut xr = rng::stream(seed, &[1]);
    let x = Array2::from_shape_simple_fn((4, 5), || xr.gen_range(-1.0..1.0));
    let labels = [0, 2, 1, 2];
    let masks = if dropout {
        let mut mr = rng::stream(seed, &[2]);
        net.forward(x.view(), &mut Dropout::Sample { rate: 0.3, rng: &mut mr }).unwrap().1.masks().to_vec()
    } else {
        vec![None; 3]
    };
    let loss_at = |net: &Mlp, x: &Array2<f64>| {
        let (y, _) = net.forward(x.view(), &mut Dropout::Fixed(&masks)).unwrap();
        softmax_cross_entropy_batch(y.view(), &labels).unwrap().0
    };
    let (y, cache) = net.forward(x.view(), &mut Dropout::Fixed(&masks)).unwrap();
    let (_, g) = softmax_cross_entropy_batch(y.view(), &labels).unwrap();
    let (grads, grad_input) = net.backward(&cache, g.view()).unwrap();
    let analytic: Vec<f64> = grads
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>())
        .collect();
    let mut params = mlp_params(&net);
    let mut probe = net.clone();
    let numeric: Vec<f64> = (0..params.len())
        .map(|i| {
            central_difference(&mut params, i, |p| {
                set_mlp_params(&mut probe, p);
                loss_at(&probe, &x)
            })
        })
        .collect();
    let mut flat = x.iter().copied().collect::<Vec<_>>();
    let numeric_input: Vec<f64> = (0..flat.len())
        .map(|i| {
            central_difference(&mut flat, i, |p| loss_at(&net, &Array2::from_shape_vec((4, 5), p.to_vec()).unwrap()))
        })
        .collect();
    (
        relative_error(&analytic, &numeric),
        relative_error(grad_input.as_slice().unwrap(), &numeric_input),
    )
}

pub fn toy_examples(seed: u64, features: bool) -> Vec<HyperedgeExample> {
    let mut r = rng::stream(seed, &[3]);
    (0..6)
        .map(|i| HyperedgeExample {
            id: i,
            context: Array1::from_shape_simple_fn(5, || r.gen_range(-1.0..1.0)),
            members: Array2::from_shape_simple_fn((1 + i % 4, 3), || r.gen_range(-1.0..1.0)),
            features: features.then(|| Array1::from_shape_simple_fn(4, || r.gen_range(-1.0..1.0))),
            label: i % 3,
        })
        .collect()
}

pub fn toy_model(variant: Variant, features: bool, seed: u64) -> DheModel {
    let cfg = DheConfig {
        hidden_width: 6,
        context_out_width: 4,
        classes: 3,
        use_features: features,
        variant,
        dropout_rate: 0.4,
        seed,
        ..Default::default()
    };
    let dims = InputDims {
        context: 5,
        member: 3,
        features: if features { 4 } else { 0 },
    };
    let mut m = DheModel::new(cfg, dims).unwrap();
    // zero biases would put ReLU units of identical inputs on a shared kink
    let mut r = rng::stream(seed, &[4]);
    let mut p = m.parameters();
    for x in &mut p {
        *x += r.gen_range(-0.05..0.05);
    }
    m.set_parameters(&p).unwrap();
    m
}

/// Smallest |pre-activation| over every ReLU unit the examples reach in
/// eval mode; finite differences are only trusted well away from the kink.
pub fn relu_margin(model: &DheModel, examples: &[HyperedgeExample]) -> f64 {
    let mut margin = f64::INFINITY;
    let mut run = |net: &Mlp, x: Array2<f64>| -> Array2<f64> {
        let mut cur = x;
        for l in &net.layers {
            cur = cur.dot(&l.weights.t()) + &l.bias;
            match l.activation {
                Activation::Relu => {
                    margin = cur.iter().fold(margin, |m, v| m.min(v.abs()));
                    cur.mapv_inplace(|v| v.max(0.0));
                }
                Activation::Tanh => cur.mapv_inplace(f64::tanh),
                _ => {}
            }
        }
        cur
    };
    for e in examples {
        let mut parts = Vec::new();
        if let Some(c) = &model.context {
            parts.push(run(c, e.context.clone().insert_axis(Axis(0))));
        }
        if let (Some(member), Some(set)) = (&model.member, &model.set) {
            let pooled = run(member, e.members.clone()).sum_axis(Axis(0)).insert_axis(Axis(0));
            parts.push(run(set, pooled));
        }
        if let Some(f) = &e.features {
            let x = f.clone().insert_axis(Axis(0));
            parts.push(match &model.feature {
                Some(net) => run(net, x),
                None => x,
            });
        }
        let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
        run(&model.fusion, ndarray::concatenate(Axis(1), &views).unwrap());
    }
    margin
}

/// Relative error of the full classifier gradient for one seed, or `None`
/// when some ReLU unit sits within 1e-3 of its kink.
pub fn model_gradient_error(variant: Variant, features: bool, replay_dropout: bool, seed: u64) -> Option<f64> {
    let model = toy_model(variant, features, seed);
    let examples = toy_examples(seed, features);
    if relu_margin(&model, &examples) < 1e-3 {
        return None;
    }
    let batch: Vec<&HyperedgeExample> = examples.iter().collect();
    let masks = if replay_dropout {
        model.sample_masks(&batch, &mut rng::stream(seed, &[5])).unwrap()
    } else {
        Default::default()
    };
    let mode = || if replay_dropout { Mode::Replay(&masks) } else { Mode::Eval };
    let (_, grads) = model.loss_and_grads(&batch, &mut mode()).unwrap();
    let analytic = grads.values();
    let mut params = model.parameters();
    assert_eq!(params.len(), analytic.len());
    let mut probe = model.clone();
    let numeric: Vec<f64> = (0..params.len())
        .map(|i| {
            central_difference(&mut params, i, |p| {
                probe.set_parameters(p).unwrap();
                probe.loss_and_grads(&batch, &mut mode()).unwrap().0
            })
        })
        .collect();
    Some(relative_error(&analytic, &numeric))
}

/// Worst relative error over `count` kink-free seeds per variant, with and
/// without replayed dropout.
pub fn full_model_gradient_error(count: usize) -> f64 {
    let cases = [
        (Variant::Full, true, false),
        (Variant::Full, false, false),
        (Variant::MembershipOnly, true, false),
        (Variant::ContextOnly, false, false),
        (Variant::Full, true, true),
    ];
    let mut worst = 0.0f64;
    for (variant, features, replay) in cases {
        let errors: Vec<f64> = (0..200)
            .filter_map(|seed| model_gradient_error(variant, features, replay, seed))
            .take(count)
            .collect();
        assert_eq!(errors.len(), count, "too few seeds clear of ReLU kinks");
        worst = errors.into_iter().fold(worst, f64::max);
    }
    worst
}

/// Largest output difference of the membership representation and the
/// class probabilities under random member permutations.
pub fn permutation_invariance_error(trials: usize) -> f64 {
    let dims = InputDims {
        context: 8,
        member: 6,
        features: 5,
    };
    let model = DheModel::new(
        DheConfig {
            hidden_width: 20,
            context_out_width: 7,
            classes: 4,
            use_features: true,
            seed: 9,
            ..Default::default()
        },
        dims,
    )
    .unwrap();
    let mut r = rng::stream(31, &[]);
    let mut worst = 0.0f64;
    for id in 0..trials {
        let n = r.gen_range(1..=40);
        let e = HyperedgeExample {
            id,
            context: Array1::from_shape_simple_fn(8, || r.gen_range(-1.0..1.0)),
            members: Array2::from_shape_simple_fn((n, 6), || r.gen_range(-1.0..1.0)),
            features: Some(Array1::from_shape_simple_fn(5, || r.gen_range(-1.0..1.0))),
            label: 0,
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let mut shuffled = e.clone();
        shuffled.members = e.members.select(Axis(0), &order);
        let diff = |a: Array1<f64>, b: Array1<f64>| (a - b).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(diff(model.membership_repr(&e).unwrap(), model.membership_repr(&shuffled).unwrap()));
        worst = worst.max(diff(model.forward(&e).unwrap(), model.forward(&shuffled).unwrap()));
    }
    worst
}

/// Random hypergraph whose every vertex lies in some hyperedge.
pub fn random_covered_hypergraph<R: Rng>(r: &mut R, max_vertices: usize, max_hyperedges: usize) -> Hypergraph {
    let n = r.gen_range(1..=max_vertices);
    let m = r.gen_range(1..=max_hyperedges);
    let mut edges: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let k = r.gen_range(1..=n);
            rand::seq::index::sample(r, n, k).into_vec()
        })
        .collect();
    for v in 0..n {
        if !edges.iter().any(|e| e.contains(&v)) {
            let e = r.gen_range(0..m);
            edges[e].push(v);
        }
    }
    Hypergraph::new(n, edges).unwrap()
}

/// Number of random hypergraphs for which `dual(dual(h)) != h`.
pub fn dual_involution_failures(count: usize) -> usize {
    let mut r = rng::stream(0xd0a1, &[]);
    (0..count)
        .filter(|_| {
            let h = random_covered_hypergraph(&mut r, 50, 50);
            h.dual().and_then(|d| d.dual()).map_or(true, |dd| dd != h)
        })
        .count()
}

#[derive(Debug, Clone, Copy)]
pub struct DwellResult {
    pub alpha: f64,
    pub beta: f64,
    pub cardinality: usize,
    pub mean: f64,
    pub expected: f64,
    pub standard_error: f64,
    pub samples: usize,
}

impl DwellResult {
    pub fn within(&self, k: f64) -> bool {
        (self.mean - self.expected).abs() <= k * self.standard_error
    }
}

/// Mean number of consecutive steps spent in one hyperedge.
///
/// On the row/column grid every vertex lies in exactly one row and one
/// column, so each traversal really leaves the hyperedge and every dwell
/// is geometric with mean 1/p. Only dwells starting in the first half of a
/// walk are counted; dropping dwells cut off by the walk end instead would
/// favour short ones.
pub fn dwell_time(alpha: f64, beta: f64, cardinality: usize, walks: usize, seed: u64) -> DwellResult {
    let n = cardinality;
    let rows = (0..n).map(|i| (0..n).map(|j| i * n + j).collect());
    let cols = (0..n).map(|j| (0..n).map(|i| i * n + j).collect());
    let h = Hypergraph::new(n * n, rows.chain(cols).collect()).unwrap();
    let cfg = WalkConfig {
        alpha,
        beta,
        walks_per_start: 1,
        walk_length: 400,
        seed,
    };
    let horizon = cfg.walk_length / 2;
    let mut lengths = Vec::new();
    for w in 0..walks {
        let mut r = rng::stream(seed, &[w as u64]);
        // (start step, length) of each dwell
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut current = None;
        let mut step = 0;
        sat_walk_with(&h, w % (n * n), &cfg, &mut r, |s| {
            if current == Some(s.hyperedge) {
                runs.last_mut().unwrap().1 += 1;
            } else {
                current = Some(s.hyperedge);
                runs.push((step, 1));
            }
            step += 1;
        })
        .unwrap();
        lengths.extend(
            runs.iter()
                .filter(|&&(start, len)| start < horizon && start + len < cfg.walk_length)
                .map(|&(_, len)| len),
        );
    }
    let k = lengths.len() as f64;
    let mean = lengths.iter().sum::<usize>() as f64 / k;
    let var = lengths.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / (k - 1.0);
    DwellResult {
        alpha,
        beta,
        cardinality,
        mean,
        expected: 1.0 / traverse_probability(cardinality, &cfg).unwrap(),
        standard_error: (var / k).sqrt(),
        samples: lengths.len(),
    }
}

/// Three (alpha, beta, cardinality) settings, each with walks enough for
/// about 10^5 counted dwells.
pub fn dwell_settings() -> Vec<DwellResult> {
    [(1.0, 0.0, 8), (1.0, 0.1, 5), (0.5, 0.05, 20)]
        .iter()
        .enumerate()
        .map(|(i, &(a, b, n))| {
            let mean = 1.0 / (a / n as f64 + b);
            let walks = (1.1e5 * mean / 200.0).ceil() as usize;
            dwell_time(a, b, n, walks, 0xd3e1 + i as u64)
        })
        .collect()
}

/// Largest |micro-F1 − accuracy| over random confusion matrices.
pub fn micro_accuracy_gap(count: usize) -> f64 {
    let mut r = rng::stream(0xf1, &[]);
    (0..count)
        .map(|_| {
            let k = r.gen_range(2..=12);
            let counts = (0..k * k).map(|_| if r.gen_bool(0.3) { 0 } else { r.gen_range(0..500) }).collect();
            let mut cm = ConfusionMatrix::from_counts(k, counts);
            if cm.total() == 0 {
                cm.record(0, 0).unwrap();
            }
            (cm.micro_f1().unwrap() - cm.accuracy().unwrap()).abs()
        })
        .fold(0.0, f64::max)
}

/// Every `.csv` file under `root`, relative path → contents, sorted.
pub fn csv_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, root, out);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

/// Small planted-set pipeline config for end-to-end runs.
pub fn small_pipeline_config() -> String {
    r#"{
  "version": 1,
  "dataset": {
    "kind": "planted",
    "name": "tiny",
    "planted": {"communities": 6, "community_size": 10, "positives": 60, "max_cardinality": 8},
    "negatives": {"scheme": "uniform_cardinality"}
  },
  "walks": {"walks_per_start": 4, "walk_length": 12},
  "vertex_embedding": {"dim": 8, "epochs": 1},
  "hyperedge_embedding": {"dim": 8, "epochs": 1},
  "model": {"hidden_width": 12, "epochs": 5},
  "splits": [[0.5, 0.5], [0.8, 0.1, 0.1]],
  "runs": 2,
  "seed": 5
}
"#
    .to_string()
}

pub fn hyperwalk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hyperwalk"))
        .args(args)
        .env("HYPERWALK_LOG", "warn")
        .output()
        .unwrap()
}

/// Runs the sequential pipeline twice into fresh directories; returns the
/// number of CSV files compared, or the first difference.
pub fn pipeline_determinism(config: &str) -> Result<usize, String> {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = hyperwalk(&[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--jobs",
            "1",
        ]);
        if !o.status.success() {
            return Err(format!("pipeline failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
        outputs.push(csv_files(&out));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    if a.is_empty() {
        return Err("no CSV output".into());
    }
    if a.len() != b.len() {
        return Err(format!("{} vs {} CSV files", a.len(), b.len()));
    }
    for ((pa, ca), (pb, cb)) in a.iter().zip(b) {
        if pa != pb || ca != cb {
            return Err(format!("{} differs", pa.display()));
        }
    }
    Ok(a.len())
}
