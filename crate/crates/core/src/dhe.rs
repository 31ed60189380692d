//! Hyperedge classifier fusing three branches:
//!
//! - context: an MLP over the hyperedge embedding,
//! - membership: a per-member MLP summed over members, then a set MLP,
//! - features (optional): an MLP over standardized hyperedge features.
//!
//! Branch outputs are concatenated and passed through a fusion MLP with a
//! softmax head.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::Hypergraph;
use crate::metrics::ConfusionMatrix;
use crate::neural::{
    self, softmax_cross_entropy_batch, Activation, Dropout, Mlp, MlpCache, MlpGrads, MlpRecord, NeuralError,
};
use crate::rng::{self, StreamRng};
use crate::sgns::EmbeddingTable;

#[derive(Debug, Error, PartialEq)]
pub enum DheError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("hyperedge {id}: {message}")]
    Example { id: usize, message: String },
    #[error("training split is empty")]
    EmptyTraining,
    #[error("model checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Which branches feed the fusion head.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Full,
    /// Membership branch only (plus features when enabled).
    MembershipOnly,
    /// Context branch only (plus features when enabled).
    ContextOnly,
}

impl Variant {
    pub fn uses_context(self) -> bool {
        self != Variant::MembershipOnly
    }

    pub fn uses_membership(self) -> bool {
        self != Variant::ContextOnly
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DheConfig {
    /// Layers in the context network, counting its narrow output layer.
    pub context_layers: usize,
    /// Layers applied to the summed member representation.
    pub set_layers: usize,
    /// Hidden layers between the concatenation and the softmax layer.
    pub fusion_layers: usize,
    /// Layers of the feature branch; 0 concatenates the standardized
    /// features directly.
    pub feature_layers: usize,
    /// Layers of the per-member network.
    pub member_layers: usize,
    pub hidden_width: usize,
    pub context_out_width: usize,
    pub classes: usize,
    pub use_features: bool,
    pub variant: Variant,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Early-stopping patience in epochs, used when a validation set exists.
    pub patience: usize,
    pub seed: u64,
}

impl Default for DheConfig {
    fn default() -> Self {
        DheConfig {
            context_layers: 2,
            set_layers: 2,
            fusion_layers: 2,
            feature_layers: 1,
            member_layers: 2,
            hidden_width: 100,
            context_out_width: 30,
            classes: 2,
            use_features: false,
            variant: Variant::Full,
            dropout_rate: 0.5,
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 32,
            patience: 20,
            seed: 0,
        }
    }
}

impl DheConfig {
    pub fn validate(&self) -> Result<(), DheError> {
        let fail = |m: &str| Err(DheError::Config(m.to_string()));
        if self.hidden_width == 0 || self.context_out_width == 0 {
            return fail("widths must be at least 1");
        }
        if self.classes < 2 {
            return fail("need at least 2 classes");
        }
        if self.context_layers == 0 || self.member_layers == 0 || self.set_layers == 0 {
            return fail("context, member and set networks need at least one layer");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return fail("dropout rate must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1");
        }
        Ok(())
    }
}

/// Input widths the model is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDims {
    pub context: usize,
    pub member: usize,
    /// 0 when the examples carry no features.
    pub features: usize,
}

/// One hyperedge as the classifier sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperedgeExample {
    pub id: usize,
    pub context: Array1<f64>,
    /// One row per member vertex.
    pub members: Array2<f64>,
    pub features: Option<Array1<f64>>,
    pub label: usize,
}

impl HyperedgeExample {
    pub fn dims(&self) -> InputDims {
        InputDims {
            context: self.context.len(),
            member: self.members.ncols(),
            features: self.features.as_ref().map_or(0, Array1::len),
        }
    }
}

/// Looks up context and member embeddings for every hyperedge of `h`.
pub fn build_examples(
    h: &Hypergraph,
    hyperedge_table: &EmbeddingTable,
    vertex_table: &EmbeddingTable,
    features: Option<&[Vec<f64>]>,
    labels: &[usize],
) -> Result<Vec<HyperedgeExample>, DheError> {
    let bad = |m: String| DheError::Config(m);
    if hyperedge_table.tokens() != h.n_hyperedges() || vertex_table.tokens() != h.n_vertices() {
        return Err(bad(format!(
            "tables hold {} hyperedges and {} vertices, hypergraph has {} and {}",
            hyperedge_table.tokens(),
            vertex_table.tokens(),
            h.n_hyperedges(),
            h.n_vertices()
        )));
    }
    if labels.len() != h.n_hyperedges() || features.is_some_and(|f| f.len() != h.n_hyperedges()) {
        return Err(bad("labels and features need one entry per hyperedge".into()));
    }
    let dim = vertex_table.dim();
    Ok((0..h.n_hyperedges())
        .map(|e| {
            let members = h.members(e);
            let mut rows = Array2::zeros((members.len(), dim));
            for (i, &v) in members.iter().enumerate() {
                rows.row_mut(i).assign(&ndarray::aview1(vertex_table.vector(v)));
            }
            HyperedgeExample {
                id: e,
                context: Array1::from(hyperedge_table.vector(e).to_vec()),
                members: rows,
                features: features.map(|f| Array1::from(f[e].clone())),
                label: labels[e],
            }
        })
        .collect())
}

/// Per-dimension standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Array1<f64>>, width: usize) -> Self {
        let mut n = 0.0;
        let mut sum = Array1::<f64>::zeros(width);
        let mut sq = Array1::<f64>::zeros(width);
        for r in rows {
            n += 1.0;
            sum += r;
            sq += &r.mapv(|x| x * x);
        }
        let n = f64::max(n, 1.0);
        let mean = &sum / n;
        let var = &sq / n - &mean.mapv(|m| m * m);
        let scale = var.mapv(|v| if v > 1e-12 { 1.0 / v.sqrt() } else { 1.0 });
        Standardizer {
            mean: mean.to_vec(),
            scale: scale.to_vec(),
        }
    }

    pub fn identity(width: usize) -> Self {
        Standardizer {
            mean: vec![0.0; width],
            scale: vec![1.0; width],
        }
    }

    fn apply(&self, x: &Array1<f64>, out: &mut ndarray::ArrayViewMut1<'_, f64>) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (x[j] - self.mean[j]) * self.scale[j];
        }
    }
}

/// Dropout masks of one training pass, replayable for gradient checks.
#[derive(Debug, Clone, Default)]
pub struct DheMasks {
    pub context: Vec<Option<Array2<f64>>>,
    pub fusion: Vec<Option<Array2<f64>>>,
}

pub enum Mode<'a> {
    Eval,
    Train(&'a mut StreamRng),
    Replay(&'a DheMasks),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DheModel {
    pub config: DheConfig,
    pub dims: InputDims,
    pub context: Option<Mlp>,
    pub member: Option<Mlp>,
    pub set: Option<Mlp>,
    pub feature: Option<Mlp>,
    pub fusion: Mlp,
    pub scaler: Option<Standardizer>,
}

/// Gradients for every network of a [`DheModel`], same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DheGrads {
    pub context: Option<MlpGrads>,
    pub member: Option<MlpGrads>,
    pub set: Option<MlpGrads>,
    pub feature: Option<MlpGrads>,
    pub fusion: MlpGrads,
}

impl DheGrads {
    /// Flat view in [`DheModel::parameters`] order.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in [&self.context, &self.member, &self.set, &self.feature]
            .into_iter()
            .flatten()
            .chain(std::iter::once(&self.fusion))
        {
            for l in &g.layers {
                out.extend(l.weights.iter());
                out.extend(l.bias.iter());
            }
        }
        out
    }
}

struct Pass {
    context: Option<MlpCache>,
    member: Option<MlpCache>,
    set: Option<MlpCache>,
    feature: Option<MlpCache>,
    fusion: MlpCache,
    offsets: Vec<usize>,
}

fn dropout_for<'a>(mode: &'a mut Mode<'_>, rate: f64, replay: impl Fn(&'a DheMasks) -> &'a [Option<Array2<f64>>]) -> Dropout<'a> {
    match mode {
        Mode::Eval => Dropout::Off,
        Mode::Train(rng) => Dropout::Sample { rate, rng },
        Mode::Replay(m) => Dropout::Fixed(replay(m)),
    }
}

impl DheModel {
    pub fn new(config: DheConfig, dims: InputDims) -> Result<Self, DheError> {
        config.validate()?;
        if config.use_features && dims.features == 0 {
            return Err(DheError::Config("features enabled but input has no feature columns".into()));
        }
        let w = config.hidden_width;
        let mut r = rng::stream(config.seed, &[0xde1]);
        let stack = |input: usize, layers: usize, out: usize, act: Activation, dropout: bool, r: &mut StreamRng| {
            let mut widths = vec![input];
            widths.extend(std::iter::repeat_n(w, layers - 1));
            widths.push(out);
            let mut drop = vec![dropout; layers];
            drop[layers - 1] = false;
            Mlp::build(&widths, &vec![act; layers], &drop, r)
        };
        let context = if config.variant.uses_context() {
            Some(stack(dims.context, config.context_layers, config.context_out_width, Activation::Relu, true, &mut r)?)
        } else {
            None
        };
        let (member, set) = if config.variant.uses_membership() {
            (
                Some(stack(dims.member, config.member_layers, w, Activation::Tanh, false, &mut r)?),
                Some(stack(w, config.set_layers, w, Activation::Relu, false, &mut r)?),
            )
        } else {
            (None, None)
        };
        let feature = if config.use_features && config.feature_layers > 0 {
            Some(stack(dims.features, config.feature_layers, w, Activation::Relu, false, &mut r)?)
        } else {
            None
        };
        let fused = context.as_ref().map_or(0, Mlp::outputs)
            + set.as_ref().map_or(0, Mlp::outputs)
            + match (&feature, config.use_features) {
                (Some(f), _) => f.outputs(),
                (None, true) => dims.features,
                (None, false) => 0,
            };
        let mut widths = vec![fused];
        widths.extend(std::iter::repeat_n(w, config.fusion_layers));
        widths.push(config.classes);
        let mut acts = vec![Activation::Relu; config.fusion_layers];
        acts.push(Activation::Identity);
        let mut drop = vec![true; config.fusion_layers];
        drop.push(false);
        let fusion = Mlp::build(&widths, &acts, &drop, &mut r)?;
        Ok(DheModel {
            config,
            dims,
            context,
            member,
            set,
            feature,
            fusion,
            scaler: None,
        })
    }

    /// Width of the concatenated branch outputs.
    pub fn fusion_inputs(&self) -> usize {
        self.fusion.inputs()
    }

    fn networks(&self) -> impl Iterator<Item = &Mlp> {
        [&self.context, &self.member, &self.set, &self.feature]
            .into_iter()
            .flatten()
            .chain(std::iter::once(&self.fusion))
    }

    pub fn parameter_count(&self) -> usize {
        self.networks().map(Mlp::parameter_count).sum()
    }

    /// All parameters, flattened network by network, weights before bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for n in self.networks() {
            for l in &n.layers {
                out.extend(l.weights.iter());
                out.extend(l.bias.iter());
            }
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<(), DheError> {
        if values.len() != self.parameter_count() {
            return Err(DheError::Config(format!(
                "{} parameter values for {} parameters",
                values.len(),
                self.parameter_count()
            )));
        }
        let mut it = values.iter().copied();
        for n in [&mut self.context, &mut self.member, &mut self.set, &mut self.feature]
            .into_iter()
            .flatten()
            .chain(std::iter::once(&mut self.fusion))
        {
            for l in &mut n.layers {
                l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|p| *p = it.next().unwrap());
            }
        }
        Ok(())
    }

    fn check(&self, e: &HyperedgeExample) -> Result<(), DheError> {
        let fail = |message: String| Err(DheError::Example { id: e.id, message });
        let d = e.dims();
        if self.context.is_some() && d.context != self.dims.context {
            return fail(format!("context width {} but model expects {}", d.context, self.dims.context));
        }
        if self.member.is_some() {
            if e.members.nrows() == 0 {
                return fail("hyperedge has no members".into());
            }
            if d.member != self.dims.member {
                return fail(format!("member width {} but model expects {}", d.member, self.dims.member));
            }
        }
        if self.config.use_features {
            match &e.features {
                None => return fail("features are enabled but missing".into()),
                Some(f) if f.len() != self.dims.features => {
                    return fail(format!("{} features but model expects {}", f.len(), self.dims.features))
                }
                _ => {}
            }
        }
        if e.label >= self.config.classes {
            return fail(format!("label {} out of range for {} classes", e.label, self.config.classes));
        }
        Ok(())
    }

    fn forward_batch(&self, batch: &[&HyperedgeExample], mode: &mut Mode<'_>) -> Result<(Array2<f64>, Pass), DheError> {
        for e in batch {
            self.check(e)?;
        }
        let rate = self.config.dropout_rate;
        let mut parts: Vec<Array2<f64>> = Vec::with_capacity(3);
        let mut pass = Pass {
            context: None,
            member: None,
            set: None,
            feature: None,
            fusion: self.fusion.forward(Array2::zeros((0, self.fusion.inputs())).view(), &mut Dropout::Off)?.1,
            offsets: Vec::new(),
        };
        if let Some(net) = &self.context {
            let mut x = Array2::zeros((batch.len(), self.dims.context));
            for (i, e) in batch.iter().enumerate() {
                x.row_mut(i).assign(&e.context);
            }
            let (y, cache) = net.forward(x.view(), &mut dropout_for(mode, rate, |m| &m.context))?;
            parts.push(y);
            pass.context = Some(cache);
        }
        if let (Some(member), Some(set)) = (&self.member, &self.set) {
            let views: Vec<ArrayView2<'_, f64>> = batch.iter().map(|e| e.members.view()).collect();
            let stacked = concatenate(Axis(0), &views).map_err(|e| DheError::Config(e.to_string()))?;
            let (per_member, cache) = member.forward(stacked.view(), &mut Dropout::Off)?;
            let mut offsets = Vec::with_capacity(batch.len() + 1);
            offsets.push(0);
            let mut pooled = Array2::zeros((batch.len(), member.outputs()));
            for (i, e) in batch.iter().enumerate() {
                let start = *offsets.last().unwrap();
                let end = start + e.members.nrows();
                pooled.row_mut(i).assign(&per_member.slice(s![start..end, ..]).sum_axis(Axis(0)));
                offsets.push(end);
            }
            let (y, set_cache) = set.forward(pooled.view(), &mut Dropout::Off)?;
            parts.push(y);
            pass.member = Some(cache);
            pass.set = Some(set_cache);
            pass.offsets = offsets;
        }
        if self.config.use_features {
            let identity;
            let scaler = match &self.scaler {
                Some(s) => s,
                None => {
                    identity = Standardizer::identity(self.dims.features);
                    &identity
                }
            };
            let mut x = Array2::zeros((batch.len(), self.dims.features));
            for (i, e) in batch.iter().enumerate() {
                scaler.apply(e.features.as_ref().unwrap(), &mut x.row_mut(i));
            }
            match &self.feature {
                Some(net) => {
                    let (y, cache) = net.forward(x.view(), &mut Dropout::Off)?;
                    parts.push(y);
                    pass.feature = Some(cache);
                }
                None => parts.push(x),
            }
        }
        let views: Vec<ArrayView2<'_, f64>> = parts.iter().map(|p| p.view()).collect();
        let fused = concatenate(Axis(1), &views).map_err(|e| DheError::Config(e.to_string()))?;
        let (logits, cache) = self.fusion.forward(fused.view(), &mut dropout_for(mode, rate, |m| &m.fusion))?;
        pass.fusion = cache;
        Ok((logits, pass))
    }

    fn backward_batch(&self, pass: &Pass, grad_logits: ArrayView2<'_, f64>) -> Result<DheGrads, DheError> {
        let (fusion, grad_fused) = self.fusion.backward(&pass.fusion, grad_logits)?;
        let mut col = 0;
        let mut take = |width: usize| {
            let g = grad_fused.slice(s![.., col..col + width]).to_owned();
            col += width;
            g
        };
        let context = match (&self.context, &pass.context) {
            (Some(net), Some(cache)) => Some(net.backward_params(cache, take(net.outputs()).view())?),
            _ => None,
        };
        let (member, set) = match (&self.member, &self.set, &pass.member, &pass.set) {
            (Some(member), Some(set), Some(mc), Some(sc)) => {
                let (set_grads, grad_pooled) = set.backward(sc, take(set.outputs()).view())?;
                let n = *pass.offsets.last().unwrap();
                let mut grad_members = Array2::zeros((n, member.outputs()));
                for (i, w) in pass.offsets.windows(2).enumerate() {
                    let row = grad_pooled.row(i);
                    for r in w[0]..w[1] {
                        grad_members.row_mut(r).assign(&row);
                    }
                }
                (Some(member.backward_params(mc, grad_members.view())?), Some(set_grads))
            }
            _ => (None, None),
        };
        let feature = match (&self.feature, &pass.feature) {
            (Some(net), Some(cache)) => Some(net.backward_params(cache, take(net.outputs()).view())?),
            _ => None,
        };
        Ok(DheGrads {
            context,
            member,
            set,
            feature,
            fusion,
        })
    }

    /// Mean cross-entropy over `batch` and its parameter gradients.
    pub fn loss_and_grads(&self, batch: &[&HyperedgeExample], mode: &mut Mode<'_>) -> Result<(f64, DheGrads), DheError> {
        let (logits, pass) = self.forward_batch(batch, mode)?;
        let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
        let (loss, grad) = softmax_cross_entropy_batch(logits.view(), &labels)?;
        Ok((loss, self.backward_batch(&pass, grad.view())?))
    }

    /// Training-mode pass that records its dropout masks.
    pub fn sample_masks(&self, batch: &[&HyperedgeExample], rng: &mut StreamRng) -> Result<DheMasks, DheError> {
        let (_, pass) = self.forward_batch(batch, &mut Mode::Train(rng))?;
        Ok(DheMasks {
            context: pass.context.map(|c| c.masks().to_vec()).unwrap_or_default(),
            fusion: pass.fusion.masks().to_vec(),
        })
    }

    pub fn apply_grads(&mut self, grads: &DheGrads, lr: f64) -> Result<(), DheError> {
        let pairs = [
            (&mut self.context, &grads.context),
            (&mut self.member, &grads.member),
            (&mut self.set, &grads.set),
            (&mut self.feature, &grads.feature),
        ];
        for (net, g) in pairs {
            if let (Some(net), Some(g)) = (net, g) {
                net.sgd_step(g, lr)?;
            }
        }
        self.fusion.sgd_step(&grads.fusion, lr)?;
        Ok(())
    }

    /// Output of the context branch (eval mode).
    pub fn context_repr(&self, e: &HyperedgeExample) -> Result<Array1<f64>, DheError> {
        self.check(e)?;
        let net = self.context.as_ref().ok_or_else(|| DheError::Config("model has no context branch".into()))?;
        let x = e.context.view().insert_axis(Axis(0));
        Ok(net.predict(x)?.row(0).to_owned())
    }

    /// Set MLP applied to the summed per-member outputs.
    pub fn membership_repr(&self, e: &HyperedgeExample) -> Result<Array1<f64>, DheError> {
        self.check(e)?;
        let (Some(member), Some(set)) = (&self.member, &self.set) else {
            return Err(DheError::Config("model has no membership branch".into()));
        };
        let pooled = member.predict(e.members.view())?.sum_axis(Axis(0));
        Ok(set.predict(pooled.view().insert_axis(Axis(0)))?.row(0).to_owned())
    }

    pub fn logits(&self, batch: &[&HyperedgeExample]) -> Result<Array2<f64>, DheError> {
        Ok(self.forward_batch(batch, &mut Mode::Eval)?.0)
    }

    /// Class probabilities (eval mode).
    pub fn forward(&self, e: &HyperedgeExample) -> Result<Array1<f64>, DheError> {
        Ok(neural::softmax(self.logits(&[e])?.row(0)))
    }

    pub fn predict(&self, e: &HyperedgeExample) -> Result<usize, DheError> {
        Ok(argmax(self.forward(e)?.as_slice().unwrap()))
    }

    pub fn predict_batch(&self, batch: &[&HyperedgeExample]) -> Result<Vec<usize>, DheError> {
        let logits = self.logits(batch)?;
        Ok(logits.rows().into_iter().map(|r| argmax(&r.to_vec())).collect())
    }

    /// Mean loss and confusion matrix over `ids`.
    pub fn evaluate(&self, examples: &[HyperedgeExample], ids: &[usize]) -> Result<(f64, ConfusionMatrix), DheError> {
        let mut cm = ConfusionMatrix::new(self.config.classes);
        let mut total = 0.0;
        for chunk in ids.chunks(256) {
            let batch: Vec<&HyperedgeExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let logits = self.logits(&batch)?;
            let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
            total += softmax_cross_entropy_batch(logits.view(), &labels)?.0 * batch.len() as f64;
            for (row, &label) in logits.rows().into_iter().zip(&labels) {
                cm.record(label, argmax(&row.to_vec())).expect("labels checked");
            }
        }
        Ok((total / ids.len().max(1) as f64, cm))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept (the last one without validation).
    pub best_epoch: usize,
}

/// Mini-batch SGD on cross-entropy. With a nonempty validation set the
/// parameters with the lowest validation loss are kept and training stops
/// after `patience` epochs without improvement.
pub fn train(
    examples: &[HyperedgeExample],
    train_ids: &[usize],
    validation_ids: &[usize],
    config: &DheConfig,
) -> Result<(DheModel, History), DheError> {
    train_with(examples, train_ids, validation_ids, config, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    examples: &[HyperedgeExample],
    train_ids: &[usize],
    validation_ids: &[usize],
    config: &DheConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(DheModel, History), DheError> {
    if train_ids.is_empty() {
        return Err(DheError::EmptyTraining);
    }
    let dims = examples[train_ids[0]].dims();
    let mut model = DheModel::new(config.clone(), dims)?;
    let mut seen = vec![false; config.classes];
    for &i in train_ids.iter().chain(validation_ids) {
        model.check(&examples[i])?;
    }
    for &i in train_ids {
        seen[examples[i].label] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        log::warn!("class {c} has no training examples");
    }
    if config.use_features {
        model.scaler = Some(Standardizer::fit(
            train_ids.iter().map(|&i| examples[i].features.as_ref().unwrap()),
            dims.features,
        ));
    }
    let mut dropout_rng = rng::stream(config.seed, &[0xd0]);
    let mut order = train_ids.to_vec();
    let mut history = History {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, DheModel)> = None;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng::stream(config.seed, &[0x5f, epoch as u64]));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&HyperedgeExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let (logits, pass) = model.forward_batch(&batch, &mut Mode::Train(&mut dropout_rng))?;
            let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
            let (loss, grad) = softmax_cross_entropy_batch(logits.view(), &labels)?;
            loss_sum += loss * batch.len() as f64;
            correct += logits
                .rows()
                .into_iter()
                .zip(&labels)
                .filter(|(r, &l)| argmax(&r.to_vec()) == l)
                .count();
            let grads = model.backward_batch(&pass, grad.view())?;
            model.apply_grads(&grads, config.learning_rate)?;
        }
        let mut stats = EpochStats {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            validation_loss: None,
            validation_accuracy: None,
        };
        history.best_epoch = epoch;
        let mut stop = false;
        if !validation_ids.is_empty() {
            let (vl, cm) = model.evaluate(examples, validation_ids)?;
            stats.validation_loss = Some(vl);
            stats.validation_accuracy = Some(cm.accuracy().expect("nonempty"));
            if best.as_ref().is_none_or(|(b, _)| vl < *b) {
                best = Some((vl, model.clone()));
            }
            let best_epoch = history
                .epochs
                .iter()
                .chain(std::iter::once(&stats))
                .min_by(|a, b| a.validation_loss.unwrap().total_cmp(&b.validation_loss.unwrap()))
                .unwrap()
                .epoch;
            history.best_epoch = best_epoch;
            stop = epoch - best_epoch >= config.patience;
        }
        log::debug!(
            "epoch {epoch}: train loss {:.4} acc {:.4} val {:?}",
            stats.train_loss,
            stats.train_accuracy,
            stats.validation_loss
        );
        on_epoch(&stats);
        history.epochs.push(stats);
        if stop {
            break;
        }
    }
    if let Some((_, m)) = best {
        model = m;
    }
    Ok((model, history))
}

pub const MODEL_FORMAT: &str = "hyperwalk-dhe";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    config: DheConfig,
    dims: InputDims,
    context: Option<MlpRecord>,
    member: Option<MlpRecord>,
    set: Option<MlpRecord>,
    feature: Option<MlpRecord>,
    fusion: MlpRecord,
    scaler: Option<Standardizer>,
}

impl DheModel {
    /// JSON checkpoint; reloads bit-exactly.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            dims: self.dims,
            context: self.context.as_ref().map(Mlp::to_record),
            member: self.member.as_ref().map(Mlp::to_record),
            set: self.set.as_ref().map(Mlp::to_record),
            feature: self.feature.as_ref().map(Mlp::to_record),
            fusion: self.fusion.to_record(),
            scaler: self.scaler.clone(),
        })
        .expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, DheError> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| DheError::Checkpoint(e.to_string()))?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(DheError::Checkpoint(format!("unsupported model {} v{}", f.format, f.version)));
        }
        let load = |r: Option<MlpRecord>| r.as_ref().map(Mlp::from_record).transpose();
        let model = DheModel {
            config: f.config,
            dims: f.dims,
            context: load(f.context)?,
            member: load(f.member)?,
            set: load(f.set)?,
            feature: load(f.feature)?,
            fusion: Mlp::from_record(&f.fusion)?,
            scaler: f.scaler,
        };
        let fresh = DheModel::new(model.config.clone(), model.dims)?;
        if fresh.parameter_count() != model.parameter_count() || fresh.fusion_inputs() != model.fusion_inputs() {
            return Err(DheError::Checkpoint("network shapes do not match the stored config".into()));
        }
        Ok(model)
    }
}
