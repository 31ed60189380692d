//! A small dense-network engine: batched forward/backward passes over
//! row-major `batch × features` matrices, inverted dropout, softmax
//! cross-entropy and plain SGD.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::StreamRng;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("softmax needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("forward cache does not belong to this input or network: {0}")]
    StaleCache(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|x| x.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Multiplies `grad` by the activation derivative, written in terms of
    /// the activation output `y`.
    fn backprop(self, y: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(y, |g, &y| {
                if y <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(y, |g, &y| *g *= 1.0 - y * y),
            Activation::Identity => {}
        }
    }
}

/// `y = act(x W^T + b)`, optionally followed by dropout in training mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub dropout: bool,
}

impl DenseLayer {
    /// Uniform weights with bound `sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, dropout: bool, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((outputs, inputs), || rng.gen_range(-bound..bound));
        DenseLayer {
            weights,
            bias: Array1::zeros(outputs),
            activation,
            dropout,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// How dropout behaves during a forward pass.
pub enum Dropout<'a> {
    /// Evaluation: no dropout, deterministic.
    Off,
    /// Training: sample fresh inverted-dropout masks.
    Sample { rate: f64, rng: &'a mut StreamRng },
    /// Replay given masks (one slot per layer); used for gradient checks.
    Fixed(&'a [Option<Array2<f64>>]),
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Activation output of each layer, before dropout.
    activations: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
}

impl MlpCache {
    pub fn masks(&self) -> &[Option<Array2<f64>>] {
        &self.masks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrads>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads {
            layers: mlp
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|&x| x == 0.0))
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NeuralError> {
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(NeuralError::Shape(format!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        if layers.is_empty() {
            return Err(NeuralError::Shape("network has no layers".into()));
        }
        Ok(Mlp { layers })
    }

    /// Builds `widths.len() - 1` layers; `activations[i]` and `dropout[i]`
    /// describe layer `i`.
    pub fn build(
        widths: &[usize],
        activations: &[Activation],
        dropout: &[bool],
        rng: &mut impl Rng,
    ) -> Result<Self, NeuralError> {
        let n = widths.len().saturating_sub(1);
        if activations.len() != n || dropout.len() != n {
            return Err(NeuralError::Shape("one activation and dropout flag per layer".into()));
        }
        let layers = (0..n)
            .map(|i| DenseLayer::init(widths[i], widths[i + 1], activations[i], dropout[i], rng))
            .collect();
        Mlp::new(layers)
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>, dropout: &mut Dropout<'_>) -> Result<(Array2<f64>, MlpCache), NeuralError> {
        if x.ncols() != self.inputs() {
            return Err(NeuralError::Shape(format!(
                "network expects {} inputs, got {}",
                self.inputs(),
                x.ncols()
            )));
        }
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            activations: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        };
        let mut current = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weights.t());
            z += &layer.bias;
            layer.activation.apply(&mut z);
            let mask = if layer.dropout {
                match dropout {
                    Dropout::Off => None,
                    Dropout::Sample { rate, rng } if *rate > 0.0 => {
                        let keep = 1.0 - *rate;
                        let scale = 1.0 / keep;
                        Some(Array2::from_shape_simple_fn(z.raw_dim(), || {
                            if rng.gen::<f64>() < keep {
                                scale
                            } else {
                                0.0
                            }
                        }))
                    }
                    Dropout::Sample { .. } => None,
                    Dropout::Fixed(masks) => masks.get(i).cloned().flatten(),
                }
            } else {
                None
            };
            let out = match &mask {
                Some(m) => {
                    if m.raw_dim() != z.raw_dim() {
                        return Err(NeuralError::Shape(format!("dropout mask for layer {i} has wrong shape")));
                    }
                    &z * m
                }
                None => z.clone(),
            };
            cache.inputs.push(current);
            cache.activations.push(z);
            cache.masks.push(mask);
            current = out;
        }
        Ok((current, cache))
    }

    /// Forward pass with dropout off.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>, NeuralError> {
        self.forward(x, &mut Dropout::Off).map(|(y, _)| y)
    }

    /// Reverse pass. Returns parameter gradients and the gradient with
    /// respect to the network input.
    pub fn backward(&self, cache: &MlpCache, grad_output: ArrayView2<'_, f64>) -> Result<(MlpGrads, Array2<f64>), NeuralError> {
        let (grads, input) = self.backward_inner(cache, grad_output, true)?;
        Ok((grads, input.expect("requested")))
    }

    /// Parameter gradients only; skips the input-gradient product.
    pub fn backward_params(&self, cache: &MlpCache, grad_output: ArrayView2<'_, f64>) -> Result<MlpGrads, NeuralError> {
        Ok(self.backward_inner(cache, grad_output, false)?.0)
    }

    fn backward_inner(
        &self,
        cache: &MlpCache,
        grad_output: ArrayView2<'_, f64>,
        want_input: bool,
    ) -> Result<(MlpGrads, Option<Array2<f64>>), NeuralError> {
        if cache.inputs.len() != self.layers.len() {
            return Err(NeuralError::StaleCache(format!(
                "cache holds {} layers, network has {}",
                cache.inputs.len(),
                self.layers.len()
            )));
        }
        let last = cache.activations.last().expect("nonempty network");
        if grad_output.raw_dim() != last.raw_dim() {
            return Err(NeuralError::StaleCache(format!(
                "gradient shape {:?} does not match output {:?}",
                grad_output.shape(),
                last.shape()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_output.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if cache.inputs[i].ncols() != layer.inputs() {
                return Err(NeuralError::StaleCache(format!("layer {i} input width changed")));
            }
            if let Some(m) = &cache.masks[i] {
                g *= m;
            }
            layer.activation.backprop(&cache.activations[i], &mut g);
            let dw = g.t().dot(&cache.inputs[i]);
            let db = g.sum_axis(Axis(0));
            grads.push(LayerGrads { weights: dw, bias: db });
            if i == 0 && !want_input {
                grads.reverse();
                return Ok((MlpGrads { layers: grads }, None));
            }
            g = g.dot(&layer.weights);
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, Some(g)))
    }

    /// `p <- p - lr * g` for every parameter. Refuses non-finite gradients
    /// and leaves the network unchanged in that case.
    pub fn sgd_step(&mut self, grads: &MlpGrads, lr: f64) -> Result<(), NeuralError> {
        if grads.layers.len() != self.layers.len() {
            return Err(NeuralError::Shape("gradient layer count differs from network".into()));
        }
        for (i, (layer, g)) in self.layers.iter().zip(&grads.layers).enumerate() {
            if g.weights.raw_dim() != layer.weights.raw_dim() || g.bias.raw_dim() != layer.bias.raw_dim() {
                return Err(NeuralError::Shape(format!("gradient shape mismatch in layer {i}")));
            }
            if !g.weights.iter().chain(g.bias.iter()).all(|x| x.is_finite()) {
                return Err(NeuralError::NonFiniteGradient { layer: i });
            }
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.scaled_add(-lr, &g.weights);
            layer.bias.scaled_add(-lr, &g.bias);
        }
        Ok(())
    }

    pub fn to_record(&self) -> MlpRecord {
        MlpRecord {
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    dropout: l.dropout,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_record(record: &MlpRecord) -> Result<Self, NeuralError> {
        let layers = record
            .layers
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let weights = Array2::from_shape_vec((r.outputs, r.inputs), r.weights.clone())
                    .map_err(|e| NeuralError::Checkpoint(format!("layer {i} weights: {e}")))?;
                if r.bias.len() != r.outputs {
                    return Err(NeuralError::Checkpoint(format!("layer {i} bias has {} values", r.bias.len())));
                }
                Ok(DenseLayer {
                    weights,
                    bias: Array1::from(r.bias.clone()),
                    activation: r.activation,
                    dropout: r.dropout,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Mlp::new(layers)
    }
}

/// Serialized layer: shapes, activation tag and row-major parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub dropout: bool,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpRecord {
    pub layers: Vec<LayerRecord>,
}

pub const CHECKPOINT_FORMAT: &str = "hyperwalk-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpCheckpoint {
    format: String,
    version: u32,
    network: MlpRecord,
}

/// JSON checkpoint of a single network. Floats are printed in shortest
/// round-trip form, so reading it back is bit-exact.
pub fn save_checkpoint(mlp: &Mlp) -> String {
    serde_json::to_string(&MlpCheckpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        network: mlp.to_record(),
    })
    .expect("serializable")
}

pub fn load_checkpoint(text: &str) -> Result<Mlp, NeuralError> {
    let ck: MlpCheckpoint = serde_json::from_str(text).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(NeuralError::Checkpoint(format!(
            "unsupported checkpoint {} v{}",
            ck.format, ck.version
        )));
    }
    Mlp::from_record(&ck.network)
}

/// Numerically stable softmax.
pub fn softmax(logits: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = logits.mapv(|z| (z - max).exp());
    let sum = p.sum();
    p /= sum;
    p
}

/// `-ln softmax(logits)[label]` and its gradient `softmax - one_hot`.
pub fn softmax_cross_entropy(logits: ArrayView1<'_, f64>, label: usize) -> Result<(f64, Array1<f64>), NeuralError> {
    let classes = logits.len();
    if classes < 2 {
        return Err(NeuralError::TooFewClasses(classes));
    }
    if label >= classes {
        return Err(NeuralError::LabelOutOfRange { label, classes });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Mean cross-entropy over a batch and the gradient of that mean with
/// respect to the logits.
pub fn softmax_cross_entropy_batch(logits: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Array2<f64>), NeuralError> {
    if logits.nrows() != labels.len() {
        return Err(NeuralError::Shape(format!(
            "{} logit rows for {} labels",
            logits.nrows(),
            labels.len()
        )));
    }
    let n = labels.len().max(1) as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let (loss, g) = softmax_cross_entropy(logits.row(i), label)?;
        total += loss;
        grad.row_mut(i).assign(&(g / n));
    }
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::{array, Array};

    #[test]
    fn identity_layer_passes_input() {
        let layer = DenseLayer {
            weights: Array2::eye(3),
            bias: Array1::zeros(3),
            activation: Activation::Identity,
            dropout: false,
        };
        let mlp = Mlp::new(vec![layer]).unwrap();
        let x = array![[1.0, -2.0, 3.5]];
        assert_eq!(mlp.predict(x.view()).unwrap(), x);
    }

    #[test]
    fn relu_clips_negatives() {
        let mut z = array![[-1.0, 2.0]];
        Activation::Relu.apply(&mut z);
        assert_eq!(z, array![[0.0, 2.0]]);
    }

    #[test]
    fn tanh_derivative_identity() {
        let y = array![[0.3f64.tanh(), (-1.2f64).tanh()]];
        let mut g = array![[1.0, 1.0]];
        Activation::Tanh.backprop(&y, &mut g);
        assert!((g[[0, 0]] - (1.0 - 0.3f64.tanh().powi(2))).abs() < 1e-15);
        assert!((g[[0, 1]] - (1.0 - 1.2f64.tanh().powi(2))).abs() < 1e-15);
    }

    fn net(seed: u64, dropout: bool) -> Mlp {
        let mut r = rng::stream(seed, &[]);
        Mlp::build(&[4, 6, 3], &[Activation::Tanh, Activation::Identity], &[dropout, false], &mut r).unwrap()
    }

    #[test]
    fn shape_errors() {
        let mlp = net(1, false);
        let x = Array2::<f64>::zeros((2, 5));
        assert!(matches!(mlp.forward(x.view(), &mut Dropout::Off), Err(NeuralError::Shape(_))));
        let mut r = rng::stream(0, &[]);
        let a = DenseLayer::init(3, 4, Activation::Relu, false, &mut r);
        let b = DenseLayer::init(5, 2, Activation::Relu, false, &mut r);
        assert!(matches!(Mlp::new(vec![a, b]), Err(NeuralError::Shape(_))));
    }

    #[test]
    fn eval_forward_is_deterministic_even_with_dropout_layers() {
        let mlp = net(2, true);
        let x = Array::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64 * 0.1);
        assert_eq!(mlp.predict(x.view()).unwrap(), mlp.predict(x.view()).unwrap());
    }

    #[test]
    fn dropout_masks_are_inverted() {
        let mlp = net(3, true);
        let x = Array2::<f64>::ones((50, 4));
        let mut r = rng::stream(9, &[]);
        let (_, cache) = mlp.forward(x.view(), &mut Dropout::Sample { rate: 0.5, rng: &mut r }).unwrap();
        let m = cache.masks()[0].as_ref().unwrap();
        assert!(m.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(cache.masks()[1].is_none());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_parameter_gradients() {
        let mlp = net(4, false);
        let x = Array::from_shape_fn((2, 4), |(i, j)| (i + j) as f64 - 1.5);
        let (y, cache) = mlp.forward(x.view(), &mut Dropout::Off).unwrap();
        let (g, _) = mlp.backward(&cache, Array2::zeros(y.raw_dim()).view()).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn stale_cache_rejected() {
        let a = net(5, false);
        let x = Array2::<f64>::ones((2, 4));
        let (_, cache) = a.forward(x.view(), &mut Dropout::Off).unwrap();
        let wrong = Array2::<f64>::zeros((3, 3));
        assert!(matches!(a.backward(&cache, wrong.view()), Err(NeuralError::StaleCache(_))));
        let mut r = rng::stream(0, &[]);
        let deeper = Mlp::build(&[4, 6, 6, 3], &[Activation::Relu; 3], &[false; 3], &mut r).unwrap();
        let grad = Array2::<f64>::zeros((2, 3));
        assert!(matches!(deeper.backward(&cache, grad.view()), Err(NeuralError::StaleCache(_))));
    }

    #[test]
    fn sgd_step_rules() {
        let mut mlp = Mlp::new(vec![DenseLayer {
            weights: array![[1.0]],
            bias: array![1.0],
            activation: Activation::Identity,
            dropout: false,
        }])
        .unwrap();
        let g = MlpGrads {
            layers: vec![LayerGrads {
                weights: array![[2.0]],
                bias: array![2.0],
            }],
        };
        let before = mlp.clone();
        mlp.sgd_step(&g, 0.0).unwrap();
        assert_eq!(mlp, before);
        mlp.sgd_step(&g, 0.1).unwrap();
        assert!((mlp.layers[0].weights[[0, 0]] - 0.8).abs() < 1e-15);
        assert!((mlp.layers[0].bias[0] - 0.8).abs() < 1e-15);

        let bad = MlpGrads {
            layers: vec![LayerGrads {
                weights: array![[f64::NAN]],
                bias: array![0.0],
            }],
        };
        let snapshot = mlp.clone();
        assert_eq!(mlp.sgd_step(&bad, 0.1), Err(NeuralError::NonFiniteGradient { layer: 0 }));
        assert_eq!(mlp, snapshot);
    }

    #[test]
    fn softmax_cases() {
        let (loss, _) = softmax_cross_entropy(array![0.7, 0.7, 0.7, 0.7].view(), 2).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        let (loss, g) = softmax_cross_entropy(array![1000.0, 0.0].view(), 0).unwrap();
        assert!(loss.abs() < 1e-12 && loss.is_finite());
        assert!(g.iter().all(|x| x.is_finite()));
        assert_eq!(
            softmax_cross_entropy(array![1.0, 2.0].view(), 2),
            Err(NeuralError::LabelOutOfRange { label: 2, classes: 2 })
        );
        assert_eq!(softmax_cross_entropy(array![1.0].view(), 0), Err(NeuralError::TooFewClasses(1)));
        let p = softmax(array![3.0, -1.0, 0.5].view());
        let q = softmax(array![103.0, 99.0, 100.5].view());
        assert!((p.sum() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(q.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mlp = net(6, true);
        let text = save_checkpoint(&mlp);
        let back = load_checkpoint(&text).unwrap();
        assert_eq!(back, mlp);
        assert!(load_checkpoint(&text.replace("hyperwalk-mlp", "other")).is_err());
    }
}
