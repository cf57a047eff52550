//! A small, dependency-free neural network engine.
//!
//! Tensors are plain row-major `Vec<f64>` buffers with a `(rows, cols)`
//! shape. A network is an ordered list of layers, the last of which must be
//! a [`LayerSpec::SoftmaxOutput`]: a dense projection onto the classes
//! followed by a softmax, trained with categorical cross-entropy.
//!
//! Convolutions slide along rows only and always span every column, so a
//! `(n, C)` input seen through a filter of width `w` is a set of `n - w + 1`
//! contiguous slices of length `w * C`.

mod optim;
mod train;

use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::util;
use crate::{Error, Result};

pub use optim::{Optimizer, OptimizerKind};
pub use train::{gradient_check, train, History, TrainConfig};

pub type Shape = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    #[serde(rename = "conv1d")]
    Conv1D { filters: usize, width: usize },
    Dense { units: usize },
    Relu,
    Dropout { rate: f64 },
    Flatten,
    SoftmaxOutput { classes: usize },
}

impl LayerSpec {
    fn output_shape(&self, input: Shape) -> Result<Shape> {
        let (rows, cols) = input;
        match *self {
            LayerSpec::Conv1D { filters, width } => {
                if filters == 0 || width == 0 {
                    return Err(Error::invalid("conv1d needs filters >= 1 and width >= 1"));
                }
                if rows < width {
                    return Err(Error::Shape(format!("conv1d of width {width} over {rows} rows")));
                }
                Ok((rows - width + 1, filters))
            }
            LayerSpec::Dense { units: n } | LayerSpec::SoftmaxOutput { classes: n } => {
                if rows != 1 {
                    return Err(Error::Shape(format!("dense layer over a {rows}x{cols} input; flatten first")));
                }
                if n == 0 {
                    return Err(Error::invalid("dense layer needs at least one unit"));
                }
                if matches!(self, LayerSpec::SoftmaxOutput { .. }) && n < 2 {
                    return Err(Error::invalid("softmax output needs at least two classes"));
                }
                Ok((1, n))
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
                }
                Ok(input)
            }
            LayerSpec::Relu => Ok(input),
            LayerSpec::Flatten => Ok((1, rows * cols)),
        }
    }

    /// `(weights, biases)` lengths for the given input shape.
    fn param_lens(&self, input: Shape) -> (usize, usize) {
        match *self {
            LayerSpec::Conv1D { filters, width } => (filters * width * input.1, filters),
            LayerSpec::Dense { units: n } | LayerSpec::SoftmaxOutput { classes: n } => (n * input.1, n),
            _ => (0, 0),
        }
    }

    fn fan_in(&self, input: Shape) -> usize {
        match *self {
            LayerSpec::Conv1D { width, .. } => width * input.1,
            _ => input.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub input_shape: Shape,
    pub output_shape: Shape,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: usize,
}

/// Per-parameter gradients, laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for g in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Shape,
    layers: Vec<Layer>,
}

/// Dropout behaviour of one forward pass.
enum Mode<'a> {
    Eval,
    Train { rng: &'a mut dyn RngCore, rate: Option<f64> },
}

struct Trace {
    /// Input of every layer.
    inputs: Vec<Vec<f64>>,
    /// Scaled keep masks of dropout layers, empty elsewhere.
    masks: Vec<Vec<f64>>,
    logits: Vec<f64>,
    probs: Vec<f64>,
}

impl Network {
    /// Builds the layers and draws their initial weights: He-uniform for
    /// hidden layers, Glorot-uniform for the output projection, zero biases.
    pub fn new(input_shape: Shape, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut net = Self::skeleton(input_shape, specs)?;
        let mut rng = util::rng(seed);
        for layer in &mut net.layers {
            if layer.weights.is_empty() {
                continue;
            }
            let fan_in = layer.spec.fan_in(layer.input_shape) as f64;
            let limit = match layer.spec {
                LayerSpec::SoftmaxOutput { classes } => (6.0 / (fan_in + classes as f64)).sqrt(),
                _ => (6.0 / fan_in).sqrt(),
            };
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    fn skeleton(input_shape: Shape, specs: &[LayerSpec]) -> Result<Self> {
        if input_shape.0 == 0 || input_shape.1 == 0 {
            return Err(Error::Shape("empty input shape".into()));
        }
        match specs.last() {
            Some(LayerSpec::SoftmaxOutput { .. }) => {}
            _ => return Err(Error::invalid("the last layer must be a softmax output")),
        }
        if specs[..specs.len() - 1]
            .iter()
            .any(|s| matches!(s, LayerSpec::SoftmaxOutput { .. }))
        {
            return Err(Error::invalid("softmax output is only allowed as the last layer"));
        }
        let mut shape = input_shape;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let out = spec.output_shape(shape)?;
            let (nw, nb) = spec.param_lens(shape);
            layers.push(Layer {
                spec: *spec,
                input_shape: shape,
                output_shape: out,
                weights: vec![0.0; nw],
                biases: vec![0.0; nb],
            });
            shape = out;
        }
        Ok(Network { input_shape, layers })
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.0 * self.input_shape.1
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output_shape.1)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_penalty(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.weights).map(|w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Shape(format!(
                "input of length {} for a {}x{} network input",
                input.len(),
                self.input_shape.0,
                self.input_shape.1
            )));
        }
        Ok(())
    }

    fn check_example(&self, ex: &Example) -> Result<()> {
        self.check_input(&ex.input)?;
        if ex.target >= self.classes() {
            return Err(Error::Shape(format!("target class {} of {}", ex.target, self.classes())));
        }
        Ok(())
    }

    /// Class probabilities in evaluation mode (no dropout).
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.forward(input, Mode::Eval).probs)
    }

    fn forward(&self, input: &[f64], mut mode: Mode<'_>) -> Trace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        let mut probs = Vec::new();
        let mut logits = Vec::new();
        for layer in &self.layers {
            let mut mask = Vec::new();
            let y = match layer.spec {
                LayerSpec::Conv1D { width, .. } => conv_apply(&x, layer.input_shape, &layer.weights, &layer.biases, width),
                LayerSpec::Dense { .. } => dense_apply(&x, &layer.weights, &layer.biases),
                LayerSpec::SoftmaxOutput { .. } => {
                    logits = dense_apply(&x, &layer.weights, &layer.biases);
                    probs = softmax(&logits);
                    logits.clone()
                }
                LayerSpec::Relu => x.iter().map(|&v| v.max(0.0)).collect(),
                LayerSpec::Flatten => x.clone(),
                LayerSpec::Dropout { rate } => match &mut mode {
                    Mode::Eval => x.clone(),
                    Mode::Train { rng, rate: over } => {
                        let rate = over.unwrap_or(rate);
                        if rate == 0.0 {
                            x.clone()
                        } else {
                            let scale = 1.0 / (1.0 - rate);
                            mask = (0..x.len())
                                .map(|_| if rng.random::<f64>() < rate { 0.0 } else { scale })
                                .collect();
                            x.iter().zip(&mask).map(|(v, m)| v * m).collect()
                        }
                    }
                },
            };
            inputs.push(std::mem::replace(&mut x, y));
            masks.push(mask);
        }
        Trace { inputs, masks, logits, probs }
    }

    /// Adds `scale * d(loss)/d(params)` of one traced example to `grads`.
    fn backward(&self, trace: &Trace, target: usize, scale: f64, grads: &mut Gradients) {
        let mut d: Vec<f64> = trace.probs.clone();
        d[target] -= 1.0;
        d.iter_mut().for_each(|v| *v *= scale);
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &trace.inputs[i];
            d = match layer.spec {
                LayerSpec::SoftmaxOutput { .. } | LayerSpec::Dense { .. } => {
                    let m = x.len();
                    let gw = &mut grads.weights[i];
                    let mut dx = vec![0.0; m];
                    for (u, &du) in d.iter().enumerate() {
                        grads.biases[i][u] += du;
                        if du == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[u * m..(u + 1) * m];
                        let grow = &mut gw[u * m..(u + 1) * m];
                        for j in 0..m {
                            grow[j] += du * x[j];
                            dx[j] += du * row[j];
                        }
                    }
                    dx
                }
                LayerSpec::Conv1D { width, filters } => {
                    let (n, c) = layer.input_shape;
                    let span = width * c;
                    let mut dx = vec![0.0; n * c];
                    for p in 0..n + 1 - width {
                        let window = &x[p * c..p * c + span];
                        for f in 0..filters {
                            let dv = d[p * filters + f];
                            grads.biases[i][f] += dv;
                            if dv == 0.0 {
                                continue;
                            }
                            let row = &layer.weights[f * span..(f + 1) * span];
                            let grow = &mut grads.weights[i][f * span..(f + 1) * span];
                            let dwin = &mut dx[p * c..p * c + span];
                            for j in 0..span {
                                grow[j] += dv * window[j];
                                dwin[j] += dv * row[j];
                            }
                        }
                    }
                    dx
                }
                LayerSpec::Relu => d.iter().zip(x).map(|(g, &v)| if v > 0.0 { *g } else { 0.0 }).collect(),
                LayerSpec::Dropout { .. } => {
                    let mask = &trace.masks[i];
                    if mask.is_empty() {
                        d
                    } else {
                        d.iter().zip(mask).map(|(g, m)| g * m).collect()
                    }
                }
                LayerSpec::Flatten => d,
            };
        }
    }

    fn add_l2_gradient(&self, l2_lambda: f64, grads: &mut Gradients) {
        if l2_lambda == 0.0 {
            return;
        }
        for (layer, g) in self.layers.iter().zip(&mut grads.weights) {
            for (gi, w) in g.iter_mut().zip(&layer.weights) {
                *gi += 2.0 * l2_lambda * w;
            }
        }
    }

    /// Mean cross-entropy of `batch` plus `l2_lambda * Σ w²`, in evaluation mode.
    pub fn loss(&self, batch: &[Example], l2_lambda: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid("loss of an empty batch"));
        }
        let mut total = 0.0;
        for ex in batch {
            self.check_example(ex)?;
            total += softmax_crossentropy(&self.forward(&ex.input, Mode::Eval).logits, ex.target).0;
        }
        Ok(total / batch.len() as f64 + l2_lambda * self.weight_penalty())
    }

    /// Loss and exact analytic gradients of [`Network::loss`].
    pub fn gradients(&self, batch: &[Example], l2_lambda: f64) -> Result<(f64, Gradients)> {
        let mut grads = Gradients::zeros_like(self);
        let refs: Vec<&Example> = batch.iter().collect();
        let loss = self.accumulate(&refs, l2_lambda, None, &mut grads)?;
        Ok((loss, grads))
    }

    /// Fills `grads` for one minibatch; dropout is active when `train` is set.
    fn accumulate(
        &self,
        batch: &[&Example],
        l2_lambda: f64,
        mut train: Option<(&mut dyn RngCore, Option<f64>)>,
        grads: &mut Gradients,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid("gradients of an empty batch"));
        }
        grads.clear();
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for ex in batch {
            self.check_example(ex)?;
            let mode = match &mut train {
                None => Mode::Eval,
                Some((rng, rate)) => Mode::Train { rng: &mut **rng, rate: *rate },
            };
            let trace = self.forward(&ex.input, mode);
            total += softmax_crossentropy(&trace.logits, ex.target).0;
            self.backward(&trace, ex.target, scale, grads);
        }
        self.add_l2_gradient(l2_lambda, grads);
        Ok(total * scale + l2_lambda * self.weight_penalty())
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            format: FORMAT.to_string(),
            version: VERSION,
            input_shape: [self.input_shape.0, self.input_shape.1],
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    spec: l.spec,
                    weights: l.weights.clone(),
                    biases: l.biases.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("serialize network")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_str(src).map_err(|e| Error::Format(format!("network file: {e}")))?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Format(format!(
                "unsupported network file {} v{}",
                file.format, file.version
            )));
        }
        let specs: Vec<LayerSpec> = file.layers.iter().map(|l| l.spec).collect();
        let mut net = Self::skeleton((file.input_shape[0], file.input_shape[1]), &specs)?;
        for (layer, saved) in net.layers.iter_mut().zip(file.layers) {
            if saved.weights.len() != layer.weights.len() || saved.biases.len() != layer.biases.len() {
                return Err(Error::Format("network file: parameter count does not match layer shape".into()));
            }
            layer.weights = saved.weights;
            layer.biases = saved.biases;
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_file(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&util::read_to_string(path)?)
    }
}

const FORMAT: &str = "webfpr-network";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    format: String,
    version: u32,
    input_shape: [usize; 2],
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    spec: LayerSpec,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

fn dense_apply(x: &[f64], weights: &[f64], biases: &[f64]) -> Vec<f64> {
    let m = x.len();
    biases
        .iter()
        .enumerate()
        .map(|(u, b)| b + dot(&weights[u * m..(u + 1) * m], x))
        .collect()
}

fn conv_apply(x: &[f64], shape: Shape, weights: &[f64], biases: &[f64], width: usize) -> Vec<f64> {
    let (n, c) = shape;
    let span = width * c;
    let filters = biases.len();
    let mut out = Vec::with_capacity((n + 1 - width) * filters);
    for p in 0..n + 1 - width {
        let window = &x[p * c..p * c + span];
        for f in 0..filters {
            out.push(biases[f] + dot(&weights[f * span..(f + 1) * span], window));
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Valid (unpadded) 1-D convolution of an `n x channels` input. `weights` is
/// `filters x (width * channels)`; the result is `(n - width + 1) x filters`.
pub fn conv1d_forward(
    input: &[f64],
    n: usize,
    channels: usize,
    weights: &[f64],
    biases: &[f64],
    width: usize,
) -> Result<Vec<f64>> {
    if width == 0 || n < width {
        return Err(Error::Shape(format!("conv1d of width {width} over {n} rows")));
    }
    if input.len() != n * channels || weights.len() != biases.len() * width * channels {
        return Err(Error::Shape("conv1d buffers do not match the declared shape".into()));
    }
    Ok(conv_apply(input, (n, channels), weights, biases, width))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax probabilities and the cross-entropy against class `target`.
///
/// # Panics
///
/// If `target` is not a valid index into `logits`.
pub fn softmax_crossentropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = log_sum - (logits[target] - max);
    (loss, softmax(logits))
}
