//! Fully connected regressor from the 54-element input vector to the human's
//! planar position, trained on root-mean-square error with Nesterov SGD.
//!
//! Weights of layer `l` are stored row-major with shape `(out_dim, in_dim)`.
//! Dropout, when enabled, acts on the output of the last hidden layer using
//! the inverted convention: kept units are scaled by `1 / (1 - p)` during
//! training so inference needs no rescaling.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `(out_dim, in_dim)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.in_dim + col]
    }

    fn affine_into(&self, input: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.in_dim).zip(&self.biases))
        {
            *o = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
    }
}

/// How [`MlpModel::forward`] treats dropout.
pub enum Mode<'a> {
    /// Sample a fresh dropout mask from the given source.
    Train(&'a mut dyn RngCore),
    /// Deterministic inference.
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub dropout_rate: f64,
}

/// Per-layer parameter gradients, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: model.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn scale(&mut self, k: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for g in v {
                *g *= k;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Activations of one forward pass, kept for backpropagation.
struct Trace {
    /// `post[0]` is the input; `post[l + 1]` is the output of layer `l`.
    post: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Trace {
    fn new(model: &MlpModel) -> Self {
        let mut post = vec![vec![0.0; model.input_dim()]];
        post.extend(model.layers.iter().map(|l| vec![0.0; l.out_dim]));
        Self {
            pre: model.layers.iter().map(|l| vec![0.0; l.out_dim]).collect(),
            post,
        }
    }
}

/// Root-mean-square Euclidean error over a batch of vectors.
pub fn loss_rmse<P: AsRef<[f64]>, T: AsRef<[f64]>>(pred: &[P], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let sum: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            p.as_ref()
                .iter()
                .zip(t.as_ref())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    Ok((sum / pred.len() as f64).sqrt())
}

impl MlpModel {
    /// Builds a model from layer widths `[in, h1, ..., out]` and one
    /// activation per layer, with Glorot-uniform weights and zero biases.
    pub fn new(
        dims: &[usize],
        activations: &[Activation],
        dropout_rate: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut model = Self::zeros(dims, activations, dropout_rate)?;
        for layer in &mut model.layers {
            let limit = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(model)
    }

    pub fn zeros(dims: &[usize], activations: &[Activation], dropout_rate: f64) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "{} layer widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| Layer::zeros(w[0], w[1], a))
            .collect();
        let model = Self {
            layers,
            dropout_rate,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("model has no layers".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} must lie in [0, 1)",
                self.dropout_rate
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.in_dim == 0 || layer.out_dim == 0 {
                return Err(Error::Shape {
                    layer: l + 1,
                    message: "zero-width layer".into(),
                });
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim {
                return Err(Error::Shape {
                    layer: l + 1,
                    message: format!(
                        "{} weights for shape ({}, {})",
                        layer.weights.len(),
                        layer.out_dim,
                        layer.in_dim
                    ),
                });
            }
            if layer.biases.len() != layer.out_dim {
                return Err(Error::Shape {
                    layer: l + 1,
                    message: format!("{} biases for {} outputs", layer.biases.len(), layer.out_dim),
                });
            }
            if l > 0 && layer.in_dim != self.layers[l - 1].out_dim {
                return Err(Error::Shape {
                    layer: l + 1,
                    message: format!(
                        "input width {} does not match previous output width {}",
                        layer.in_dim,
                        self.layers[l - 1].out_dim
                    ),
                });
            }
        }
        if self.layers.last().unwrap().activation != Activation::Identity {
            return Err(Error::Config("output layer activation must be identity".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Index of the layer whose output passes through dropout, if any.
    fn dropout_layer(&self) -> Option<usize> {
        (self.layers.len() >= 2).then(|| self.layers.len() - 2)
    }

    /// Samples an inverted-dropout mask for the last hidden layer.
    pub fn sample_mask(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        let layer = self.dropout_layer()?;
        if self.dropout_rate == 0.0 {
            return None;
        }
        let keep = 1.0 - self.dropout_rate;
        Some(
            (0..self.layers[layer].out_dim)
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect(),
        )
    }

    fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.input_dim() {
            return Err(Error::Shape {
                layer: 1,
                message: format!("input has {} entries, expected {}", z.len(), self.input_dim()),
            });
        }
        Ok(())
    }

    fn run(&self, z: &[f64], mask: Option<&[f64]>, trace: &mut Trace) {
        trace.post[0].copy_from_slice(z);
        let drop_at = self.dropout_layer();
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = trace.post.split_at_mut(l + 1);
            let pre = &mut trace.pre[l];
            layer.affine_into(&before[l], pre);
            let out = &mut after[0];
            for (o, p) in out.iter_mut().zip(pre.iter()) {
                *o = layer.activation.apply(*p);
            }
            if let (Some(m), true) = (mask, drop_at == Some(l)) {
                for (o, k) in out.iter_mut().zip(m) {
                    *o *= k;
                }
            }
        }
    }

    /// Forward pass with an explicit (possibly absent) dropout mask.
    pub fn forward_masked(&self, z: &[f64], mask: Option<&[f64]>) -> Result<Vec<f64>> {
        self.check_input(z)?;
        let mut trace = Trace::new(self);
        self.run(z, mask, &mut trace);
        Ok(trace.post.pop().unwrap())
    }

    pub fn forward(&self, z: &[f64], mode: Mode<'_>) -> Result<Vec<f64>> {
        let mask = match mode {
            Mode::Train(rng) => self.sample_mask(rng),
            Mode::Eval => None,
        };
        self.forward_masked(z, mask.as_deref())
    }

    /// Eval-mode predictions for a batch.
    pub fn predict<Z: AsRef<[f64]>>(&self, zs: &[Z]) -> Result<Vec<Vec<f64>>> {
        let mut trace = Trace::new(self);
        zs.iter()
            .map(|z| {
                self.check_input(z.as_ref())?;
                self.run(z.as_ref(), None, &mut trace);
                Ok(trace.post.last().unwrap().clone())
            })
            .collect()
    }

    /// Batch loss with one fixed mask per sample (`None` for no dropout).
    pub fn loss_masked<Z: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &self,
        zs: &[Z],
        ys: &[Y],
        masks: Option<&[Vec<f64>]>,
    ) -> Result<f64> {
        let preds = zs
            .iter()
            .enumerate()
            .map(|(i, z)| self.forward_masked(z.as_ref(), masks.map(|m| m[i].as_slice())))
            .collect::<Result<Vec<_>>>()?;
        loss_rmse(&preds, ys)
    }

    /// Analytic gradient of the batch RMSE with fixed per-sample masks.
    /// Returns the loss alongside the gradient.
    pub fn gradients_masked<Z: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &self,
        zs: &[Z],
        ys: &[Y],
        masks: Option<&[Vec<f64>]>,
    ) -> Result<(f64, Gradients)> {
        if zs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                pred: zs.len(),
                truth: ys.len(),
            });
        }
        if zs.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = zs.len();
        let mut trace = Trace::new(self);
        let mut errors = Vec::with_capacity(n);
        let mut sum_sq = 0.0;
        for (i, (z, y)) in zs.iter().zip(ys).enumerate() {
            self.check_input(z.as_ref())?;
            self.run(z.as_ref(), masks.map(|m| m[i].as_slice()), &mut trace);
            let out = trace.post.last().unwrap();
            let e: Vec<f64> = out.iter().zip(y.as_ref()).map(|(p, t)| p - t).collect();
            sum_sq += e.iter().map(|v| v * v).sum::<f64>();
            errors.push(e);
        }
        let loss = (sum_sq / n as f64).sqrt();
        let mut grads = Gradients::zeros_like(self);
        if loss == 0.0 {
            return Ok((loss, grads));
        }

        let drop_at = self.dropout_layer();
        let mut delta: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.out_dim]).collect();
        for (i, z) in zs.iter().enumerate() {
            let mask = masks.map(|m| m[i].as_slice());
            self.run(z.as_ref(), mask, &mut trace);
            // dL/d(output) summed per sample; the 1 / (n L) factor is applied once at the end.
            let last = self.layers.len() - 1;
            delta[last].copy_from_slice(&errors[i]);
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                {
                    let d = &mut delta[l];
                    if let (Some(m), true) = (mask, drop_at == Some(l)) {
                        for (dv, k) in d.iter_mut().zip(m) {
                            *dv *= k;
                        }
                    }
                    for (dv, p) in d.iter_mut().zip(&trace.pre[l]) {
                        *dv *= layer.activation.derivative(*p);
                    }
                }
                let input = &trace.post[l];
                let gw = &mut grads.weights[l];
                for (r, &dv) in delta[l].iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    let row = &mut gw[r * layer.in_dim..(r + 1) * layer.in_dim];
                    for (g, x) in row.iter_mut().zip(input) {
                        *g += dv * x;
                    }
                    grads.biases[l][r] += dv;
                }
                if l > 0 {
                    let (lower, upper) = delta.split_at_mut(l);
                    let prev = &mut lower[l - 1];
                    prev.fill(0.0);
                    for (r, &dv) in upper[0].iter().enumerate() {
                        if dv == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += dv * w;
                        }
                    }
                }
            }
        }
        grads.scale(1.0 / (n as f64 * loss));
        Ok((loss, grads))
    }

    /// Gradient of the batch RMSE. In `Train` mode one mask per sample is
    /// drawn and held fixed for the whole call.
    pub fn gradients<Z: AsRef<[f64]>, Y: AsRef<[f64]>>(
        &self,
        zs: &[Z],
        ys: &[Y],
        mode: Mode<'_>,
    ) -> Result<(f64, Gradients)> {
        match mode {
            Mode::Eval => self.gradients_masked(zs, ys, None),
            Mode::Train(rng) => {
                let masks: Option<Vec<Vec<f64>>> =
                    zs.iter().map(|_| self.sample_mask(rng)).collect();
                self.gradients_masked(zs, ys, masks.as_deref())
            }
        }
    }

    /// Visits every parameter together with the matching entry of `other`.
    fn zip_params_mut(&mut self, other: &Gradients, mut f: impl FnMut(&mut f64, f64)) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(other.weights.iter().zip(&other.biases)) {
            for (p, g) in layer.weights.iter_mut().zip(gw) {
                f(p, *g);
            }
            for (p, g) in layer.biases.iter_mut().zip(gb) {
                f(p, *g);
            }
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::parse(path, line, message),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::parse("<model>", e.line() as u64, e.to_string()))?;
        file.into_model()
    }
}

const MODEL_FORMAT: &str = "ringtrack-mlp";

/// On-disk model layout: self-describing JSON with full-precision numbers.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    dropout_rate: f64,
    /// Per layer, `out_dim` rows of `in_dim` weights.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: 1,
            layer_dims: m.layer_dims(),
            activations: m.layers.iter().map(|l| l.activation).collect(),
            dropout_rate: m.dropout_rate,
            weights: m
                .layers
                .iter()
                .map(|l| l.weights.chunks(l.in_dim).map(<[f64]>::to_vec).collect())
                .collect(),
            biases: m.layers.iter().map(|l| l.biases.clone()).collect(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<MlpModel> {
        if self.format != MODEL_FORMAT || self.version != 1 {
            return Err(Error::Config(format!(
                "unsupported model format {} v{}",
                self.format, self.version
            )));
        }
        let n_layers = self.layer_dims.len().saturating_sub(1);
        if self.activations.len() != n_layers
            || self.weights.len() != n_layers
            || self.biases.len() != n_layers
        {
            return Err(Error::Config(format!(
                "{} layer widths imply {n_layers} layers, found {} activations, {} weight and {} bias blocks",
                self.layer_dims.len(),
                self.activations.len(),
                self.weights.len(),
                self.biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (l, ((w, b), act)) in self.weights.into_iter().zip(self.biases).zip(self.activations).enumerate() {
            let (in_dim, out_dim) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if w.len() != out_dim {
                return Err(Error::Shape {
                    layer: l + 1,
                    message: format!("weight matrix has {} rows, expected {out_dim}", w.len()),
                });
            }
            if let Some((r, row)) = w.iter().enumerate().find(|(_, row)| row.len() != in_dim) {
                return Err(Error::Shape {
                    layer: l + 1,
                    message: format!("weight row {} has {} columns, expected {in_dim}", r + 1, row.len()),
                });
            }
            layers.push(Layer {
                in_dim,
                out_dim,
                weights: w.into_iter().flatten().collect(),
                biases: b,
                activation: act,
            });
        }
        let model = MlpModel {
            layers,
            dropout_rate: self.dropout_rate,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Optimiser and schedule settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    /// Per-update decay: `lr_t = lr0 / (1 + decay * t)`.
    pub decay: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 0.01,
            decay: 1e-6,
            momentum: 0.9,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!("lr0 {} must be >= 0", self.lr0)));
        }
        if !(self.decay >= 0.0) {
            return Err(Error::Config(format!("decay {} must be >= 0", self.decay)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} must lie in [0, 1)", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        Ok(())
    }

    /// Learning rate after `t` parameter updates.
    pub fn learning_rate(&self, t: u64) -> f64 {
        self.lr0 / (1.0 + self.decay * t as f64)
    }
}

/// Inputs and targets for training or evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Examples {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Examples {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
    pub lr: f64,
}

/// Minibatch SGD with Nesterov momentum:
/// `v <- mu v - lr grad(theta + mu v)`, `theta <- theta + v`.
///
/// The returned history starts with the untrained model as epoch 0.
pub fn train(
    model: &MlpModel,
    train_set: &Examples,
    val_set: Option<&Examples>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(MlpModel, Vec<EpochRecord>)> {
    cfg.validate()?;
    model.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = model.clone();
    let mut velocity = Gradients::zeros_like(model);
    let mut lookahead = model.clone();
    let mut updates: u64 = 0;

    let evaluate = |m: &MlpModel, set: &Examples| -> Result<f64> {
        loss_rmse(&m.predict(&set.inputs)?, &set.targets)
    };
    let initial = evaluate(&theta, train_set)?;
    let first = EpochRecord {
        epoch: 0,
        train_rmse: initial,
        val_rmse: val_set.map(|v| evaluate(&theta, v)).transpose()?,
        lr: cfg.learning_rate(0),
    };
    on_epoch(&first);
    let mut history = vec![first];

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch_z: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);
    let mut batch_y: Vec<&[f64]> = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch_z.clear();
            batch_y.clear();
            batch_z.extend(chunk.iter().map(|&i| train_set.inputs[i].as_slice()));
            batch_y.extend(chunk.iter().map(|&i| train_set.targets[i].as_slice()));

            for (dst, src) in lookahead.layers.iter_mut().zip(&theta.layers) {
                dst.weights.copy_from_slice(&src.weights);
                dst.biases.copy_from_slice(&src.biases);
            }
            lookahead.zip_params_mut(&velocity, |p, v| *p += cfg.momentum * v);
            let (_, grad) = lookahead.gradients(&batch_z, &batch_y, Mode::Train(&mut rng))?;

            let lr = cfg.learning_rate(updates);
            for ((vw, vb), (gw, gb)) in velocity
                .weights
                .iter_mut()
                .zip(velocity.biases.iter_mut())
                .zip(grad.weights.iter().zip(&grad.biases))
            {
                for (v, g) in vw.iter_mut().zip(gw).chain(vb.iter_mut().zip(gb)) {
                    *v = cfg.momentum * *v - lr * g;
                }
            }
            theta.zip_params_mut(&velocity, |p, v| *p += v);
            updates += 1;
        }

        let train_rmse = evaluate(&theta, train_set)?;
        let record = EpochRecord {
            epoch,
            train_rmse,
            val_rmse: val_set.map(|v| evaluate(&theta, v)).transpose()?,
            lr: cfg.learning_rate(updates),
        };
        on_epoch(&record);
        history.push(record);
        if !train_rmse.is_finite() || train_rmse > 10.0 * initial {
            return Err(Error::Divergence {
                epoch,
                rmse: train_rmse,
                initial,
            });
        }
    }
    Ok((theta, history))
}
