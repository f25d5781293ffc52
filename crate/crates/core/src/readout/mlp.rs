//! Multilayer perceptron readout.
//!
//! Hidden layers use a pointwise non-linearity (ReLU by default) followed by
//! inverted dropout in training mode: each hidden unit is kept with
//! probability `1 − p` and scaled by `1 / (1 − p)`, so evaluation needs no
//! correction. The loss is mean softmax cross-entropy plus
//! `l2_coeff · Σ W²` over weight matrices (biases are not penalized).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::linear::argmax_rows;
use crate::tensor_math::{Matrix, SeededRng};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    #[default]
    Relu,
    Tanh,
}

impl HiddenActivation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            HiddenActivation::Relu => z.max(0.0),
            HiddenActivation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            HiddenActivation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            HiddenActivation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    /// `weights[l]` is `layer_sizes[l] × layer_sizes[l + 1]`.
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    activation: HiddenActivation,
    dropout_rate: f64,
    l2_coeff: f64,
}

/// Parameter-shaped container, used for gradients and optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Intermediate values of one forward pass, needed for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// Input to each weight layer (after dropout for hidden layers).
    inputs: Vec<Matrix>,
    /// Hidden pre-activations.
    pre_activations: Vec<Matrix>,
    /// Per-unit dropout scale (0 or 1/keep) for each hidden layer, when active.
    masks: Vec<Option<Vec<f64>>>,
}

impl MlpModel {
    /// Randomly initialized network. Weights are uniform on
    /// `[−1/√fan_in, 1/√fan_in]`, biases start at zero.
    pub fn new(
        layer_sizes: &[usize],
        activation: HiddenActivation,
        dropout_rate: f64,
        l2_coeff: f64,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        validate_hyper(layer_sizes, dropout_rate, l2_coeff)?;
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out).map(|_| rng.uniform(-bound, bound)).collect();
            weights.push(Matrix::from_raw(fan_in, fan_out, data));
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activation,
            dropout_rate,
            l2_coeff,
        })
    }

    /// Network with explicit parameters.
    pub fn from_parameters(
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
        activation: HiddenActivation,
        dropout_rate: f64,
        l2_coeff: f64,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Shape(format!(
                "{} weight matrices but {} bias vectors",
                weights.len(),
                biases.len()
            )));
        }
        let mut layer_sizes = vec![weights[0].rows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != *layer_sizes.last().unwrap() {
                return Err(Error::Shape(format!(
                    "layer {l} expects {} inputs but previous layer has {}",
                    w.rows(),
                    layer_sizes.last().unwrap()
                )));
            }
            if b.len() != w.cols() {
                return Err(Error::Shape(format!(
                    "layer {l} has {} outputs but {} biases",
                    w.cols(),
                    b.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input(format!("layer {l} has non-finite biases")));
            }
            layer_sizes.push(w.cols());
        }
        validate_hyper(&layer_sizes, dropout_rate, l2_coeff)?;
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            activation,
            dropout_rate,
            l2_coeff,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of weight layers `L`.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn activation(&self) -> HiddenActivation {
        self.activation
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn l2_coeff(&self) -> f64 {
        self.l2_coeff
    }

    pub fn with_l2_coeff(mut self, l2_coeff: f64) -> Result<Self> {
        validate_hyper(&self.layer_sizes, self.dropout_rate, l2_coeff)?;
        self.l2_coeff = l2_coeff;
        Ok(self)
    }

    pub fn with_dropout_rate(mut self, dropout_rate: f64) -> Result<Self> {
        validate_hyper(&self.layer_sizes, dropout_rate, self.l2_coeff)?;
        self.dropout_rate = dropout_rate;
        Ok(self)
    }

    pub fn n_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// All parameters flattened layer by layer (weights then biases).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_parameters());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`parameters`](Self::parameters).
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_parameters() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_parameters(),
                values.len()
            )));
        }
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let nw = w.rows() * w.cols();
            w.as_mut_slice().copy_from_slice(&values[offset..offset + nw]);
            offset += nw;
            let nb = b.len();
            b.copy_from_slice(&values[offset..offset + nb]);
            offset += nb;
        }
        Ok(())
    }

    /// `Σ W²` over weight matrices.
    pub fn weight_sq_norm(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice())
            .map(|v| v * v)
            .sum()
    }

    /// Logits for a batch. Train mode samples dropout masks from `rng`; eval
    /// mode never touches it.
    pub fn forward(&self, x: &Matrix, mode: Mode, rng: &mut SeededRng) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        let depth = self.depth();
        let mut inputs = Vec::with_capacity(depth);
        let mut pre_activations = Vec::with_capacity(depth - 1);
        let mut masks = Vec::with_capacity(depth - 1);
        let keep = 1.0 - self.dropout_rate;
        let mut current = x.clone();
        for l in 0..depth {
            let mut z = current.matmul(&self.weights[l])?;
            add_bias(&mut z, &self.biases[l]);
            inputs.push(current);
            if l + 1 == depth {
                return Ok((
                    z,
                    ForwardCache {
                        inputs,
                        pre_activations,
                        masks,
                    },
                ));
            }
            let mut a = z.clone();
            for v in a.as_mut_slice() {
                *v = self.activation.apply(*v);
            }
            let mask = if mode == Mode::Train && self.dropout_rate > 0.0 {
                let scale = 1.0 / keep;
                let m: Vec<f64> = (0..a.rows() * a.cols())
                    .map(|_| if rng.bernoulli(keep) { scale } else { 0.0 })
                    .collect();
                for (v, s) in a.as_mut_slice().iter_mut().zip(&m) {
                    *v *= s;
                }
                Some(m)
            } else {
                None
            };
            pre_activations.push(z);
            masks.push(mask);
            current = a;
        }
        unreachable!("network has at least one layer")
    }

    /// Logits in evaluation mode.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let mut unused = SeededRng::new(0);
        Ok(self.forward(x, Mode::Eval, &mut unused)?.0)
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.logits(x)?))
    }

    /// Backpropagated gradients of [`loss`] on one batch. Returns the pure
    /// cross-entropy, the full loss, and the gradients. In train mode the
    /// dropout masks come from `rng`, exactly as in [`forward`](Self::forward).
    pub fn gradients(
        &self,
        x: &Matrix,
        labels: &[usize],
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<(f64, f64, Gradients)> {
        let (logits, cache) = self.forward(x, mode, rng)?;
        let ce = cross_entropy(&logits, labels)?;
        let total = ce + self.l2_coeff * self.weight_sq_norm();

        let batch = x.rows() as f64;
        let mut delta = softmax(&logits);
        for (i, &c) in labels.iter().enumerate() {
            delta[(i, c)] -= 1.0;
        }
        for v in delta.as_mut_slice() {
            *v /= batch;
        }

        let depth = self.depth();
        let mut g_weights = vec![Matrix::zeros(0, 0); depth];
        let mut g_biases = vec![Vec::new(); depth];
        for l in (0..depth).rev() {
            let mut gw = cache.inputs[l].t_matmul(&delta)?;
            if self.l2_coeff != 0.0 {
                for (g, w) in gw.as_mut_slice().iter_mut().zip(self.weights[l].as_slice()) {
                    *g += 2.0 * self.l2_coeff * w;
                }
            }
            let mut gb = vec![0.0; delta.cols()];
            for row in delta.iter_rows() {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            g_weights[l] = gw;
            g_biases[l] = gb;
            if l > 0 {
                let mut back = delta.matmul_t(&self.weights[l])?;
                let z = &cache.pre_activations[l - 1];
                let mask = cache.masks[l - 1].as_deref();
                for (k, (v, &zv)) in back.as_mut_slice().iter_mut().zip(z.as_slice()).enumerate() {
                    let m = mask.map_or(1.0, |m| m[k]);
                    *v *= m * self.activation.derivative(zv);
                }
                delta = back;
            }
        }
        Ok((
            ce,
            total,
            Gradients {
                weights: g_weights,
                biases: g_biases,
            },
        ))
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }
}

fn validate_hyper(layer_sizes: &[usize], dropout_rate: f64, l2_coeff: f64) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::Parameter(
            "an MLP needs at least an input and an output layer".into(),
        ));
    }
    if let Some(l) = layer_sizes.iter().position(|&s| s == 0) {
        return Err(Error::Parameter(format!("layer {l} has zero width")));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::Parameter(format!(
            "dropout rate must lie in [0, 1), got {dropout_rate}"
        )));
    }
    if !(l2_coeff >= 0.0 && l2_coeff.is_finite()) {
        return Err(Error::Parameter(format!("l2 coefficient must be >= 0, got {l2_coeff}")));
    }
    Ok(())
}

fn add_bias(z: &mut Matrix, bias: &[f64]) {
    for i in 0..z.rows() {
        for (v, b) in z.row_mut(i).iter_mut().zip(bias) {
            *v += b;
        }
    }
}

/// Row-wise softmax, stabilized by subtracting each row's maximum.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean softmax cross-entropy, computed with log-sum-exp.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != logits.rows() {
        return Err(Error::Shape(format!(
            "{} logit rows but {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    if logits.rows() == 0 {
        return Err(Error::Input("cross-entropy of an empty batch".into()));
    }
    let mut total = 0.0;
    for (row, &c) in logits.iter_rows().zip(labels) {
        if c >= row.len() {
            return Err(Error::Input(format!("label {c} outside 0..{}", row.len())));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[c];
    }
    Ok(total / logits.rows() as f64)
}

/// Training objective: mean cross-entropy plus the model's L2 weight penalty.
pub fn loss(logits: &Matrix, labels: &[usize], model: &MlpModel) -> Result<f64> {
    Ok(cross_entropy(logits, labels)? + model.l2_coeff() * model.weight_sq_norm())
}
