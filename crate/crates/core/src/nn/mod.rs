//! Minimal dense neural-network engine.
//!
//! Networks are stacks of fully connected layers `y = act(W x + b)` with an
//! optional inverted dropout on each layer's output. Everything runs in
//! `f64`. The engine is shared by the denoising autoencoder and the signal
//! classifier, and it is deliberately limited to what those two need.

mod adam;
mod backprop;
mod gradcheck;
mod io;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use backprop::{backward, backward_batch, Gradients, LayerGrad};
pub use gradcheck::gradient_check;
pub use io::{load_network, read_network, save_network, write_network, MODEL_FORMAT_VERSION};
pub use loss::{loss, loss_batch, LossKind, PROB_FLOOR};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Softmax,
    Linear,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Softmax => 2,
            Activation::Linear => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Tanh,
            1 => Activation::Relu,
            2 => Activation::Softmax,
            3 => Activation::Linear,
            _ => return None,
        })
    }

    /// Applies the activation row-wise to a batch of pre-activations.
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Linear => {}
            Activation::Softmax => {
                for mut row in z.rows_mut() {
                    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|v| v / sum);
                }
            }
        }
    }
}

/// Shape and behaviour of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    /// Dropout applied to this layer's output during training.
    pub dropout_prob: f64,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            output_dim,
            activation,
            dropout_prob: 0.0,
        }
    }

    pub fn with_dropout(mut self, p: f64) -> Self {
        self.dropout_prob = p;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig("layer dims must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) || self.dropout_prob == 1.0 {
            return Err(Error::InvalidConfig(format!(
                "dropout probability {} outside [0, 1)",
                self.dropout_prob
            )));
        }
        Ok(())
    }
}

/// Dense layer parameters. `weights` has shape `(output_dim, input_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub spec: LayerSpec,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let limit = (6.0 / (spec.input_dim + spec.output_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        let weights =
            Array2::from_shape_fn((spec.output_dim, spec.input_dim), |_| dist.sample(rng));
        Ok(Self {
            spec,
            weights,
            bias: Array1::zeros(spec.output_dim),
        })
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// A feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
    pub rng_seed: u64,
}

/// Per-layer values retained by a batched forward pass for backprop.
pub(crate) struct ForwardCache {
    /// `inputs[l]` is the input to layer `l`; the last entry is the output.
    pub inputs: Vec<Array2<f64>>,
    /// Post-activation values before dropout, per layer.
    pub activations: Vec<Array2<f64>>,
    /// Scaled dropout masks (`0` or `1/(1-p)`), when dropout was applied.
    pub masks: Vec<Option<Array2<f64>>>,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R, rng_seed: u64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        for pair in specs.windows(2) {
            if pair[0].output_dim != pair[1].input_dim {
                return Err(Error::dim(pair[1].input_dim, pair[0].output_dim, "adjacent layers"));
            }
        }
        let layers = specs
            .iter()
            .map(|s| Dense::init(*s, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers, rng_seed })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").spec.output_dim
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }

    /// Forward pass for a single input vector.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], train_mode: bool, rng: &mut R) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        let out = self.forward_batch(batch, train_mode, rng)?;
        Ok(out.into_raw_vec_and_offset().0)
    }

    /// Deterministic inference (dropout disabled).
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        Ok(self.predict_batch(batch)?.into_raw_vec_and_offset().0)
    }

    /// Deterministic inference on a `(batch, input_dim)` matrix.
    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.predict_prefix(x, self.layers.len())
    }

    /// Deterministic output of the first `n_layers` layers.
    pub fn predict_prefix(&self, x: ArrayView2<'_, f64>, n_layers: usize) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut h = x.to_owned();
        for layer in self.layers.iter().take(n_layers) {
            h = affine(&h, layer);
            layer.spec.activation.apply(&mut h);
        }
        Ok(h)
    }

    /// Batched forward pass; dropout masks are drawn only when `train_mode`.
    pub fn forward_batch<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<'_, f64>,
        train_mode: bool,
        rng: &mut R,
    ) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x, train_mode, rng)?.inputs.pop().expect("output"))
    }

    pub(crate) fn forward_cached<R: Rng + ?Sized>(
        &self,
        x: ArrayView2<'_, f64>,
        train_mode: bool,
        rng: &mut R,
    ) -> Result<ForwardCache> {
        self.check_input(x.ncols())?;
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_owned());
        for layer in &self.layers {
            let mut a = affine(inputs.last().expect("input"), layer);
            layer.spec.activation.apply(&mut a);
            let p = layer.spec.dropout_prob;
            if train_mode && p > 0.0 {
                let keep = 1.0 / (1.0 - p);
                let mask = Array2::from_shape_fn(a.raw_dim(), |_| {
                    if rng.random::<f64>() < p {
                        0.0
                    } else {
                        keep
                    }
                });
                let out = &a * &mask;
                activations.push(a);
                masks.push(Some(mask));
                inputs.push(out);
            } else {
                inputs.push(a.clone());
                activations.push(a);
                masks.push(None);
            }
        }
        Ok(ForwardCache {
            inputs,
            activations,
            masks,
        })
    }

    fn check_input(&self, got: usize) -> Result<()> {
        if got != self.input_dim() {
            return Err(Error::dim(self.input_dim(), got, "network input"));
        }
        Ok(())
    }
}

fn affine(h: &Array2<f64>, layer: &Dense) -> Array2<f64> {
    let mut z = h.dot(&layer.weights.t());
    z += &layer.bias.view().insert_axis(Axis(0));
    z
}
