use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{Gradients, Network};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct Moments {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
}

/// First/second moment accumulators for every parameter of a network.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    moments: Vec<Moments>,
}

impl AdamState {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        let moments = net
            .layers
            .iter()
            .map(|l| Moments {
                m_w: Array2::zeros(l.weights.raw_dim()),
                v_w: Array2::zeros(l.weights.raw_dim()),
                m_b: Array1::zeros(l.bias.raw_dim()),
                v_b: Array1::zeros(l.bias.raw_dim()),
            })
            .collect();
        Self { config, t: 0, moments }
    }
}

/// One bias-corrected ADAM update of `net` in place.
pub fn adam_step(net: &mut Network, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if grads.layers.len() != net.layers.len() || state.moments.len() != net.layers.len() {
        return Err(Error::dim(net.layers.len(), grads.layers.len(), "adam layer count"));
    }
    for ((layer, g), m) in net.layers.iter().zip(&grads.layers).zip(&state.moments) {
        if g.weights.dim() != layer.weights.dim() || m.m_w.dim() != layer.weights.dim() {
            return Err(Error::dim(layer.weights.len(), g.weights.len(), "adam weights"));
        }
        if g.bias.dim() != layer.bias.dim() {
            return Err(Error::dim(layer.bias.len(), g.bias.len(), "adam bias"));
        }
    }
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };
    for ((layer, g), m) in net.layers.iter_mut().zip(&grads.layers).zip(&mut state.moments) {
        Zip::from(&mut layer.weights)
            .and(&g.weights)
            .and(&mut m.m_w)
            .and(&mut m.v_w)
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&g.bias)
            .and(&mut m.m_b)
            .and(&mut m.v_b)
            .for_each(update);
    }
    Ok(())
}
