use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::loss::{loss_batch, output_gradient};
use super::{Activation, LossKind, Network};
use crate::error::{Error, Result};

/// Gradient of one dense layer; shapes mirror the layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().all(|v| v.is_finite()) && g.bias.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Gradient of the loss for a single example with dropout disabled.
pub fn backward(net: &Network, x: &[f64], target: &[f64], kind: LossKind) -> Result<Gradients> {
    let xb = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
    let tb = ArrayView2::from_shape((1, target.len()), target).expect("contiguous slice");
    // rng is unused with train_mode off
    let mut rng = crate::rng::seeded(0);
    Ok(backward_batch(net, xb, tb, kind, false, &mut rng)?.1)
}

/// Mean loss and its gradient over a batch of rows.
pub fn backward_batch<R: Rng + ?Sized>(
    net: &Network,
    x: ArrayView2<'_, f64>,
    target: ArrayView2<'_, f64>,
    kind: LossKind,
    train_mode: bool,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    if x.nrows() != target.nrows() {
        return Err(Error::dim(x.nrows(), target.nrows(), "batch rows"));
    }
    if target.ncols() != net.output_dim() {
        return Err(Error::dim(net.output_dim(), target.ncols(), "target width"));
    }
    let cache = net.forward_cached(x, train_mode, rng)?;
    let output = cache.inputs.last().expect("output");
    if !output.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("network output".into()));
    }
    let value = loss_batch(kind, output.view(), target)?;
    let mut delta = output_gradient(kind, output, target)?;

    let mut grads = Vec::with_capacity(net.layers.len());
    for (l, layer) in net.layers.iter().enumerate().rev() {
        if let Some(mask) = &cache.masks[l] {
            delta *= mask;
        }
        let a = &cache.activations[l];
        let dz = match layer.spec.activation {
            Activation::Linear => delta,
            Activation::Tanh => delta * &a.mapv(|y| 1.0 - y * y),
            Activation::Relu => delta * &a.mapv(|y| if y > 0.0 { 1.0 } else { 0.0 }),
            Activation::Softmax => {
                // Jacobian-vector product: y * (d - <d, y>)
                let dot = (&delta * a).sum_axis(Axis(1)).insert_axis(Axis(1));
                a * &(delta - &dot)
            }
        };
        let input = &cache.inputs[l];
        let gw = dz.t().dot(input);
        let gb = dz.sum_axis(Axis(0));
        delta = dz.dot(&layer.weights);
        grads.push(LayerGrad {
            weights: gw,
            bias: gb,
        });
    }
    grads.reverse();
    let grads = Gradients { layers: grads };
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;
    use crate::rng::seeded;

    #[test]
    fn zero_weight_net_with_matching_target_has_zero_gradient() {
        let mut net = Network::new(&[LayerSpec::new(3, 2, Activation::Linear)], &mut seeded(0), 0).unwrap();
        net.layers[0].weights.fill(0.0);
        net.layers[0].bias = Array1::from(vec![0.5, -0.25]);
        let g = backward(&net, &[1.0, 2.0, 3.0], &[0.5, -0.25], LossKind::Mse).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn scalar_chain_rule() {
        let mut net = Network::new(&[LayerSpec::new(1, 1, Activation::Linear)], &mut seeded(0), 0).unwrap();
        net.layers[0].weights[[0, 0]] = 1.0;
        net.layers[0].bias[0] = 0.0;
        let g = backward(&net, &[2.0], &[0.0], LossKind::Mse).unwrap();
        assert_eq!(g.layers[0].weights[[0, 0]], 8.0);
        assert_eq!(g.layers[0].bias[0], 4.0);
    }

    #[test]
    fn gradient_shapes_mirror_parameters() {
        let specs = [
            LayerSpec::new(4, 6, Activation::Tanh),
            LayerSpec::new(6, 3, Activation::Softmax),
        ];
        let net = Network::new(&specs, &mut seeded(5), 5).unwrap();
        let g = backward(&net, &[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0, 1.0], LossKind::CrossEntropy).unwrap();
        for (gl, l) in g.layers.iter().zip(&net.layers) {
            assert_eq!(gl.weights.dim(), l.weights.dim());
            assert_eq!(gl.bias.dim(), l.bias.dim());
        }
    }

    #[test]
    fn non_finite_input_is_reported() {
        let net = Network::new(&[LayerSpec::new(2, 1, Activation::Linear)], &mut seeded(0), 0).unwrap();
        let err = backward(&net, &[f64::NAN, 1.0], &[0.0], LossKind::Mse).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
