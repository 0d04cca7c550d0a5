use super::{backward, loss, LossKind, Network};
use crate::error::Result;

/// Largest relative disagreement between backprop and central differences.
///
/// For every parameter `w`: `|a - n| / max(|a|, |n|, 1e-12)` where `a` is the
/// analytic derivative and `n = (L(w+eps) - L(w-eps)) / (2 eps)`. Dropout is
/// disabled for both evaluations.
pub fn gradient_check(net: &Network, x: &[f64], target: &[f64], kind: LossKind, eps: f64) -> Result<f64> {
    assert!(eps > 0.0, "eps must be positive");
    let analytic = backward(net, x, target, kind)?;
    let mut probe = net.clone();
    let eval = |n: &Network| -> Result<f64> { loss(kind, &n.predict(x)?, target) };
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-12);

    let mut worst: f64 = 0.0;
    for (l, grad) in analytic.layers.iter().enumerate() {
        for (idx, &a) in grad.weights.indexed_iter() {
            let orig = probe.layers[l].weights[idx];
            probe.layers[l].weights[idx] = orig + eps;
            let up = eval(&probe)?;
            probe.layers[l].weights[idx] = orig - eps;
            let down = eval(&probe)?;
            probe.layers[l].weights[idx] = orig;
            worst = worst.max(rel(a, (up - down) / (2.0 * eps)));
        }
        for (i, &a) in grad.bias.iter().enumerate() {
            let orig = probe.layers[l].bias[i];
            probe.layers[l].bias[i] = orig + eps;
            let up = eval(&probe)?;
            probe.layers[l].bias[i] = orig - eps;
            let down = eval(&probe)?;
            probe.layers[l].bias[i] = orig;
            worst = worst.max(rel(a, (up - down) / (2.0 * eps)));
        }
    }
    Ok(worst)
}
