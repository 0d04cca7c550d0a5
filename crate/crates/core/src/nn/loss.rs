use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clipped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over elements of the squared residual.
    Mse,
    /// `-ln p_k` for a one-hot target with hot index `k`.
    CrossEntropy,
}

fn hot_index(target: &[f64]) -> Result<usize> {
    let mut hot = None;
    for (i, &t) in target.iter().enumerate() {
        if t == 1.0 {
            if hot.is_some() {
                return Err(Error::InvalidTarget("more than one hot entry".into()));
            }
            hot = Some(i);
        } else if t != 0.0 {
            return Err(Error::InvalidTarget(format!("entry {i} is {t}, not 0 or 1")));
        }
    }
    hot.ok_or_else(|| Error::InvalidTarget("no hot entry".into()))
}

fn clip(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

pub fn loss(kind: LossKind, prediction: &[f64], target: &[f64]) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::dim(target.len(), prediction.len(), "loss prediction"));
    }
    match kind {
        LossKind::Mse => {
            let n = prediction.len().max(1) as f64;
            Ok(prediction
                .iter()
                .zip(target)
                .map(|(y, t)| (y - t).powi(2))
                .sum::<f64>()
                / n)
        }
        LossKind::CrossEntropy => {
            let k = hot_index(target)?;
            Ok(-clip(prediction[k]).ln())
        }
    }
}

/// Mean loss over the rows of a batch.
pub fn loss_batch(kind: LossKind, prediction: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<f64> {
    if prediction.dim() != target.dim() {
        return Err(Error::dim(target.ncols(), prediction.ncols(), "batch loss"));
    }
    let rows = prediction.nrows().max(1) as f64;
    let mut total = 0.0;
    for (p, t) in prediction.rows().into_iter().zip(target.rows()) {
        total += loss(kind, &p.to_vec(), &t.to_vec())?;
    }
    Ok(total / rows)
}

/// Gradient of the batch-mean loss with respect to the network output.
pub(crate) fn output_gradient(
    kind: LossKind,
    prediction: &Array2<f64>,
    target: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if prediction.dim() != target.dim() {
        return Err(Error::dim(target.ncols(), prediction.ncols(), "loss gradient"));
    }
    let rows = prediction.nrows().max(1) as f64;
    match kind {
        LossKind::Mse => {
            let n = prediction.ncols().max(1) as f64;
            Ok((prediction - &target) * (2.0 / (n * rows)))
        }
        LossKind::CrossEntropy => {
            let mut grad = Array2::zeros(prediction.raw_dim());
            for (r, t) in target.rows().into_iter().enumerate() {
                let k = hot_index(&t.to_vec())?;
                let p = prediction[[r, k]];
                if p > PROB_FLOOR && p < 1.0 - PROB_FLOOR {
                    grad[[r, k]] = -1.0 / (p * rows);
                }
            }
            Ok(grad)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_of_equal_vectors_is_zero() {
        assert_eq!(loss(LossKind::Mse, &[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_of_confident_hit_is_near_zero() {
        let l = loss(LossKind::CrossEntropy, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!((l - (-(1.0 - PROB_FLOOR).ln())).abs() < 1e-15);
        assert!(l < 1e-11);
    }

    #[test]
    fn cross_entropy_of_uniform_is_ln3() {
        let third = 1.0 / 3.0;
        let l = loss(LossKind::CrossEntropy, &[third; 3], &[0.0, 1.0, 0.0]).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_floor_keeps_loss_finite() {
        let l = loss(LossKind::CrossEntropy, &[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((l - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn invalid_one_hot_targets_are_rejected() {
        for bad in [[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.5, 0.5, 0.0]] {
            assert!(matches!(
                loss(LossKind::CrossEntropy, &[0.2, 0.3, 0.5], &bad),
                Err(Error::InvalidTarget(_))
            ));
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(loss(LossKind::Mse, &[1.0], &[1.0, 2.0]).is_err());
    }
}
