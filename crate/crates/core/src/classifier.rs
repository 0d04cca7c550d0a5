//! Three-way signal classifier (idle, WiFi, jammer) over autoencoder
//! latents.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{adam_step, backward_batch, loss_batch, Activation, AdamConfig, AdamState, LayerSpec, LossKind, Network};
use crate::report::{write_csv, SCHEMA_VERSION};
use crate::rng::seeded;
pub use crate::waveform::SignalLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without test-loss improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 15,
            dropout: 0.5,
            lr: 1e-3,
            epochs: 100,
            batch_size: 32,
            patience: 10,
            seed: 1,
        }
    }
}

impl ClassifierConfig {
    /// The slower learning rate of the reference training setup.
    pub fn reference_lr() -> Self {
        Self {
            lr: 1e-5,
            ..Self::default()
        }
    }
}

/// Per-dimension z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    /// Dimensions with zero spread get unit scale.
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Empty("standardizer input"));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let std = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean.view().insert_axis(Axis(0))) / &self.std.view().insert_axis(Axis(0))
    }

    /// Rewrites the first layer so that it accepts raw inputs:
    /// `W (x - m) / s + b = (W / s) x + (b - W m / s)`.
    pub fn fold_into(&self, net: &mut Network) {
        let layer = &mut net.layers[0];
        for mut row in layer.weights.outer_iter_mut() {
            row /= &self.std;
        }
        let shift = layer.weights.dot(&self.mean);
        layer.bias -= &shift;
    }
}

/// Trained classifier; input standardization is folded into the first
/// layer, so the network takes raw latents.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub net: Network,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
}

fn one_hot(labels: &[SignalLabel]) -> Array2<f64> {
    let mut t = Array2::zeros((labels.len(), 3));
    for (i, l) in labels.iter().enumerate() {
        t[[i, l.index()]] = 1.0;
    }
    t
}

fn argmax(row: ndarray::ArrayView1<'_, f64>) -> usize {
    // strict comparison keeps the lowest index on ties
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn accuracy(probs: &Array2<f64>, labels: &[SignalLabel]) -> f64 {
    let hits = probs
        .outer_iter()
        .zip(labels)
        .filter(|(p, l)| argmax(p.view()) == l.index())
        .count();
    hits as f64 / labels.len() as f64
}

/// Trains the `latent -> 15 relu (dropout) -> 3 softmax` network with
/// cross-entropy and ADAM, stopping when the test loss has not improved
/// for `patience` epochs and keeping the best-scoring weights.
pub fn train_fnn(
    train_x: ArrayView2<'_, f64>,
    train_y: &[SignalLabel],
    test_x: ArrayView2<'_, f64>,
    test_y: &[SignalLabel],
    cfg: &ClassifierConfig,
) -> Result<(ClassifierModel, Vec<EpochMetrics>)> {
    if train_x.nrows() == 0 || test_x.nrows() == 0 {
        return Err(Error::Empty("classifier training or test split"));
    }
    if train_x.nrows() != train_y.len() || test_x.nrows() != test_y.len() {
        return Err(Error::dim(train_x.nrows(), train_y.len(), "features vs labels"));
    }
    let scaler = Standardizer::fit(train_x)?;
    let xs = scaler.apply(train_x);
    let xt = scaler.apply(test_x);
    let ts = one_hot(train_y);
    let tt = one_hot(test_y);

    let specs = [
        LayerSpec::new(train_x.ncols(), cfg.hidden, Activation::Relu).with_dropout(cfg.dropout),
        LayerSpec::new(cfg.hidden, 3, Activation::Softmax),
    ];
    let mut rng = seeded(cfg.seed);
    let mut net = Network::new(&specs, &mut rng, cfg.seed)?;
    let mut adam = AdamState::new(&net, AdamConfig::with_lr(cfg.lr));
    let mut order: Vec<usize> = (0..xs.nrows()).collect();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, net.clone());
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let xb = xs.select(Axis(0), chunk);
            let tb = ts.select(Axis(0), chunk);
            let (_, grads) = backward_batch(&net, xb.view(), tb.view(), LossKind::CrossEntropy, true, &mut rng)
                .map_err(|e| Error::Diverged {
                    epoch,
                    detail: e.to_string(),
                })?;
            adam_step(&mut net, &grads, &mut adam)?;
        }
        let ps = net.predict_batch(xs.view())?;
        let pt = net.predict_batch(xt.view())?;
        let m = EpochMetrics {
            epoch,
            train_loss: loss_batch(LossKind::CrossEntropy, ps.view(), ts.view())?,
            train_acc: accuracy(&ps, train_y),
            test_loss: loss_batch(LossKind::CrossEntropy, pt.view(), tt.view())?,
            test_acc: accuracy(&pt, test_y),
        };
        if !m.train_loss.is_finite() || !m.test_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: "non-finite loss".into(),
            });
        }
        history.push(m);
        if m.test_loss < best.0 - 1e-9 {
            best = (m.test_loss, net.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let mut net = best.1;
    scaler.fold_into(&mut net);
    Ok((ClassifierModel { net }, history))
}

impl ClassifierModel {
    pub fn probabilities(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.net.predict_batch(x)
    }

    pub fn classify(&self, feature: &[f64]) -> Result<(SignalLabel, [f64; 3])> {
        let p = self.net.predict(feature)?;
        let probs = [p[0], p[1], p[2]];
        let idx = argmax(ndarray::ArrayView1::from(&probs[..]));
        Ok((SignalLabel::from_index(idx).expect("3 classes"), probs))
    }

    pub fn classify_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<SignalLabel>> {
        let p = self.probabilities(x)?;
        Ok(p.outer_iter()
            .map(|r| SignalLabel::from_index(argmax(r)).expect("3 classes"))
            .collect())
    }

    pub fn confusion(&self, x: ArrayView2<'_, f64>, y: &[SignalLabel]) -> Result<Confusion> {
        if y.is_empty() {
            return Err(Error::Empty("confusion test set"));
        }
        Ok(Confusion::from_pairs(y.iter().copied().zip(self.classify_batch(x)?)))
    }
}

/// Rows are true labels, columns predicted labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub counts: [[usize; 3]; 3],
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (SignalLabel, SignalLabel)>) -> Self {
        let mut c = Self::default();
        for (t, p) in pairs {
            c.counts[t.index()][p.index()] += 1;
        }
        c
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Entries divided by the total count, so they sum to 1.
    pub fn normalized(&self) -> [[f64; 3]; 3] {
        let n = self.total().max(1) as f64;
        self.counts.map(|r| r.map(|v| v as f64 / n))
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.normalized();
        (0..3).map(|i| n[i][i]).sum()
    }

    pub fn recall(&self, label: SignalLabel) -> f64 {
        let row = self.counts[label.index()];
        let n: usize = row.iter().sum();
        if n == 0 {
            return f64::NAN;
        }
        row[label.index()] as f64 / n as f64
    }

    pub fn fraction(&self, truth: SignalLabel, predicted: SignalLabel) -> f64 {
        self.normalized()[truth.index()][predicted.index()]
    }
}

#[derive(Serialize)]
struct MetricsRow {
    schema_version: u32,
    epoch: usize,
    train_loss: f64,
    train_acc: f64,
    test_loss: f64,
    test_acc: f64,
}

pub fn write_metrics(path: &Path, history: &[EpochMetrics]) -> Result<()> {
    write_csv(
        path,
        history.iter().map(|m| MetricsRow {
            schema_version: SCHEMA_VERSION,
            epoch: m.epoch,
            train_loss: m.train_loss,
            train_acc: m.train_acc,
            test_loss: m.test_loss,
            test_acc: m.test_acc,
        }),
    )
}

#[derive(Serialize)]
struct ConfusionRow {
    schema_version: u32,
    true_label: String,
    predicted_label: String,
    count: usize,
    fraction: f64,
}

pub fn write_confusion(path: &Path, c: &Confusion) -> Result<()> {
    let n = c.normalized();
    let rows = SignalLabel::ALL.iter().flat_map(|&t| {
        SignalLabel::ALL.iter().map(move |&p| ConfusionRow {
            schema_version: SCHEMA_VERSION,
            true_label: t.to_string(),
            predicted_label: p.to_string(),
            count: c.counts[t.index()][p.index()],
            fraction: n[t.index()][p.index()],
        })
    });
    write_csv(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<SignalLabel>) {
        let mut rng = seeded(seed);
        let centres = [[0.0, 0.0, 10.0], [5.0, 5.0, 10.0], [-5.0, 5.0, 10.0]];
        let mut x = Array2::zeros((3 * n, 3));
        let mut y = Vec::new();
        for (c, centre) in centres.iter().enumerate() {
            for i in 0..n {
                for j in 0..3 {
                    x[[c * n + i, j]] = centre[j] + rng.random_range(-1.0..1.0);
                }
                y.push(SignalLabel::from_index(c).unwrap());
            }
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (x, y) = blobs(60, 1);
        let (xt, yt) = blobs(20, 2);
        let cfg = ClassifierConfig {
            lr: 1e-2,
            ..ClassifierConfig::default()
        };
        let (model, hist) = train_fnn(x.view(), &y, xt.view(), &yt, &cfg).unwrap();
        assert!(!hist.is_empty());
        let c = model.confusion(xt.view(), &yt).unwrap();
        assert!(c.accuracy() > 0.95, "{:?}", c);
        let sum: f64 = c.normalized().iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let (label, p) = model.classify(xt.row(0).as_slice().unwrap()).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(label, model.classify(xt.row(0).as_slice().unwrap()).unwrap().0);
    }

    #[test]
    fn folding_matches_explicit_standardization() {
        let (x, _) = blobs(10, 3);
        let scaler = Standardizer::fit(x.view()).unwrap();
        let specs = [LayerSpec::new(3, 4, Activation::Tanh), LayerSpec::new(4, 3, Activation::Softmax)];
        let net = Network::new(&specs, &mut seeded(4), 4).unwrap();
        let expected = net.predict_batch(scaler.apply(x.view()).view()).unwrap();
        let mut folded = net.clone();
        scaler.fold_into(&mut folded);
        let got = folded.predict_batch(x.view()).unwrap();
        assert!((&expected - &got).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(ndarray::ArrayView1::from(&[0.4, 0.4, 0.2][..])), 0);
        assert_eq!(argmax(ndarray::ArrayView1::from(&[0.2, 0.4, 0.4][..])), 1);
    }
}
