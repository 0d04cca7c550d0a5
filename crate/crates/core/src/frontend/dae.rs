use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dsp::{bin_freq, fft, C64};
use crate::error::{Error, Result};
use crate::nn::{adam_step, backward_batch, Activation, AdamConfig, AdamState, LayerSpec, LossKind, Network};
use crate::report::{write_csv, SCHEMA_VERSION};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DaeConfig {
    /// Hidden widths; the middle entry is the latent size and the output
    /// width equals the input width.
    pub hidden: Vec<usize>,
    /// Variance of the Gaussian corruption added to each real input.
    pub noise_variance: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for DaeConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 64, 256],
            noise_variance: 0.1,
            batch_size: 64,
            epochs: 25,
            lr: 1e-3,
            seed: 1,
        }
    }
}

impl DaeConfig {
    pub fn full_scale() -> Self {
        Self {
            hidden: vec![534, 66, 534],
            ..Self::default()
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.hidden[self.hidden.len() / 2]
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.len() % 2 == 0 {
            return Err(Error::InvalidConfig("autoencoder needs an odd number of hidden layers".into()));
        }
        if self.latent_dim() >= input_dim {
            return Err(Error::InvalidConfig(format!(
                "latent dim {} must be below input dim {input_dim}",
                self.latent_dim()
            )));
        }
        if !(self.noise_variance >= 0.0) || self.batch_size == 0 || !(self.lr >= 0.0) {
            return Err(Error::InvalidConfig("noise variance, batch size and lr must be valid".into()));
        }
        Ok(())
    }
}

/// Trained encoder/decoder pair stored as one network; the first
/// `encoder_layers` layers form the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeModel {
    pub net: Network,
    pub encoder_layers: usize,
}

impl DaeModel {
    pub fn from_network(net: Network) -> Self {
        let encoder_layers = net.layers.len().div_ceil(2);
        Self { net, encoder_layers }
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.net.layers[self.encoder_layers - 1].spec.output_dim
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = ArrayView2::from_shape((1, x.len()), x).map_err(|_| Error::dim(self.input_dim(), x.len(), "encode"))?;
        Ok(self.encode_batch(v)?.into_raw_vec_and_offset().0)
    }

    pub fn encode_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.net.predict_prefix(x, self.encoder_layers)
    }

    pub fn reconstruct_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.net.predict_batch(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

fn corrupt<R: Rng + ?Sized>(x: ArrayView2<'_, f64>, variance: f64, rng: &mut R) -> Array2<f64> {
    if variance == 0.0 {
        return x.to_owned();
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite variance");
    x.mapv(|v| v + normal.sample(rng))
}

fn denoising_loss(net: &Network, clean: ArrayView2<'_, f64>, noisy: ArrayView2<'_, f64>) -> Result<f64> {
    let out = net.predict_batch(noisy)?;
    Ok((&out - &clean).mapv(|v| v * v).mean().unwrap_or(0.0))
}

/// Trains the denoising autoencoder to map `x + n` back to `x`, with `n`
/// white Gaussian noise of the configured variance. Returns the model and
/// the per-epoch losses; row 0 is the untrained network. The test loss
/// uses one fixed corruption draw so epochs are comparable.
pub fn train_dae(
    train: ArrayView2<'_, f64>,
    test: ArrayView2<'_, f64>,
    cfg: &DaeConfig,
) -> Result<(DaeModel, Vec<EpochLoss>)> {
    let input_dim = train.ncols();
    cfg.validate(input_dim)?;
    if train.nrows() == 0 || test.nrows() == 0 {
        return Err(Error::Empty("autoencoder training or test split"));
    }
    if test.ncols() != input_dim {
        return Err(Error::dim(input_dim, test.ncols(), "test split width"));
    }
    let mut dims = vec![input_dim];
    dims.extend(&cfg.hidden);
    dims.push(input_dim);
    let specs: Vec<LayerSpec> = dims.windows(2).map(|w| LayerSpec::new(w[0], w[1], Activation::Tanh)).collect();
    let mut rng = seeded(cfg.seed);
    let mut net = Network::new(&specs, &mut rng, cfg.seed)?;
    let mut adam = AdamState::new(&net, AdamConfig::with_lr(cfg.lr));

    let test_noisy = corrupt(test, cfg.noise_variance, &mut seeded(derive_seed(cfg.seed, 1)));
    let train_probe_noisy = corrupt(train, cfg.noise_variance, &mut seeded(derive_seed(cfg.seed, 2)));
    let mut history = vec![EpochLoss {
        epoch: 0,
        train_loss: denoising_loss(&net, train, train_probe_noisy.view())?,
        test_loss: denoising_loss(&net, test, test_noisy.view())?,
    }];

    let mut order: Vec<usize> = (0..train.nrows()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let clean = train.select(Axis(0), chunk);
            let noisy = corrupt(clean.view(), cfg.noise_variance, &mut rng);
            let (loss, grads) = backward_batch(&net, noisy.view(), clean.view(), LossKind::Mse, true, &mut rng)
                .map_err(|e| Error::Diverged {
                    epoch,
                    detail: e.to_string(),
                })?;
            adam_step(&mut net, &grads, &mut adam)?;
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / train.nrows() as f64;
        let test_loss = denoising_loss(&net, test, test_noisy.view())?;
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: format!("train {train_loss}, test {test_loss}"),
            });
        }
        history.push(EpochLoss {
            epoch,
            train_loss,
            test_loss,
        });
    }
    Ok((DaeModel::from_network(net), history))
}

/// `sum ||x - g(f(x))||^2 / sum ||x||^2` over the rows, with clean inputs.
pub fn relative_mse(model: &DaeModel, x: ArrayView2<'_, f64>) -> Result<f64> {
    let recon = model.reconstruct_batch(x)?;
    let err = (&recon - &x).mapv(|v| v * v).sum();
    let power = x.mapv(|v| v * v).sum();
    if power == 0.0 {
        return Err(Error::Empty("relative MSE of an all-zero set"));
    }
    Ok(err / power)
}

fn out_of_band_power(row: ndarray::ArrayView1<'_, f64>, band: (f64, f64)) -> f64 {
    let mut spec: Vec<C64> = row.exact_chunks(2).into_iter().map(|c| C64::new(c[0], c[1])).collect();
    fft(&mut spec);
    let n = spec.len();
    spec.iter()
        .enumerate()
        .filter(|(k, _)| !(band.0..=band.1).contains(&bin_freq(*k, n)))
        .map(|(_, v)| v.norm_sqr())
        .sum()
}

/// Out-of-band power of the corrupted inputs divided by that of their
/// reconstructions, in dB, pooled over the rows of `clean`.
pub fn sideband_suppression_db<R: Rng + ?Sized>(
    model: &DaeModel,
    clean: ArrayView2<'_, f64>,
    noise_variance: f64,
    band: (f64, f64),
    rng: &mut R,
) -> Result<f64> {
    let noisy = corrupt(clean, noise_variance, rng);
    let recon = model.reconstruct_batch(noisy.view())?;
    let mut p_in = 0.0;
    let mut p_out = 0.0;
    for i in 0..clean.nrows() {
        p_in += out_of_band_power(noisy.slice(s![i, ..]), band);
        p_out += out_of_band_power(recon.slice(s![i, ..]), band);
    }
    Ok(10.0 * (p_in / p_out).log10())
}

#[derive(Serialize)]
struct LossRow {
    schema_version: u32,
    epoch: usize,
    train_loss: f64,
    test_loss: f64,
}

pub fn write_loss_history(path: &Path, history: &[EpochLoss]) -> Result<()> {
    write_csv(
        path,
        history.iter().map(|h| LossRow {
            schema_version: SCHEMA_VERSION,
            epoch: h.epoch,
            train_loss: h.train_loss,
            test_loss: h.test_loss,
        }),
    )
}
