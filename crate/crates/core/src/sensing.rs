//! End-to-end spectrum sensing: dataset, front end, autoencoder and
//! classifier trained together, then applied to sensed frames.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::classifier::{train_fnn, ClassifierConfig, ClassifierModel, Confusion, EpochMetrics, SignalLabel};
use crate::error::{Error, Result};
use crate::frontend::{
    preprocess, preprocess_frames, relative_mse, sideband_suppression_db, train_dae, DaeConfig, DaeModel, EpochLoss,
    FrontEndConfig,
};
use crate::nn::{load_network, save_network};
use crate::rng::{derive_seed, seeded};
use crate::waveform::{make_dataset, Dataset, DatasetConfig, Split};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub frontend: FrontEndConfig,
    pub dae: DaeConfig,
    pub classifier: ClassifierConfig,
}

impl PipelineConfig {
    /// Same settings with every seed derived from `seed`. Derived seeds
    /// are kept below 2^63 so the config still serializes to TOML.
    pub fn with_seed(mut self, seed: u64) -> Self {
        let derive = |k| derive_seed(seed, k) & i64::MAX as u64;
        self.dataset.seed = derive(10);
        self.dae.seed = derive(11);
        self.classifier.seed = derive(12);
        self
    }
}

#[derive(Debug, Clone)]
pub struct SensingPipeline {
    pub frontend: FrontEndConfig,
    pub dae: DaeModel,
    pub classifier: ClassifierModel,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub dae_history: Vec<EpochLoss>,
    pub classifier_history: Vec<EpochMetrics>,
    /// Clean-input reconstruction error relative to signal power, test split.
    pub relative_mse: f64,
    /// Out-of-band suppression of reconstructed test WiFi frames.
    pub sideband_suppression_db: f64,
    pub train_confusion: Confusion,
    pub test_confusion: Confusion,
}

fn labels(ds: &Dataset, idx: &[usize]) -> Vec<SignalLabel> {
    idx.iter().map(|&i| ds.frames[i].true_label).collect()
}

/// Trains the autoencoder on the dataset's train split, then the
/// classifier on the encoded latents.
pub fn train_on_dataset(ds: &Dataset, cfg: &PipelineConfig) -> Result<(SensingPipeline, PipelineReport)> {
    cfg.frontend.validate()?;
    let train_idx = ds.indices(Split::Train);
    let test_idx = ds.indices(Split::Test);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Empty("dataset split"));
    }
    let all: Vec<_> = ds.frames.iter().collect();
    let x = preprocess_frames(&all, &cfg.frontend)?;
    let xtr = x.select(Axis(0), &train_idx);
    let xte = x.select(Axis(0), &test_idx);

    let (dae, dae_history) = train_dae(xtr.view(), xte.view(), &cfg.dae)?;
    let rel = relative_mse(&dae, xte.view())?;
    let wifi_test: Vec<usize> = test_idx
        .iter()
        .enumerate()
        .filter(|(_, &i)| ds.frames[i].true_label == SignalLabel::W)
        .map(|(k, _)| k)
        .collect();
    let sideband = if wifi_test.is_empty() {
        f64::NAN
    } else {
        let w = xte.select(Axis(0), &wifi_test);
        let mut rng = seeded(derive_seed(cfg.dae.seed, 3));
        sideband_suppression_db(&dae, w.view(), cfg.dae.noise_variance, cfg.frontend.band_limits, &mut rng)?
    };

    let ztr = dae.encode_batch(xtr.view())?;
    let zte = dae.encode_batch(xte.view())?;
    let ytr = labels(ds, &train_idx);
    let yte = labels(ds, &test_idx);
    let (classifier, classifier_history) = train_fnn(ztr.view(), &ytr, zte.view(), &yte, &cfg.classifier)?;
    let train_confusion = classifier.confusion(ztr.view(), &ytr)?;
    let test_confusion = classifier.confusion(zte.view(), &yte)?;
    Ok((
        SensingPipeline {
            frontend: cfg.frontend,
            dae,
            classifier,
        },
        PipelineReport {
            dae_history,
            classifier_history,
            relative_mse: rel,
            sideband_suppression_db: sideband,
            train_confusion,
            test_confusion,
        },
    ))
}

pub fn train_pipeline(cfg: &PipelineConfig) -> Result<(SensingPipeline, PipelineReport)> {
    let ds = make_dataset(&cfg.dataset)?;
    train_on_dataset(&ds, cfg)
}

impl SensingPipeline {
    pub fn latents(&self, frames: &[&[crate::dsp::C64]]) -> Result<Array2<f64>> {
        let width = self.dae.input_dim();
        let mut x = Array2::zeros((frames.len(), width));
        for (i, f) in frames.iter().enumerate() {
            let row = preprocess(f, &self.frontend);
            if row.len() != width {
                return Err(Error::dim(width, row.len(), "sensed frame"));
            }
            x.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        }
        self.dae.encode_batch(x.view())
    }

    pub fn classify(&self, frames: &[&[crate::dsp::C64]]) -> Result<Vec<SignalLabel>> {
        let z = self.latents(frames)?;
        self.classifier.classify_batch(z.view())
    }

    /// Writes `autoencoder.dwnn` and `classifier.dwnn` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        save_network(&self.dae.net, &dir.join("autoencoder.dwnn"))?;
        save_network(&self.classifier.net, &dir.join("classifier.dwnn"))
    }

    pub fn load(dir: &Path, frontend: FrontEndConfig) -> Result<Self> {
        let dae = DaeModel::from_network(load_network(&dir.join("autoencoder.dwnn"))?);
        let classifier = ClassifierModel {
            net: load_network(&dir.join("classifier.dwnn"))?,
        };
        if classifier.net.input_dim() != dae.latent_dim() {
            return Err(Error::dim(dae.latent_dim(), classifier.net.input_dim(), "classifier input vs latent"));
        }
        Ok(Self {
            frontend,
            dae,
            classifier,
        })
    }
}
