//! Where the MAC's per-channel labels come from: the trained sensing
//! pipeline applied to a bank of synthetic frames, a confusion matrix, or
//! the ground truth.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Confusion;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::sensing::SensingPipeline;
use crate::waveform::{gen_labeled, ChannelModelId, FrameConfig, SignalLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    #[default]
    Classifier,
    Confusion,
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankConfig {
    pub per_class: usize,
    pub snr_range_db: (f64, f64),
    pub frame: FrameConfig,
    pub seed: u64,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            per_class: 100,
            snr_range_db: (5.0, 25.0),
            frame: FrameConfig::default(),
            seed: 77,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Inner {
    Truth,
    /// Classifier outputs for frames of each true class.
    Bank([Vec<SignalLabel>; 3]),
    /// Row-stochastic `P(predicted | true)`.
    Matrix([[f64; 3]; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSource(Inner);

impl LabelSource {
    pub fn truth() -> Self {
        Self(Inner::Truth)
    }

    /// Classifies `per_class` fresh frames of each class once. Each sensing
    /// event then draws one of the stored outputs for its true class, which
    /// is the classifier's output on a random frame of that class.
    pub fn from_pipeline(pipeline: &SensingPipeline, cfg: &BankConfig) -> Result<Self> {
        if cfg.per_class == 0 {
            return Err(Error::Empty("frame bank"));
        }
        let mut rng = crate::rng::seeded(cfg.seed);
        let mut out: [Vec<SignalLabel>; 3] = Default::default();
        for label in SignalLabel::ALL {
            let mut frames = Vec::with_capacity(cfg.per_class);
            for k in 0..cfg.per_class {
                let model = ChannelModelId::ALL[rng.random_range(0..ChannelModelId::ALL.len())];
                let snr = rng.random_range(cfg.snr_range_db.0..=cfg.snr_range_db.1);
                let mcs = rng.random_range(0..9u8);
                let seed = derive_seed(cfg.seed, (label.index() * cfg.per_class + k) as u64);
                frames.push(gen_labeled(label, model, snr, mcs, &cfg.frame, &mut rng, seed)?);
            }
            let refs: Vec<&[_]> = frames.iter().map(|f| f.samples.as_slice()).collect();
            out[label.index()] = pipeline.classify(&refs)?;
        }
        Ok(Self(Inner::Bank(out)))
    }

    pub fn from_confusion(c: &Confusion) -> Result<Self> {
        let mut m = [[0.0; 3]; 3];
        for (t, row) in c.counts.iter().enumerate() {
            let n: usize = row.iter().sum();
            if n == 0 {
                return Err(Error::Empty("confusion row"));
            }
            for p in 0..3 {
                m[t][p] = row[p] as f64 / n as f64;
            }
        }
        Ok(Self(Inner::Matrix(m)))
    }

    /// Counts of (true, predicted) held by the source; ground truth reports
    /// an empty matrix.
    pub fn confusion(&self) -> Confusion {
        match &self.0 {
            Inner::Bank(b) => Confusion::from_pairs(
                SignalLabel::ALL
                    .into_iter()
                    .flat_map(|t| b[t.index()].iter().map(move |&p| (t, p))),
            ),
            _ => Confusion::default(),
        }
    }

    pub fn is_truth(&self) -> bool {
        matches!(self.0, Inner::Truth)
    }

    pub fn label<R: Rng + ?Sized>(&self, truth: SignalLabel, rng: &mut R) -> SignalLabel {
        match &self.0 {
            Inner::Truth => truth,
            Inner::Bank(b) => {
                let row = &b[truth.index()];
                row[rng.random_range(0..row.len())]
            }
            Inner::Matrix(m) => {
                let u: f64 = rng.random();
                let row = m[truth.index()];
                if u < row[0] {
                    SignalLabel::I
                } else if u < row[0] + row[1] {
                    SignalLabel::W
                } else {
                    SignalLabel::J
                }
            }
        }
    }
}
