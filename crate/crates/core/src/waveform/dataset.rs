//! Balanced, stratified frame datasets and their on-disk format.
//!
//! File layout (version 1, little-endian):
//!
//! ```text
//! magic      4 bytes "DWDS"
//! version    u32     1
//! n_samples  u32     complex samples per frame
//! n_frames   u32
//! per frame:
//!   label    u8      0 I, 1 W, 2 J
//!   model    u8      0..5 for A..F, 255 none
//!   snr_db   f64     NaN when no noise was added
//!   mcs      u8      255 none
//!   split    u8      0 train, 1 test
//!   seed     u64
//!   samples  f64 x 2 n_samples, interleaved I, Q
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_labeled, ChannelModelId, FrameConfig, IqFrame, SignalLabel};
use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

pub const DATASET_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"DWDS";
const NONE: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_per_class: usize,
    pub models: Vec<ChannelModelId>,
    pub snr_range_db: (f64, f64),
    pub frame: FrameConfig,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_per_class: 400,
            models: ChannelModelId::ALL.to_vec(),
            snr_range_db: (5.0, 25.0),
            frame: FrameConfig::default(),
            seed: 1,
        }
    }
}

impl DatasetConfig {
    pub fn full_scale() -> Self {
        Self {
            n_per_class: 4000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidConfig("n_per_class must be >= 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("at least one channel model required".into()));
        }
        let (lo, hi) = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidConfig(format!("bad SNR range ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n_samples: usize,
    pub frames: Vec<IqFrame>,
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.split[i] == which).collect()
    }

    pub fn count(&self, label: SignalLabel) -> usize {
        self.frames.iter().filter(|f| f.true_label == label).count()
    }
}

/// Generates `3 * n_per_class` frames.
///
/// Frame `i` has class `i / n_per_class` and channel model
/// `models[i % models.len()]`, so both the class counts and the per-model
/// counts are exact whenever the total divides evenly. Each frame draws
/// from its own seeded stream, so generation order does not matter. Within
/// each class every fifth frame (after grouping by model) goes to the test
/// split.
pub fn make_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.n_per_class;
    let total = 3 * n;
    let frames = (0..total)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, i as u64);
            let mut rng = seeded(seed);
            let label = SignalLabel::from_index(i / n).expect("three classes");
            let model = cfg.models[i % cfg.models.len()];
            let (lo, hi) = cfg.snr_range_db;
            let snr = if hi > lo { rng.random_range(lo..hi) } else { lo };
            let mcs_id = rng.random_range(0..=8u8);
            gen_labeled(label, model, snr, mcs_id, &cfg.frame, &mut rng, seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut split = vec![Split::Train; total];
    let mut order_rng = seeded(derive_seed(cfg.seed, u64::MAX));
    for class in 0..3 {
        let mut members: Vec<(u8, u64, usize)> = (class * n..(class + 1) * n)
            .map(|i| {
                let m = frames[i].channel_model.map_or(NONE, ChannelModelId::index);
                (m, order_rng.random::<u64>(), i)
            })
            .collect();
        members.sort_unstable();
        for (pos, &(_, _, i)) in members.iter().enumerate() {
            if pos % 5 == 4 {
                split[i] = Split::Test;
            }
        }
    }
    Ok(Dataset {
        n_samples: cfg.frame.n_samples,
        frames,
        split,
    })
}

pub fn write_dataset<W: Write>(ds: &Dataset, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&DATASET_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ds.n_samples as u32).to_le_bytes())?;
    w.write_all(&(ds.frames.len() as u32).to_le_bytes())?;
    for (f, s) in ds.frames.iter().zip(&ds.split) {
        w.write_all(&[f.true_label.index() as u8, f.channel_model.map_or(NONE, ChannelModelId::index)])?;
        w.write_all(&f.snr_db.to_le_bytes())?;
        w.write_all(&[f.mcs_id.unwrap_or(NONE), u8::from(*s == Split::Test)])?;
        w.write_all(&f.seed.to_le_bytes())?;
        for v in &f.samples {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()
}

fn malformed(detail: impl Into<String>) -> Error {
    Error::Malformed {
        what: "dataset file",
        detail: detail.into(),
    }
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| malformed(format!("truncated: {e}")))?;
    Ok(b)
}

pub fn read_dataset<R: Read>(mut r: R) -> Result<Dataset> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != DATASET_FORMAT_VERSION {
        return Err(Error::Version {
            what: "dataset file",
            found: version,
            expected: DATASET_FORMAT_VERSION,
        });
    }
    let n_samples = u32::from_le_bytes(take(&mut r)?) as usize;
    let n_frames = u32::from_le_bytes(take(&mut r)?) as usize;
    let mut frames = Vec::with_capacity(n_frames);
    let mut split = Vec::with_capacity(n_frames);
    let mut buf = vec![0u8; 16 * n_samples];
    for _ in 0..n_frames {
        let [label, model] = take::<2, _>(&mut r)?;
        let snr_db = f64::from_le_bytes(take(&mut r)?);
        let [mcs, sp] = take::<2, _>(&mut r)?;
        let seed = u64::from_le_bytes(take(&mut r)?);
        r.read_exact(&mut buf).map_err(|e| malformed(format!("truncated samples: {e}")))?;
        let samples = buf
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        let true_label = SignalLabel::from_index(label as usize).ok_or_else(|| malformed(format!("label {label}")))?;
        let channel_model = match model {
            NONE => None,
            m => Some(ChannelModelId::from_index(m).ok_or_else(|| malformed(format!("model {m}")))?),
        };
        frames.push(IqFrame {
            samples,
            true_label,
            channel_model,
            snr_db,
            mcs_id: (mcs != NONE).then_some(mcs),
            seed,
        });
        split.push(match sp {
            0 => Split::Train,
            1 => Split::Test,
            s => return Err(malformed(format!("split {s}"))),
        });
    }
    Ok(Dataset {
        n_samples,
        frames,
        split,
    })
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DatasetConfig {
        DatasetConfig {
            n_per_class: 30,
            frame: FrameConfig {
                n_samples: 1024,
                payload_bytes: 8,
                ..FrameConfig::default()
            },
            ..DatasetConfig::default()
        }
    }

    #[test]
    fn balanced_classes_models_and_split() {
        let ds = make_dataset(&small()).unwrap();
        assert_eq!(ds.len(), 90);
        for l in SignalLabel::ALL {
            assert_eq!(ds.count(l), 30);
            let test = ds.indices(Split::Test).into_iter().filter(|&i| ds.frames[i].true_label == l).count();
            assert_eq!(test, 6);
        }
        for m in ChannelModelId::ALL {
            assert_eq!(ds.frames.iter().filter(|f| f.channel_model == Some(m)).count(), 15);
        }
        assert_eq!(ds.indices(Split::Test).len(), 18);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = make_dataset(&small()).unwrap();
        let b = make_dataset(&small()).unwrap();
        assert_eq!(a.split, b.split);
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert_eq!(x.samples, y.samples);
        }
    }

    #[test]
    fn file_round_trip() {
        let mut cfg = small();
        cfg.n_per_class = 4;
        let ds = make_dataset(&cfg).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.len(), ds.len());
        for (a, b) in back.frames.iter().zip(&ds.frames) {
            assert_eq!(a.samples, b.samples);
            assert_eq!(a.true_label, b.true_label);
            assert_eq!(a.mcs_id, b.mcs_id);
            assert!(a.snr_db == b.snr_db || (a.snr_db.is_nan() && b.snr_db.is_nan()));
        }
        assert_eq!(back.split, ds.split);
    }
}
