//! Labeled baseband frame synthesis: idle noise, OFDM WiFi bursts and
//! Gaussian jamming, plus fading channels and AWGN.

mod channel;
mod dataset;
pub mod ofdm;

pub use channel::{apply_channel, draw_impulse_response, ChannelModel, ChannelModelId, CHANNEL_MODELS};
pub use dataset::{
    load_dataset, make_dataset, read_dataset, save_dataset, write_dataset, Dataset, DatasetConfig, Split,
    DATASET_FORMAT_VERSION,
};
pub use ofdm::OfdmGrid;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{from_db, ifft, mean_power, upsample_fft, C64};
use crate::error::{Error, Result};
use crate::phy::{mcs, GuardInterval};

/// Desk-scale frame length in complex samples.
pub const DEFAULT_FRAME_LEN: usize = 2048;
pub const DEFAULT_PAYLOAD_BYTES: usize = 36;
pub const NOISE_FLOOR_DB: (f64, f64) = (-100.0, -80.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignalLabel {
    I,
    W,
    J,
}

impl SignalLabel {
    pub const ALL: [SignalLabel; 3] = [SignalLabel::I, SignalLabel::W, SignalLabel::J];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for SignalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for SignalLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(Self::I),
            "W" | "w" => Ok(Self::W),
            "J" | "j" => Ok(Self::J),
            other => Err(Error::InvalidConfig(format!("unknown signal label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    pub samples: Vec<C64>,
    pub true_label: SignalLabel,
    pub channel_model: Option<ChannelModelId>,
    /// NaN when no noise was added.
    pub snr_db: f64,
    pub mcs_id: Option<u8>,
    pub seed: u64,
}

impl IqFrame {
    fn new(samples: Vec<C64>, true_label: SignalLabel, seed: u64) -> Self {
        Self {
            samples,
            true_label,
            channel_model: None,
            snr_db: f64::NAN,
            mcs_id: None,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn with_channel<R: Rng + ?Sized>(mut self, model: ChannelModelId, rng: &mut R) -> Self {
        self.samples = apply_channel(&self.samples, &model.params(), rng);
        self.channel_model = Some(model);
        self
    }

    pub fn with_awgn<R: Rng + ?Sized>(mut self, snr_db: f64, rng: &mut R) -> Self {
        add_awgn(&mut self.samples, snr_db, rng);
        self.snr_db = snr_db;
        self
    }
}

fn check_len(n_samples: usize) -> Result<()> {
    if n_samples < OfdmGrid::FFT_SIZE || n_samples % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "frame length {n_samples} must be even and at least {}",
            OfdmGrid::FFT_SIZE
        )));
    }
    Ok(())
}

/// Idle-channel frame: every frequency bin gets a magnitude uniform in
/// `[-100, -80]` dB and a uniform phase, then the spectrum is inverse
/// transformed.
pub fn gen_noise<R: Rng + ?Sized>(n_samples: usize, rng: &mut R, seed: u64) -> Result<IqFrame> {
    check_len(n_samples)?;
    let (lo, hi) = NOISE_FLOOR_DB;
    let mut spec: Vec<C64> = (0..n_samples)
        .map(|_| {
            let mag_db = rng.random_range(lo..=hi);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar(10f64.powf(mag_db / 20.0), phase)
        })
        .collect();
    ifft(&mut spec);
    Ok(IqFrame::new(spec, SignalLabel::I, seed))
}

/// Uniformly random payload bits.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// OFDM burst carrying `bits` at `mcs_id`, zero padded to `n_samples`.
pub fn wifi_samples(bits: &[u8], mcs_id: u8, grid: OfdmGrid, n_samples: usize) -> Result<Vec<C64>> {
    let entry = mcs(mcs_id).ok_or_else(|| Error::InvalidConfig(format!("mcs_id {mcs_id} outside 0..=8")))?;
    let needed = grid.burst_len(bits.len(), entry.modulation);
    if needed > n_samples {
        return Err(Error::InvalidConfig(format!(
            "payload of {} bits needs {needed} samples at MCS {mcs_id}, frame holds {n_samples}",
            bits.len()
        )));
    }
    let mut x = ofdm::modulate(bits, entry.modulation, grid);
    x.resize(n_samples, C64::new(0.0, 0.0));
    Ok(x)
}

pub fn gen_wifi<R: Rng + ?Sized>(
    mcs_id: u8,
    payload_bytes: usize,
    grid: OfdmGrid,
    n_samples: usize,
    rng: &mut R,
    seed: u64,
) -> Result<IqFrame> {
    check_len(n_samples)?;
    let bits = random_bits(payload_bytes * 8, rng);
    let samples = wifi_samples(&bits, mcs_id, grid, n_samples)?;
    let mut frame = IqFrame::new(samples, SignalLabel::W, seed);
    frame.mcs_id = Some(mcs_id);
    Ok(frame)
}

/// Unit-variance complex Gaussian drawn at 20 MHz and interpolated to the
/// 40 MHz simulation rate, so it occupies the WiFi channel bandwidth.
/// `jsr_db` scales its power relative to a unit-power WiFi burst.
pub fn gen_jammer<R: Rng + ?Sized>(n_samples: usize, jsr_db: f64, rng: &mut R, seed: u64) -> Result<IqFrame> {
    check_len(n_samples)?;
    let base: Vec<C64> = (0..n_samples / 2)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    let gain = from_db(jsr_db).sqrt();
    let samples = upsample_fft(&base, 2).into_iter().map(|v| v * gain).collect();
    Ok(IqFrame::new(samples, SignalLabel::J, seed))
}

/// Adds white complex Gaussian noise scaled so that the frame's measured
/// signal-to-noise ratio is exactly `snr_db`.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [C64], snr_db: f64, rng: &mut R) {
    let signal = mean_power(samples);
    let noise: Vec<C64> = (0..samples.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let drawn = mean_power(&noise);
    if drawn == 0.0 || signal == 0.0 {
        return;
    }
    let scale = (signal / from_db(snr_db) / drawn).sqrt();
    for (s, n) in samples.iter_mut().zip(noise) {
        *s += n * scale;
    }
}

/// Frame-level generation settings shared by the dataset builder and the
/// simulator's sensing bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameConfig {
    pub n_samples: usize,
    pub payload_bytes: usize,
    pub guard: GuardInterval,
    pub jsr_db: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_FRAME_LEN,
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            guard: GuardInterval::Long800,
            jsr_db: 0.0,
        }
    }
}

/// One labeled frame as the receiver would sense it: W and J pass through
/// a fading channel and AWGN; I is the idle floor only.
pub fn gen_labeled<R: Rng + ?Sized>(
    label: SignalLabel,
    model: ChannelModelId,
    snr_db: f64,
    mcs_id: u8,
    cfg: &FrameConfig,
    rng: &mut R,
    seed: u64,
) -> Result<IqFrame> {
    match label {
        SignalLabel::I => {
            let mut f = gen_noise(cfg.n_samples, rng, seed)?;
            f.channel_model = Some(model);
            Ok(f)
        }
        SignalLabel::W => Ok(gen_wifi(mcs_id, cfg.payload_bytes, OfdmGrid::new(cfg.guard), cfg.n_samples, rng, seed)?
            .with_channel(model, rng)
            .with_awgn(snr_db, rng)),
        SignalLabel::J => Ok(gen_jammer(cfg.n_samples, cfg.jsr_db, rng, seed)?
            .with_channel(model, rng)
            .with_awgn(snr_db, rng)),
    }
}
