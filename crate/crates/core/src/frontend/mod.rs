//! Receiver front end: 8-bit-per-rail ADC, band-pass filter, and the
//! denoising autoencoder that turns a sensed frame into a latent vector.

mod dae;
mod pca;

pub use dae::{
    relative_mse, sideband_suppression_db, train_dae, DaeConfig, DaeModel, EpochLoss, write_loss_history,
};
pub use pca::{pca_fit, Pca};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{design_bandpass, filter_same, C64};
use crate::error::{Error, Result};
use crate::waveform::ofdm::SAMPLE_RATE_HZ;
use crate::waveform::IqFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontEndConfig {
    /// Total ADC bits, split evenly between I and Q.
    pub adc_bits: u32,
    /// Input amplitude mapped to the top code.
    pub adc_full_scale: f64,
    /// Pass band in cycles/sample.
    pub band_limits: (f64, f64),
    pub filter_taps: usize,
    pub sample_rate_hz: f64,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        Self {
            adc_bits: 16,
            adc_full_scale: 2.0,
            // 20 MHz instantaneous bandwidth at 40 MHz sampling
            band_limits: (-0.25, 0.25),
            filter_taps: 63,
            sample_rate_hz: SAMPLE_RATE_HZ,
        }
    }
}

impl FrontEndConfig {
    pub fn validate(&self) -> Result<()> {
        if self.adc_bits < 2 || self.adc_bits % 2 != 0 || self.adc_bits > 32 {
            return Err(Error::InvalidConfig(format!("adc_bits {} must be even in 2..=32", self.adc_bits)));
        }
        let (lo, hi) = self.band_limits;
        if !(-0.5..=0.5).contains(&lo) || !(-0.5..=0.5).contains(&hi) || lo >= hi {
            return Err(Error::InvalidConfig(format!("band limits ({lo}, {hi}) outside Nyquist")));
        }
        if self.adc_full_scale <= 0.0 || self.filter_taps == 0 {
            return Err(Error::InvalidConfig("full scale and filter taps must be positive".into()));
        }
        Ok(())
    }

    fn levels(&self) -> u64 {
        1u64 << (self.adc_bits / 2)
    }
}

/// ADC code of one rail: clip to full scale, then round to the nearest of
/// `levels` uniform steps spanning `[-1, 1]`.
pub fn quantize_code(v: f64, levels: u64) -> u64 {
    let top = (levels - 1) as f64;
    let x = v.clamp(-1.0, 1.0);
    ((x + 1.0) / 2.0 * top + 0.5).floor().min(top) as u64
}

pub fn code_value(code: u64, levels: u64) -> f64 {
    -1.0 + 2.0 * code as f64 / (levels - 1) as f64
}

/// Quantizes both rails; output is in full-scale units.
pub fn digitize(samples: &[C64], cfg: &FrontEndConfig) -> Vec<C64> {
    let levels = cfg.levels();
    let q = |v: f64| code_value(quantize_code(v / cfg.adc_full_scale, levels), levels);
    samples.iter().map(|s| C64::new(q(s.re), q(s.im))).collect()
}

pub fn bandpass(samples: &[C64], cfg: &FrontEndConfig) -> Vec<C64> {
    let taps = design_bandpass(cfg.filter_taps, cfg.band_limits.0, cfg.band_limits.1);
    filter_same(samples, &taps)
}

/// Digitize, filter, and flatten to interleaved `[I0, Q0, I1, Q1, ...]`.
pub fn preprocess(samples: &[C64], cfg: &FrontEndConfig) -> Vec<f64> {
    bandpass(&digitize(samples, cfg), cfg)
        .iter()
        .flat_map(|v| [v.re, v.im])
        .collect()
}

/// Preprocesses many frames into the rows of a matrix.
pub fn preprocess_frames(frames: &[&IqFrame], cfg: &FrontEndConfig) -> Result<Array2<f64>> {
    let width = frames.first().ok_or(Error::Empty("frame list"))?.len() * 2;
    let rows: Vec<Vec<f64>> = frames.par_iter().map(|f| preprocess(&f.samples, cfg)).collect();
    let mut out = Array2::zeros((frames.len(), width));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::dim(width, r.len(), "frame length"));
        }
        out.row_mut(i).assign(&ndarray::ArrayView1::from(r));
    }
    Ok(out)
}
