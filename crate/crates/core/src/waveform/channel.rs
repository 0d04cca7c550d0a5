//! Tapped-delay-line fading channels for the six 802.11 delay models.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::ofdm::SAMPLE_RATE_HZ;
use crate::dsp::{convolve_truncated, from_db, C64};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelModelId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ChannelModelId {
    pub const ALL: [ChannelModelId; 6] = [
        ChannelModelId::A,
        ChannelModelId::B,
        ChannelModelId::C,
        ChannelModelId::D,
        ChannelModelId::E,
        ChannelModelId::F,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn params(self) -> ChannelModel {
        CHANNEL_MODELS[self as usize]
    }
}

impl fmt::Display for ChannelModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for ChannelModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Self::A),
            "B" => Ok(Self::B),
            "C" => Ok(Self::C),
            "D" => Ok(Self::D),
            "E" => Ok(Self::E),
            "F" => Ok(Self::F),
            other => Err(Error::InvalidConfig(format!("unknown channel model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelModel {
    pub id: ChannelModelId,
    pub breakpoint_m: f64,
    pub rms_delay_ns: f64,
    pub max_delay_ns: f64,
    pub rician_k_db: f64,
    pub n_taps: usize,
    pub n_clusters: usize,
}

const fn model(
    id: ChannelModelId,
    breakpoint_m: f64,
    rms_delay_ns: f64,
    max_delay_ns: f64,
    rician_k_db: f64,
    n_taps: usize,
    n_clusters: usize,
) -> ChannelModel {
    ChannelModel {
        id,
        breakpoint_m,
        rms_delay_ns,
        max_delay_ns,
        rician_k_db,
        n_taps,
        n_clusters,
    }
}

pub const CHANNEL_MODELS: [ChannelModel; 6] = [
    model(ChannelModelId::A, 5.0, 0.0, 0.0, 0.0, 1, 1),
    model(ChannelModelId::B, 5.0, 15.0, 80.0, 0.0, 9, 2),
    model(ChannelModelId::C, 5.0, 30.0, 200.0, 0.0, 14, 2),
    model(ChannelModelId::D, 10.0, 50.0, 390.0, 3.0, 18, 3),
    model(ChannelModelId::E, 20.0, 100.0, 730.0, 6.0, 18, 4),
    model(ChannelModelId::F, 30.0, 150.0, 1050.0, 6.0, 18, 6),
];

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One random realization of the model as a sample-spaced impulse response.
///
/// Tap delays are uniform on `(0, max_delay]` after a first tap at zero and
/// are rounded to the 25 ns sample grid. Tap powers follow an exponential
/// profile with the model's RMS delay spread, normalized to unit sum. The
/// first tap is Rician with the model's K factor, the others Rayleigh.
pub fn draw_impulse_response<R: Rng + ?Sized>(model: &ChannelModel, rng: &mut R) -> Vec<C64> {
    let mut delays = vec![0.0];
    if model.n_taps > 1 {
        let u = Uniform::new_inclusive(0.0, model.max_delay_ns).expect("valid delay range");
        delays.extend((1..model.n_taps).map(|_| u.sample(rng)));
    }
    let mut powers: Vec<f64> = delays
        .iter()
        .map(|&d| {
            if model.rms_delay_ns > 0.0 {
                (-d / model.rms_delay_ns).exp()
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = powers.iter().sum();
    powers.iter_mut().for_each(|p| *p /= total);

    let k = from_db(model.rician_k_db);
    let los_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let sample_ns = 1e9 / SAMPLE_RATE_HZ;
    let span = (model.max_delay_ns / sample_ns).round() as usize + 1;
    let mut h = vec![C64::new(0.0, 0.0); span];
    for (i, (&d, &p)) in delays.iter().zip(&powers).enumerate() {
        let fading = if i == 0 {
            C64::from_polar((k / (k + 1.0)).sqrt(), los_phase) + complex_normal(rng) * (1.0 / (k + 1.0)).sqrt()
        } else {
            complex_normal(rng)
        };
        h[(d / sample_ns).round() as usize] += fading * p.sqrt();
    }
    h
}

/// Convolves with a fresh channel realization, truncated to the input length.
pub fn apply_channel<R: Rng + ?Sized>(samples: &[C64], model: &ChannelModel, rng: &mut R) -> Vec<C64> {
    let h = draw_impulse_response(model, rng);
    convolve_truncated(samples, &h)
}
