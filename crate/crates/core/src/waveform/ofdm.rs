//! Simplified 802.11-style OFDM burst.
//!
//! A 64-subcarrier grid (312.5 kHz spacing) is synthesized with a 128-point
//! IFFT, i.e. at 40 MHz with two-fold oversampling. Layout of a burst:
//!
//! ```text
//! | STF: 2 x 128 | LTF: GI 64 + 2 x 128 | data: n x (CP + 128) | zeros |
//! ```
//!
//! The short training field only uses every fourth subcarrier, so it is
//! periodic with period 32 samples. Every field is scaled to unit mean
//! power.

use serde::{Deserialize, Serialize};

use crate::dsp::{fft, ifft, C64};
use crate::error::{Error, Result};
use crate::phy::{GuardInterval, Modulation};

pub const SAMPLE_RATE_HZ: f64 = 40e6;
pub const GRID_SIZE: usize = 64;
pub const IFFT_SIZE: usize = 128;
pub const STF_PERIOD: usize = 32;
pub const STF_LEN: usize = 2 * IFFT_SIZE;
pub const LTF_GI: usize = 64;
pub const LTF_LEN: usize = LTF_GI + 2 * IFFT_SIZE;
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN;

pub const PILOT_SUBCARRIERS: [i32; 8] = [-21, -15, -9, -3, 3, 9, 15, 21];
const PILOT_VALUES: [f64; 8] = [1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
const MAX_USED: i32 = 24;

// QPSK indices (0..4 -> (±1 ± j)/sqrt2) for the training fields.
const STF_SEQ: [u8; 12] = [0, 1, 3, 3, 2, 3, 2, 1, 0, 0, 1, 0];
const LTF_SEQ: [u8; 48] = [
    1, 3, 3, 2, 0, 1, 3, 2, 1, 3, 0, 0, 3, 1, 2, 1, 3, 2, 2, 2, 3, 0, 3, 0, 0, 0, 1, 2, 2, 0, 1, 2, 2, 2, 3, 2,
    1, 2, 1, 0, 1, 1, 2, 1, 1, 1, 2, 1,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OfdmGrid {
    pub guard: GuardInterval,
}

impl OfdmGrid {
    pub const FFT_SIZE: usize = GRID_SIZE;
    pub const N_PILOT: usize = 8;
    pub const N_NULL: usize = 16;
    pub const N_DATA: usize = 40;

    pub fn new(guard: GuardInterval) -> Self {
        Self { guard }
    }

    /// Samples per data symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        IFFT_SIZE + self.guard.cp_len()
    }

    /// Data subcarrier indices in ascending order.
    pub fn data_subcarriers() -> Vec<i32> {
        used_subcarriers()
            .filter(|k| !PILOT_SUBCARRIERS.contains(k))
            .collect()
    }

    pub fn null_subcarriers() -> Vec<i32> {
        (-(GRID_SIZE as i32) / 2..GRID_SIZE as i32 / 2)
            .filter(|k| *k == 0 || k.abs() > MAX_USED)
            .collect()
    }

    /// Number of OFDM data symbols needed for `n_bits`.
    pub fn symbols_for(&self, n_bits: usize, modulation: Modulation) -> usize {
        n_bits.div_ceil(Self::N_DATA * modulation.bits_per_symbol())
    }

    pub fn burst_len(&self, n_bits: usize, modulation: Modulation) -> usize {
        PREAMBLE_LEN + self.symbols_for(n_bits, modulation) * self.symbol_len()
    }
}

fn used_subcarriers() -> impl Iterator<Item = i32> {
    (-MAX_USED..=MAX_USED).filter(|k| *k != 0)
}

fn bin(k: i32) -> usize {
    k.rem_euclid(IFFT_SIZE as i32) as usize
}

fn qpsk(idx: u8) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    C64::new(if idx & 1 == 0 { s } else { -s }, if idx & 2 == 0 { s } else { -s })
}

fn stf_subcarriers() -> impl Iterator<Item = i32> {
    used_subcarriers().filter(|k| k % 4 == 0)
}

/// Frequency-domain long training values on the 128-bin IFFT grid.
pub fn ltf_spectrum() -> Vec<C64> {
    let mut x = vec![C64::new(0.0, 0.0); IFFT_SIZE];
    for (k, &s) in used_subcarriers().zip(LTF_SEQ.iter()) {
        x[bin(k)] = qpsk(s);
    }
    x
}

fn synth(mut spec: Vec<C64>, occupied: usize) -> Vec<C64> {
    ifft(&mut spec);
    let scale = IFFT_SIZE as f64 / (occupied as f64).sqrt();
    spec.iter_mut().for_each(|v| *v *= scale);
    spec
}

pub fn short_symbol() -> Vec<C64> {
    let mut x = vec![C64::new(0.0, 0.0); IFFT_SIZE];
    for (k, &s) in stf_subcarriers().zip(STF_SEQ.iter()) {
        x[bin(k)] = qpsk(s);
    }
    synth(x, STF_SEQ.len())
}

pub fn long_symbol() -> Vec<C64> {
    synth(ltf_spectrum(), LTF_SEQ.len())
}

/// The fixed 576-sample preamble.
pub fn preamble() -> Vec<C64> {
    let s = short_symbol();
    let l = long_symbol();
    let mut out = Vec::with_capacity(PREAMBLE_LEN);
    out.extend_from_slice(&s);
    out.extend_from_slice(&s);
    out.extend_from_slice(&l[IFFT_SIZE - LTF_GI..]);
    out.extend_from_slice(&l);
    out.extend_from_slice(&l);
    out
}

/// Offset of the first long symbol body within the preamble.
pub const LTF_BODY_OFFSET: usize = STF_LEN + LTF_GI;

/// Preamble followed by data symbols carrying `bits` (zero-padded to a
/// whole symbol).
pub fn modulate(bits: &[u8], modulation: Modulation, grid: OfdmGrid) -> Vec<C64> {
    let data = OfdmGrid::data_subcarriers();
    let bps = modulation.bits_per_symbol();
    let per_symbol = OfdmGrid::N_DATA * bps;
    let n_sym = grid.symbols_for(bits.len(), modulation);
    let cp = grid.guard.cp_len();
    let mut out = preamble();
    let mut chunk = vec![0u8; bps];
    for s in 0..n_sym {
        let mut spec = vec![C64::new(0.0, 0.0); IFFT_SIZE];
        for (d, &k) in data.iter().enumerate() {
            for (b, slot) in chunk.iter_mut().enumerate() {
                *slot = bits.get(s * per_symbol + d * bps + b).copied().unwrap_or(0);
            }
            spec[bin(k)] = modulation.map(&chunk);
        }
        for (&k, &p) in PILOT_SUBCARRIERS.iter().zip(PILOT_VALUES.iter()) {
            spec[bin(k)] = C64::new(p, 0.0);
        }
        let body = synth(spec, OfdmGrid::N_DATA + OfdmGrid::N_PILOT);
        out.extend_from_slice(&body[IFFT_SIZE - cp..]);
        out.extend_from_slice(&body);
    }
    out
}

/// Per-bin channel estimate from the two long training symbols of a burst
/// starting at sample 0.
pub fn estimate_channel(samples: &[C64]) -> Result<Vec<C64>> {
    if samples.len() < PREAMBLE_LEN {
        return Err(Error::dim(PREAMBLE_LEN, samples.len(), "burst shorter than preamble"));
    }
    let reference = {
        let mut r = long_symbol();
        fft(&mut r);
        r
    };
    let mut avg = vec![C64::new(0.0, 0.0); IFFT_SIZE];
    for rep in 0..2 {
        let start = LTF_BODY_OFFSET + rep * IFFT_SIZE;
        let mut y = samples[start..start + IFFT_SIZE].to_vec();
        fft(&mut y);
        for (a, v) in avg.iter_mut().zip(&y) {
            *a += v * 0.5;
        }
    }
    Ok(avg
        .iter()
        .zip(&reference)
        .map(|(y, r)| if r.norm_sqr() > 0.0 { y / r } else { C64::new(0.0, 0.0) })
        .collect())
}

/// Equalized data-subcarrier symbols of every OFDM data symbol, for a burst
/// aligned at sample 0.
pub fn equalized_symbols(samples: &[C64], n_symbols: usize, grid: OfdmGrid) -> Result<Vec<Vec<C64>>> {
    let h = estimate_channel(samples)?;
    let data = OfdmGrid::data_subcarriers();
    let cp = grid.guard.cp_len();
    let need = PREAMBLE_LEN + n_symbols * grid.symbol_len();
    if samples.len() < need {
        return Err(Error::dim(need, samples.len(), "burst shorter than data field"));
    }
    // undo the power scaling applied to data symbols by `modulate`
    let data_gain = IFFT_SIZE as f64 / ((OfdmGrid::N_DATA + OfdmGrid::N_PILOT) as f64).sqrt();
    (0..n_symbols)
        .map(|s| {
            let start = PREAMBLE_LEN + s * grid.symbol_len() + cp;
            let mut y = samples[start..start + IFFT_SIZE].to_vec();
            fft(&mut y);
            Ok(data
                .iter()
                .map(|&k| {
                    let hk = h[bin(k)] * data_gain;
                    if hk.norm_sqr() > 0.0 {
                        y[bin(k)] / hk
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect())
        })
        .collect()
}

/// Hard-decision demodulation of the first `n_bits` payload bits.
pub fn demodulate(samples: &[C64], n_bits: usize, modulation: Modulation, grid: OfdmGrid) -> Result<Vec<u8>> {
    let n_sym = grid.symbols_for(n_bits, modulation);
    let symbols = equalized_symbols(samples, n_sym, grid)?;
    let mut bits = Vec::with_capacity(n_sym * OfdmGrid::N_DATA * modulation.bits_per_symbol());
    for sym in &symbols {
        for &z in sym {
            modulation.demap(z, &mut bits);
        }
    }
    bits.truncate(n_bits);
    Ok(bits)
}
