use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::waveform::ofdm::{long_symbol, IFFT_SIZE, LTF_BODY_OFFSET, LTF_GI, SAMPLE_RATE_HZ, STF_LEN, STF_PERIOD};

/// Number of signature features.
pub const SIGNATURE_DIM: usize = 5;

/// Per-burst RF fingerprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub coarse_cfo_hz: f64,
    pub fine_cfo_hz: f64,
    /// Sub-sample arrival time of the first long training symbol relative
    /// to its nominal position.
    pub timing_offset: f64,
    pub psi_db: f64,
    pub phi_deg: f64,
}

impl Signature {
    pub fn to_array(&self) -> [f64; SIGNATURE_DIM] {
        [self.coarse_cfo_hz, self.fine_cfo_hz, self.timing_offset, self.psi_db, self.phi_deg]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != SIGNATURE_DIM {
            return Err(Error::dim(SIGNATURE_DIM, v.len(), "signature"));
        }
        Ok(Self {
            coarse_cfo_hz: v[0],
            fine_cfo_hz: v[1],
            timing_offset: v[2],
            psi_db: v[3],
            phi_deg: v[4],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignatureConfig {
    pub sample_rate_hz: f64,
    /// Minimum normalized correlation with the long training symbol.
    pub detection_floor: f64,
    /// Samples after the training fields used for the IQ moments.
    pub data_len: usize,
    /// OFDM symbol length including the cyclic prefix.
    pub symbol_len: usize,
    /// Trailing idle samples used to estimate the noise floor; 0 disables
    /// the noise correction.
    pub noise_tail: usize,
    /// Search window for the long training symbol, in samples from the
    /// start of the capture.
    pub search_len: usize,
    /// Lag of the short-symbol autocorrelation; a multiple of the
    /// short-symbol period. Longer lags are less noisy but wrap at
    /// `fs / (2 lag)`.
    pub coarse_lag: usize,
}

impl Default for SignatureConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: SAMPLE_RATE_HZ,
            detection_floor: 0.5,
            data_len: 6400,
            symbol_len: 160,
            noise_tail: 256,
            search_len: 640,
            coarse_lag: 2 * STF_PERIOD,
        }
    }
}

fn lag_product(x: &[C64], start: usize, len: usize, lag: usize) -> C64 {
    (start..start + len).map(|n| x[n + lag] * x[n].conj()).sum()
}

fn derotate(x: &[C64], cfo_hz: f64, fs: f64) -> Vec<C64> {
    let w = -2.0 * PI * cfo_hz / fs;
    x.iter()
        .enumerate()
        .map(|(n, &v)| v * C64::from_polar(1.0, w * n as f64))
        .collect()
}

/// Normalized correlation of both long-symbol repetitions starting at `n`.
fn ltf_metric(y: &[C64], reference: &[C64], ref_norm: f64, n: usize) -> f64 {
    let one = |s: usize| {
        let win = &y[s..s + IFFT_SIZE];
        let c: C64 = win.iter().zip(reference).map(|(a, b)| a * b.conj()).sum();
        let e: f64 = win.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if e == 0.0 {
            0.0
        } else {
            c.norm() / (e * ref_norm)
        }
    };
    0.5 * (one(n) + one(n + IFFT_SIZE))
}

#[derive(Clone, Copy)]
struct Sync {
    peak: f64,
    coarse: f64,
    fine: f64,
    ltf_at: usize,
    timing_offset: f64,
}

/// Coarse CFO from the short symbols, timing from the long-symbol
/// correlation, and fine CFO from the two long-symbol repetitions.
fn synchronize(samples: &[C64], cfg: &SignatureConfig) -> Result<Sync> {
    let fs = cfg.sample_rate_hz;
    let lag = cfg.coarse_lag;
    let p = lag_product(samples, 0, STF_LEN - lag, lag);
    let coarse = p.arg() * fs / (2.0 * PI * lag as f64);

    let y = derotate(samples, coarse, fs);
    let reference = long_symbol();
    let ref_norm = reference.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let last = (y.len() - 2 * IFFT_SIZE).min(cfg.search_len);
    let metric: Vec<f64> = (0..=last).map(|n| ltf_metric(&y, &reference, ref_norm, n)).collect();
    let (peak_at, &peak) = metric
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::Empty("preamble search window"))?;
    let frac = if peak_at > 0 && peak_at < last {
        let (a, b, c) = (metric[peak_at - 1], metric[peak_at], metric[peak_at + 1]);
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            (0.5 * (a - c) / den).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    // the guard interval repeats the tail of the long symbol, so the lag
    // product can start inside it
    let gi_start = peak_at.saturating_sub(LTF_GI);
    let residual =
        lag_product(&y, gi_start, peak_at - gi_start + IFFT_SIZE, IFFT_SIZE).arg() * fs / (2.0 * PI * IFFT_SIZE as f64);
    Ok(Sync {
        peak,
        coarse,
        fine: coarse + residual,
        ltf_at: peak_at,
        timing_offset: peak_at as f64 + frac - LTF_BODY_OFFSET as f64,
    })
}

/// Removes the part of `region` that repeats every `period` samples up to
/// a per-period rotation by `z` or `1/z`. The pilot tones are such a
/// component: constant in every symbol, turned by the CFO, with the IQ
/// image turning the other way. Returns the residual over whole periods
/// and the fraction of white-noise power it keeps.
fn remove_periodic(region: &[C64], period: usize, z: C64) -> (Vec<C64>, f64) {
    let n = region.len() / period;
    if n < 3 {
        return (region.to_vec(), 1.0);
    }
    let u: Vec<C64> = (0..n).map(|i| z.powu(i as u32)).collect();
    let v: Vec<C64> = u.iter().map(|w| w.conj()).collect();
    let uv: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
    let nf = n as f64;
    // Gram determinant of the two bases, relative to n^2
    let gram = 1.0 - uv.norm_sqr() / (nf * nf);
    let mut out = vec![C64::new(0.0, 0.0); n * period];
    for m in 0..period {
        let y: Vec<C64> = (0..n).map(|i| region[m + i * period]).collect();
        let uy: C64 = u.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let fit: Vec<C64> = if gram < 1e-3 {
            u.iter().map(|w| w * uy / nf).collect()
        } else {
            let vy: C64 = v.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
            let det = nf * nf - uv.norm_sqr();
            let a = (nf * uy - uv * vy) / det;
            let b = (nf * vy - uv.conj() * uy) / det;
            u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect()
        };
        for i in 0..n {
            out[m + i * period] = y[i] - fit[i];
        }
    }
    let rank = if gram < 1e-3 { 1.0 } else { 2.0 };
    (out, (nf - rank) / nf)
}

/// Closed-form amplitude (dB) and phase (degrees) imbalance from the rail
/// second moments of the data field with the pilot tones removed. For a
/// circular transmit signal `a = E[I^2]`, `b = E[Q^2]` and `r = E[IQ]`
/// satisfy `sin(phi) = -2r / (a + b)` and
/// `(a - b) / ((a + b) cos(phi)) = tanh(psi ln(10) / 20)`.
fn iq_imbalance(samples: &[C64], data_start: usize, cfo_hz: f64, cfg: &SignatureConfig) -> Result<(f64, f64)> {
    let data_end = (data_start + cfg.data_len).min(samples.len() - cfg.noise_tail);
    if data_end <= data_start {
        return Err(Error::Empty("data field"));
    }
    let z = C64::from_polar(1.0, 2.0 * PI * cfo_hz * cfg.symbol_len as f64 / cfg.sample_rate_hz);
    let (region, kept) = remove_periodic(&samples[data_start..data_end], cfg.symbol_len.max(1), z);
    let m = region.len() as f64;
    let (mut a, mut b, mut r) = (0.0, 0.0, 0.0);
    for v in &region {
        a += v.re * v.re;
        b += v.im * v.im;
        r += v.re * v.im;
    }
    a /= m;
    b /= m;
    r /= m;
    if cfg.noise_tail > 0 {
        let tail = &samples[samples.len() - cfg.noise_tail..];
        let half_noise = kept * tail.iter().map(|v| v.norm_sqr()).sum::<f64>() / (2.0 * tail.len() as f64);
        a = (a - half_noise).max(f64::MIN_POSITIVE);
        b = (b - half_noise).max(f64::MIN_POSITIVE);
    }
    let sin_phi = (-2.0 * r / (a + b)).clamp(-1.0, 1.0);
    let cos_phi = (1.0 - sin_phi * sin_phi).sqrt().max(1e-9);
    let ratio = ((a - b) / ((a + b) * cos_phi)).clamp(-0.999_999, 0.999_999);
    Ok((20.0 * ratio.atanh() / LN_10, sin_phi.asin() * 180.0 / PI))
}

/// Undoes an IQ imbalance by solving the 2x2 real mixing per sample.
/// Returns `None` when the mixing is close to singular (phase imbalance
/// near 90 degrees), where inversion would only amplify noise.
fn compensate_iq(samples: &[C64], psi_db: f64, phi_deg: f64) -> Option<Vec<C64>> {
    let half_phi = 0.5 * phi_deg * PI / 180.0;
    let gi = C64::from_polar(10f64.powf(0.5 * psi_db / 20.0), -half_phi);
    let gq = C64::from_polar(10f64.powf(-0.5 * psi_db / 20.0), PI / 2.0 + half_phi);
    // det = kI kQ cos(phi)
    let det = gi.re * gq.im - gq.re * gi.im;
    if !(det.abs() > MIN_MIXING_DET) {
        return None;
    }
    Some(
        samples
            .iter()
            .map(|v| {
                let u = (gq.im * v.re - gq.re * v.im) / det;
                let w = (gi.re * v.im - gi.im * v.re) / det;
                C64::new(u, w)
            })
            .collect(),
    )
}

const MIN_MIXING_DET: f64 = 0.05;

/// Extracts the fingerprint of a burst that starts at the beginning of
/// `samples`. The IQ imbalance is estimated first and removed, since its
/// image would otherwise bias the frequency estimates toward zero.
///
/// Second moments cannot tell `(psi, phi)` from `(-psi, 180 - phi)`: the
/// two differ by swapping the rails, which conjugates the signal. Both
/// branches are compensated and the one that correlates better with the
/// known long training symbol is kept. The raw capture is used only when
/// neither branch can be inverted.
pub fn extract_signature(samples: &[C64], cfg: &SignatureConfig) -> Result<Signature> {
    if cfg.coarse_lag == 0 || cfg.coarse_lag % STF_PERIOD != 0 || cfg.coarse_lag >= STF_LEN {
        return Err(Error::InvalidConfig(format!(
            "coarse lag {} must be a multiple of {STF_PERIOD} below {STF_LEN}",
            cfg.coarse_lag
        )));
    }
    let need = LTF_BODY_OFFSET + 2 * IFFT_SIZE;
    if samples.len() < need + cfg.noise_tail {
        return Err(Error::dim(need + cfg.noise_tail, samples.len(), "capture too short for a preamble"));
    }
    let first = synchronize(samples, cfg)?;
    // the pilot fit needs the CFO, which the IQ image biases; two rounds
    // are enough for the image to stop mattering
    let (mut cfo, mut ltf_at) = (first.fine, first.ltf_at);
    let mut chosen = None;
    for _ in 0..2 {
        let (psi_db, phi_deg) = iq_imbalance(samples, ltf_at + 2 * IFFT_SIZE, cfo, cfg)?;
        let mirrored = (-psi_db, 180f64.copysign(phi_deg) - phi_deg);
        let mut best: Option<(Sync, (f64, f64))> = None;
        for (psi, phi) in [(psi_db, phi_deg), mirrored] {
            let Some(y) = compensate_iq(samples, psi, phi) else { continue };
            let sync = synchronize(&y, cfg)?;
            if best.as_ref().is_none_or(|(b, _)| sync.peak > b.peak) {
                best = Some((sync, (psi, phi)));
            }
        }
        let round = best.unwrap_or((
            Sync {
                peak: first.peak,
                coarse: first.coarse,
                fine: first.fine,
                ltf_at: first.ltf_at,
                timing_offset: first.timing_offset,
            },
            (psi_db, phi_deg),
        ));
        cfo = round.0.fine;
        ltf_at = round.0.ltf_at;
        chosen = Some(round);
    }
    let (sync, (psi_db, phi_deg)) = chosen.expect("at least one round");
    if !(sync.peak >= cfg.detection_floor) {
        return Err(Error::PreambleNotDetected {
            peak: sync.peak,
            floor: cfg.detection_floor,
        });
    }
    let sig = Signature {
        coarse_cfo_hz: sync.coarse,
        fine_cfo_hz: sync.fine,
        timing_offset: sync.timing_offset,
        psi_db,
        phi_deg,
    };
    if !sig.is_finite() {
        return Err(Error::NonFinite("signature".into()));
    }
    Ok(sig)
}
