//! Small signal-processing helpers shared by the waveform, front-end and
//! fingerprinting code.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT in place.
pub fn fft(buf: &mut [C64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// Inverse DFT in place, scaled by `1/N` so that `ifft(fft(x)) == x`.
pub fn ifft(buf: &mut [C64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
}

pub fn mean_power(x: &[C64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Signed normalized frequency (cycles/sample) of FFT bin `k` out of `n`.
pub fn bin_freq(k: usize, n: usize) -> f64 {
    let k = k as f64;
    let n = n as f64;
    if k < n / 2.0 {
        k / n
    } else {
        k / n - 1.0
    }
}

/// Complex band-pass FIR for the band `[lo, hi]` in cycles/sample.
///
/// A Blackman-windowed sinc low-pass of half-width `(hi - lo) / 2`, shifted
/// to the band centre. `num_taps` should be odd for an integer group delay.
pub fn design_bandpass(num_taps: usize, lo: f64, hi: f64) -> Vec<C64> {
    assert!(num_taps >= 1 && lo < hi);
    let cutoff = 0.5 * (hi - lo);
    let centre = 0.5 * (hi + lo);
    let m = (num_taps - 1) as f64;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|i| {
            let t = i as f64 - m / 2.0;
            let sinc = if t == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * t).sin() / (PI * t)
            };
            let w = if num_taps == 1 {
                1.0
            } else {
                let a = 2.0 * PI * i as f64 / m;
                0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos()
            };
            sinc * w
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= dc);
    taps.iter()
        .enumerate()
        .map(|(i, &h)| h * C64::from_polar(1.0, 2.0 * PI * centre * (i as f64 - m / 2.0)))
        .collect()
}

/// Linear convolution trimmed to the input length and aligned for the
/// filter's group delay (`(len - 1) / 2`).
pub fn filter_same(x: &[C64], taps: &[C64]) -> Vec<C64> {
    let delay = (taps.len().saturating_sub(1)) / 2;
    (0..x.len())
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            let out = n + delay;
            for (k, &h) in taps.iter().enumerate() {
                if out >= k && out - k < x.len() {
                    acc += h * x[out - k];
                }
            }
            acc
        })
        .collect()
}

/// Causal convolution truncated to the input length.
pub fn convolve_truncated(x: &[C64], h: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for (d, &g) in h.iter().enumerate() {
        if g == C64::new(0.0, 0.0) {
            continue;
        }
        for n in d..x.len() {
            y[n] += g * x[n - d];
        }
    }
    y
}

/// Resamples by the rational factor `p / q` with linear interpolation,
/// keeping the output length equal to the input length. Output sample `n`
/// reads the input at time `n q / p`; reads past the end are zero.
pub fn resample_linear(x: &[C64], p: u64, q: u64) -> Vec<C64> {
    assert!(p >= 1 && q >= 1);
    if p == q {
        return x.to_vec();
    }
    let step = q as f64 / p as f64;
    (0..x.len())
        .map(|n| {
            let t = n as f64 * step;
            let i = t.floor() as usize;
            let frac = t - i as f64;
            let a = x.get(i).copied().unwrap_or_default();
            let b = x.get(i + 1).copied().unwrap_or_default();
            a * (1.0 - frac) + b * frac
        })
        .collect()
}

/// Band-limited upsampling by an integer factor via spectral zero padding.
/// Preserves the mean power of the input.
pub fn upsample_fft(x: &[C64], factor: usize) -> Vec<C64> {
    let n = x.len();
    let mut spec = x.to_vec();
    fft(&mut spec);
    let m = n * factor;
    let mut padded = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    padded[..half].copy_from_slice(&spec[..half]);
    padded[m - (n - half)..].copy_from_slice(&spec[half..]);
    ifft(&mut padded);
    let gain = factor as f64;
    padded.iter_mut().for_each(|v| *v *= gain);
    padded
}

/// Fraction of spectral power of `x` whose normalized frequency lies in
/// `[lo, hi]`.
pub fn band_power_fraction(x: &[C64], lo: f64, hi: f64) -> f64 {
    let mut spec = x.to_vec();
    fft(&mut spec);
    let n = spec.len();
    let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let inband: f64 = spec
        .iter()
        .enumerate()
        .filter(|(k, _)| (lo..=hi).contains(&bin_freq(*k, n)))
        .map(|(_, v)| v.norm_sqr())
        .sum();
    inband / total
}
