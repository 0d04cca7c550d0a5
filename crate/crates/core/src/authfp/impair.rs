use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp::{resample_linear, C64};

/// Oscillator and mixer impairments of one transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentProfile {
    pub user_id: u32,
    /// Interpolation factor of the sample-rate offset.
    pub p: u64,
    /// Decimation factor of the sample-rate offset.
    pub q: u64,
    pub cfo_hz: f64,
    /// Amplitude imbalance in dB.
    pub psi_db: f64,
    /// Phase imbalance in degrees.
    pub phi_deg: f64,
}

/// CFO increment between consecutive evenly spaced profiles.
pub const CFO_STEP_HZ: f64 = 20e3;
pub const SRO_INTERPOLATION: u64 = 10_000;

impl ImpairmentProfile {
    pub fn identity(user_id: u32) -> Self {
        Self {
            user_id,
            p: 1,
            q: 1,
            cfo_hz: 0.0,
            psi_db: 0.0,
            phi_deg: 0.0,
        }
    }

    /// Profile `j` on the evenly spaced grid: `p = 10^4`, `q = p - j`,
    /// `psi = j` dB, `phi = 10 j` degrees and `cfo = j * 20 kHz`.
    pub fn evenly_spaced(j: u32) -> Self {
        Self {
            user_id: j,
            p: SRO_INTERPOLATION,
            q: SRO_INTERPOLATION - j as u64,
            cfo_hz: CFO_STEP_HZ * j as f64,
            psi_db: j as f64,
            phi_deg: 10.0 * j as f64,
        }
    }

    pub fn kappa_i(&self) -> f64 {
        10f64.powf(0.5 * self.psi_db / 20.0)
    }

    pub fn kappa_q(&self) -> f64 {
        10f64.powf(-0.5 * self.psi_db / 20.0)
    }

    /// Sample-rate offset `(1 - p/q) * 10^6`.
    pub fn sro_ppm(&self) -> f64 {
        (1.0 - self.p as f64 / self.q as f64) * 1e6
    }

    pub fn is_valid(&self) -> bool {
        self.p >= 1 && self.q >= 1 && self.cfo_hz.is_finite() && self.psi_db.is_finite() && self.phi_deg.is_finite()
    }
}

/// Resample by `p/q`, rotate by the CFO, then apply the IQ imbalance
/// `rx = Re(tx) k_I e^{-i phi/2} + Im(tx) k_Q e^{i (pi/2 + phi/2)}`.
pub fn apply_impairments(samples: &[C64], profile: &ImpairmentProfile, sample_rate_hz: f64) -> Vec<C64> {
    let resampled = resample_linear(samples, profile.p, profile.q);
    let half_phi = 0.5 * profile.phi_deg * PI / 180.0;
    let gi = C64::from_polar(profile.kappa_i(), -half_phi);
    let gq = if half_phi == 0.0 && profile.kappa_q() == 1.0 {
        C64::new(0.0, 1.0)
    } else {
        C64::from_polar(profile.kappa_q(), PI / 2.0 + half_phi)
    };
    let w = 2.0 * PI * profile.cfo_hz / sample_rate_hz;
    resampled
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let t = if profile.cfo_hz == 0.0 {
                x
            } else {
                x * C64::from_polar(1.0, w * n as f64)
            };
            gi * t.re + gq * t.im
        })
        .collect()
}
