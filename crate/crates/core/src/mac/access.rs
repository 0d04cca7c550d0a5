//! Channel scan with exponential backoff. DeepWiFi backs off only on
//! authenticated WiFi (W), takes the first idle channel (I), and falls back
//! to the best-SINR jammed channel (J) in degraded mode. Baseline WiFi
//! treats J like W.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::SignalLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AccessPolicy {
    #[default]
    #[serde(rename = "deepwifi")]
    DeepWiFi,
    Baseline,
}

impl AccessPolicy {
    pub fn name(self) -> &'static str {
        match self {
            AccessPolicy::DeepWiFi => "deepwifi",
            AccessPolicy::Baseline => "baseline",
        }
    }
}

/// What one user knows about every channel at scan time.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelView {
    pub labels: Vec<SignalLabel>,
    /// SINR (dB) the user's link would see on each channel.
    pub sinr_db: Vec<f64>,
    /// Whether a W signal passed RF-fingerprint authentication. An
    /// unauthenticated W is handled like a jammer.
    pub authenticated: Vec<bool>,
}

impl ChannelView {
    pub fn new(labels: Vec<SignalLabel>, sinr_db: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("channel view"));
        }
        if sinr_db.len() != labels.len() {
            return Err(Error::dim(labels.len(), sinr_db.len(), "channel SINR"));
        }
        let n = labels.len();
        Ok(Self {
            labels,
            sinr_db,
            authenticated: vec![true; n],
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackoffConfig {
    pub k_init: u32,
    pub k_max: u32,
}

impl Default for BackoffConfig {
    fn default() -> Self {
        Self { k_init: 4, k_max: 10 }
    }
}

/// Per-channel backoff counters and window exponents of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffState {
    cfg: BackoffConfig,
    counters: Vec<u32>,
    exponents: Vec<u32>,
    active: Vec<bool>,
}

impl BackoffState {
    pub fn new(channels: usize, cfg: BackoffConfig) -> Self {
        Self {
            cfg,
            counters: vec![0; channels],
            exponents: vec![cfg.k_init; channels],
            active: vec![false; channels],
        }
    }

    /// Sets explicit counters, marking nonzero ones as backing off.
    pub fn with_counters(mut self, counters: &[u32]) -> Self {
        for (n, &c) in counters.iter().enumerate() {
            self.counters[n] = c;
            self.active[n] = c > 0;
        }
        self
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn is_backing_off(&self, channel: usize) -> bool {
        self.active[channel]
    }

    /// The channel was found busy (or a frame on it failed). A fresh
    /// backoff counts down from `2^k - 1`; an expired one is redrawn
    /// uniformly from `[0, 2^(k+1) - 1]` and the window doubles. A running
    /// countdown is left alone.
    pub fn busy<R: Rng + ?Sized>(&mut self, channel: usize, rng: &mut R) {
        let k = self.exponents[channel];
        if !self.active[channel] {
            self.active[channel] = true;
            self.counters[channel] = (1 << k) - 1;
        } else if self.counters[channel] == 0 {
            self.counters[channel] = rng.random_range(0..=(1u32 << (k + 1)) - 1);
            self.exponents[channel] = (k + 1).min(self.cfg.k_max);
        }
    }

    /// The channel was usable: drop its backoff and reset the window.
    pub fn clear(&mut self, channel: usize) {
        self.active[channel] = false;
        self.counters[channel] = 0;
        self.exponents[channel] = self.cfg.k_init;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanAction {
    Transmit { channel: usize, degraded: bool },
    Wait,
}

fn effective_label(view: &ChannelView, n: usize, policy: AccessPolicy) -> SignalLabel {
    match (view.labels[n], policy) {
        (SignalLabel::W, AccessPolicy::DeepWiFi) if !view.authenticated[n] => SignalLabel::J,
        (SignalLabel::J, AccessPolicy::Baseline) => SignalLabel::W,
        (l, _) => l,
    }
}

/// One slot of channel access. Scanning starts at a uniformly random
/// channel and wraps around. Counters that were running when the scan
/// began tick down by one at the end of the slot.
pub fn scan<R: Rng + ?Sized>(
    view: &ChannelView,
    backoff: &mut BackoffState,
    policy: AccessPolicy,
    rng: &mut R,
) -> Result<ScanAction> {
    let m = view.len();
    if backoff.counters.len() != m {
        return Err(Error::dim(m, backoff.counters.len(), "backoff channels"));
    }
    let running: Vec<bool> = backoff.counters.iter().map(|&c| c > 0).collect();
    let start = rng.random_range(0..m);
    let mut jammed = Vec::new();
    let mut action = ScanAction::Wait;
    for off in 0..m {
        let n = (start + off) % m;
        match effective_label(view, n, policy) {
            SignalLabel::I => {
                backoff.clear(n);
                action = ScanAction::Transmit {
                    channel: n,
                    degraded: false,
                };
                break;
            }
            SignalLabel::W => backoff.busy(n, rng),
            SignalLabel::J => jammed.push(n),
        }
    }
    if action == ScanAction::Wait {
        // highest SINR, lowest index on ties
        let best = jammed
            .into_iter()
            .min_by(|&a, &b| view.sinr_db[b].total_cmp(&view.sinr_db[a]).then(a.cmp(&b)));
        if let Some(channel) = best {
            action = ScanAction::Transmit { channel, degraded: true };
        }
    }
    for (n, &was_running) in running.iter().enumerate() {
        if was_running && backoff.counters[n] > 0 {
            backoff.counters[n] -= 1;
        }
    }
    Ok(action)
}

pub fn deepwifi_scan<R: Rng + ?Sized>(view: &ChannelView, backoff: &mut BackoffState, rng: &mut R) -> Result<ScanAction> {
    scan(view, backoff, AccessPolicy::DeepWiFi, rng)
}

pub fn baseline_scan<R: Rng + ?Sized>(view: &ChannelView, backoff: &mut BackoffState, rng: &mut R) -> Result<ScanAction> {
    scan(view, backoff, AccessPolicy::Baseline, rng)
}
