use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::from_db;
use crate::error::{Error, Result};
use crate::jammer::{AdaptiveParams, JammerConfig, JammerKind};
use crate::mac::{AccessPolicy, BackoffConfig};
use crate::phy::GuardInterval;

use super::labels::{BankConfig, LabelMode};
use super::topology::RadioConfig;

/// One 802.11ac frame.
pub const SLOT_SECONDS: f64 = 5.484e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrafficModel {
    /// Per-slot rate uniform in `[0, 2 r]` for every flow.
    Uniform,
    /// Sources are topped up to a fixed backlog every slot.
    #[default]
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrafficConfig {
    pub model: TrafficModel,
    pub mean_rate_kbps: f64,
    pub saturated_backlog_bits: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            model: TrafficModel::Saturated,
            mean_rate_kbps: 500.0,
            saturated_backlog_bits: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MacConfig {
    pub payload_bytes: usize,
    pub guard: GuardInterval,
    /// Low probability of intercept/detection: DeepWiFi transmits on idle
    /// channels with the least power that meets the MCS-0 requirement.
    pub lpi: bool,
    /// Extra SINR kept above the MCS-0 threshold under LPI.
    pub lpi_margin_db: f64,
    pub backoff: BackoffConfig,
    /// Bits per transmission spent on queue-information exchange.
    pub exchange_overhead_bits: u64,
}

impl Default for MacConfig {
    fn default() -> Self {
        Self {
            payload_bytes: 1024,
            guard: GuardInterval::Long800,
            lpi: false,
            lpi_margin_db: 0.5,
            backoff: BackoffConfig::default(),
            exchange_overhead_bits: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JamScenario {
    pub kind: JammerKind,
    pub p_j: f64,
    /// Sensing threshold, dB above the noise floor at the jammer site.
    pub tau_db: f64,
    /// Full-power SINR of the median neighbor link while its channel is
    /// jammed. Sets the jamming power seen at every receiver.
    pub sinr_db: f64,
    pub adaptive: AdaptiveParams,
}

impl Default for JamScenario {
    fn default() -> Self {
        Self {
            kind: JammerKind::Random,
            p_j: 0.0,
            tau_db: 2.0,
            sinr_db: 10.0,
            adaptive: AdaptiveParams::default(),
        }
    }
}

impl JamScenario {
    pub fn jammer_config(&self) -> JammerConfig {
        JammerConfig {
            kind: self.kind,
            p_j: self.p_j,
            tau: from_db(self.tau_db),
            power: 1.0,
            adaptive: self.adaptive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub mode: LabelMode,
    pub bank: BankConfig,
    /// Counts of (true, predicted) labels, rows and columns in I, W, J
    /// order. Used in confusion mode.
    pub confusion: Option<[[usize; 3]; 3]>,
    /// Fuse the labels with energy detection: a channel sensed idle is I,
    /// and a busy channel the classifier calls I is treated as W.
    pub energy_gate: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            mode: LabelMode::Classifier,
            bank: BankConfig::default(),
            confusion: None,
            energy_gate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub users: usize,
    pub channels: usize,
    pub flows: usize,
    pub slots: u64,
    pub seed: u64,
    pub policy: AccessPolicy,
    pub traffic: TrafficConfig,
    pub radio: RadioConfig,
    pub mac: MacConfig,
    pub jammer: JamScenario,
    pub labels: LabelConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            users: 9,
            channels: 40,
            flows: 5,
            slots: 2000,
            seed: 1,
            policy: AccessPolicy::DeepWiFi,
            traffic: TrafficConfig::default(),
            radio: RadioConfig::default(),
            mac: MacConfig::default(),
            jammer: JamScenario::default(),
            labels: LabelConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// 100 s of simulated time with uniform traffic.
    pub fn full_scale() -> Self {
        Self {
            slots: (100.0 / SLOT_SECONDS).round() as u64,
            traffic: TrafficConfig {
                model: TrafficModel::Uniform,
                ..TrafficConfig::default()
            },
            ..Self::default()
        }
    }

    /// Nine users sharing six channels.
    pub fn congested() -> Self {
        Self {
            channels: 6,
            flows: 9,
            ..Self::default()
        }
    }

    /// Static sensing jammers (tau 2 dB, p_J 0.7) against DeepWiFi with
    /// LPI/LPD.
    pub fn sensing() -> Self {
        let mut c = Self::default();
        c.jammer.kind = JammerKind::StaticSensing;
        c.jammer.p_j = 0.7;
        c.jammer.tau_db = 2.0;
        c.jammer.sinr_db = 5.0;
        c.mac.lpi = true;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 2 {
            return Err(Error::InvalidConfig("need at least two users".into()));
        }
        if self.channels == 0 || self.flows == 0 || self.slots == 0 {
            return Err(Error::InvalidConfig("channels, flows and slots must be positive".into()));
        }
        if !(self.traffic.mean_rate_kbps >= 0.0) {
            return Err(Error::InvalidConfig("mean flow rate must be >= 0".into()));
        }
        if self.mac.payload_bytes == 0 {
            return Err(Error::InvalidConfig("payload must be positive".into()));
        }
        if !self.jammer.sinr_db.is_finite() || !self.jammer.tau_db.is_finite() {
            return Err(Error::InvalidConfig("jammer SINR and threshold must be finite".into()));
        }
        if self.labels.mode == LabelMode::Confusion && self.labels.confusion.is_none() {
            return Err(Error::InvalidConfig("confusion label mode needs a confusion matrix".into()));
        }
        self.radio.validate()?;
        self.jammer.jammer_config().validate()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}
