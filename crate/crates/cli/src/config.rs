//! Layered run configuration: built-in defaults, then the scale and
//! scenario presets, then whatever the user's TOML file sets.

use std::path::Path;

use deepwifi::authfp::AuthConfig;
use deepwifi::frontend::DaeConfig;
use deepwifi::mac::McsOracleConfig;
use deepwifi::net::{ScenarioConfig, SweepConfig};
use deepwifi::sensing::PipelineConfig;
use deepwifi::waveform::DatasetConfig;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ScenarioPreset {
    #[default]
    Default,
    Congested,
    Sensing,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub auth: AuthConfig,
    pub mcs: McsOracleConfig,
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn preset(full_scale: bool, scenario: ScenarioPreset) -> Self {
        let mut cfg = Self::default();
        cfg.scenario = match scenario {
            ScenarioPreset::Default => ScenarioConfig::default(),
            ScenarioPreset::Congested => ScenarioConfig::congested(),
            ScenarioPreset::Sensing => ScenarioConfig::sensing(),
        };
        if full_scale {
            cfg.pipeline.dataset = DatasetConfig::full_scale();
            cfg.pipeline.dae = DaeConfig::full_scale();
            let full = ScenarioConfig::full_scale();
            cfg.scenario.slots = full.slots;
            cfg.scenario.traffic = full.traffic;
        }
        cfg
    }

    /// Preset values overridden key by key with the file's contents.
    pub fn resolve(full_scale: bool, scenario: ScenarioPreset, file: Option<&Path>) -> Result<Self, CliError> {
        let base = Self::preset(full_scale, scenario);
        let Some(path) = file else {
            return Ok(base);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let overlay: Table = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut merged = Table::try_from(&base).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut merged, overlay);
        merged
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Replaces every seed with one derived from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        self.pipeline = self.pipeline.clone().with_seed(seed);
        self.auth.seed = seed;
        self.mcs.seed = seed;
        self.scenario.seed = seed;
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
