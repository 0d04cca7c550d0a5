//! Parameter sweeps: one run per (grid value, seed, policy), fanned out
//! over threads. Each run is single-threaded and seeded, so results do not
//! depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::{AccessPolicy, McsThresholds};

use super::config::ScenarioConfig;
use super::engine::{run, Recording, RunSummary};
use super::labels::LabelSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    #[default]
    PJ,
    SinrDb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub policies: Vec<AccessPolicy>,
}

/// `0, step, 2 step, ...` up to and including `hi`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::PJ,
            values: grid(0.0, 1.0, 0.05),
            seeds: (1..=5).collect(),
            policies: vec![AccessPolicy::DeepWiFi, AccessPolicy::Baseline],
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.seeds.is_empty() || self.policies.is_empty() {
            return Err(Error::InvalidConfig("sweep needs values, seeds and policies".into()));
        }
        Ok(())
    }

    pub fn scenarios(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = Vec::with_capacity(self.values.len() * self.seeds.len() * self.policies.len());
        for &v in &self.values {
            for &seed in &self.seeds {
                for &policy in &self.policies {
                    let mut c = base.clone();
                    c.seed = seed;
                    c.policy = policy;
                    match self.axis {
                        SweepAxis::PJ => c.jammer.p_j = v,
                        SweepAxis::SinrDb => c.jammer.sinr_db = v,
                    }
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Runs every scenario of the sweep, in grid order.
pub fn run_sweep(
    base: &ScenarioConfig,
    sweep: &SweepConfig,
    labels: &LabelSource,
    table: &McsThresholds,
) -> Result<Vec<RunSummary>> {
    sweep.validate()?;
    let scenarios = sweep.scenarios(base);
    for s in &scenarios {
        s.validate()?;
    }
    scenarios
        .par_iter()
        .map(|c| run(c, labels, table, Recording::default()).map(|o| o.summary))
        .collect()
}

/// Mean cumulative throughput per (policy, grid value) over seeds, in grid
/// order.
pub fn mean_curve(runs: &[RunSummary], policy: AccessPolicy, axis: SweepAxis) -> Vec<(f64, f64)> {
    let key = |r: &RunSummary| match axis {
        SweepAxis::PJ => r.p_j,
        SweepAxis::SinrDb => r.sinr_db,
    };
    let mut xs: Vec<f64> = runs.iter().filter(|r| r.policy == policy).map(key).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.into_iter()
        .map(|x| {
            let v: Vec<f64> = runs
                .iter()
                .filter(|r| r.policy == policy && key(r) == x)
                .map(|r| r.cumulative_mbps)
                .collect();
            (x, v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect()
}
