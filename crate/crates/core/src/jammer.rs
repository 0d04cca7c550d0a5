//! Per-channel jammers: probabilistic, static sensing, and adaptive
//! threshold-updating.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{write_csv, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    #[default]
    Random,
    StaticSensing,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveParams {
    /// Window length in slots between threshold updates.
    pub window: usize,
    /// Weight of jamming power in the utility.
    pub power_weight: f64,
    /// Threshold step constant; the step at update `t` is `delta / t`.
    pub delta: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            window: 10,
            power_weight: 1.0,
            delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JammerConfig {
    pub kind: JammerKind,
    pub p_j: f64,
    /// Sensing threshold in received-power units; the adaptive jammer's
    /// starting value.
    pub tau: f64,
    /// Transmit power while jamming.
    pub power: f64,
    pub adaptive: AdaptiveParams,
}

impl Default for JammerConfig {
    fn default() -> Self {
        Self {
            kind: JammerKind::Random,
            p_j: 0.0,
            tau: 1.0,
            power: 1.0,
            adaptive: AdaptiveParams::default(),
        }
    }
}

impl JammerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_j) {
            return Err(Error::InvalidConfig(format!("p_J {} outside [0, 1]", self.p_j)));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidConfig(format!("sensing threshold {} must be >= 0", self.tau)));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidConfig(format!("jam power {} must be positive", self.power)));
        }
        let a = &self.adaptive;
        if a.window == 0 || !(a.delta >= 0.0) || !a.power_weight.is_finite() {
            return Err(Error::InvalidConfig("adaptive window >= 1 and delta >= 0 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JamDecision {
    pub on: bool,
    pub power: f64,
}

impl JamDecision {
    pub const OFF: JamDecision = JamDecision { on: false, power: 0.0 };

    fn on_with(on: bool, power: f64) -> Self {
        if on {
            Self { on, power }
        } else {
            Self::OFF
        }
    }
}

/// On with probability `p_j`. Always consumes one uniform draw so that
/// seeded runs stay aligned whatever `p_j` is.
pub fn random_step<R: Rng + ?Sized>(p_j: f64, power: f64, rng: &mut R) -> JamDecision {
    let u: f64 = rng.random();
    JamDecision::on_with(u < p_j, power)
}

/// On whenever the sensed power reaches `tau`, otherwise on with `p_j`.
pub fn sensing_step<R: Rng + ?Sized>(p_j: f64, tau: f64, r: f64, power: f64, rng: &mut R) -> JamDecision {
    let u: f64 = rng.random();
    JamDecision::on_with(r >= tau || u < p_j, power)
}

/// Windowed jammer utility for one channel:
/// `(1/T0) sum_k [1(r_k >= tau_k) + w p_k]`.
pub fn adaptive_utility(r: &[f64], p: &[f64], tau: &[f64], w: f64) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::Empty("utility window"));
    }
    if p.len() != r.len() {
        return Err(Error::dim(r.len(), p.len(), "jam power window"));
    }
    if tau.len() != r.len() {
        return Err(Error::dim(r.len(), tau.len(), "threshold window"));
    }
    let sum: f64 = r
        .iter()
        .zip(p)
        .zip(tau)
        .map(|((&rk, &pk), &tk)| f64::from(u8::from(rk >= tk)) + w * pk)
        .sum();
    Ok(sum / r.len() as f64)
}

/// Raises the threshold by `delta / t` when the utility dropped, lowers it
/// (not below zero) otherwise.
pub fn adaptive_update(tau: f64, g_prev: f64, g_cur: f64, delta: f64, t: u64) -> f64 {
    let step = delta / t.max(1) as f64;
    if g_prev > g_cur {
        tau + step
    } else {
        (tau - step).max(0.0)
    }
}

/// One jammer bound to one channel, advanced once per slot.
#[derive(Debug, Clone)]
pub struct Jammer {
    pub channel: usize,
    cfg: JammerConfig,
    tau: f64,
    updates: u64,
    win_r: Vec<f64>,
    win_p: Vec<f64>,
    win_tau: Vec<f64>,
    g_prev: Option<f64>,
    last_utility: Option<f64>,
}

impl Jammer {
    pub fn new(channel: usize, cfg: JammerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            channel,
            cfg,
            tau: cfg.tau,
            updates: 0,
            win_r: Vec::with_capacity(cfg.adaptive.window),
            win_p: Vec::with_capacity(cfg.adaptive.window),
            win_tau: Vec::with_capacity(cfg.adaptive.window),
            g_prev: None,
            last_utility: None,
        })
    }

    pub fn config(&self) -> &JammerConfig {
        &self.cfg
    }

    /// Current sensing threshold.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Utility of the most recently completed window (adaptive only).
    pub fn last_utility(&self) -> Option<f64> {
        self.last_utility
    }

    /// Decides for this slot given the power `r` sensed on the channel.
    pub fn step<R: Rng + ?Sized>(&mut self, r: f64, rng: &mut R) -> JamDecision {
        let u: f64 = rng.random();
        self.step_with(r, u)
    }

    /// Whether the random part alone switches the jammer on for a uniform
    /// draw `u`. Users see this part at the start of a slot; the sensing
    /// part reacts to their transmissions.
    pub fn random_part(&self, u: f64) -> bool {
        u < self.cfg.p_j
    }

    /// Same as [`Jammer::step`] with the uniform draw supplied by the caller.
    pub fn step_with(&mut self, r: f64, u: f64) -> JamDecision {
        let on = match self.cfg.kind {
            JammerKind::Random => self.random_part(u),
            JammerKind::StaticSensing | JammerKind::Adaptive => r >= self.tau || self.random_part(u),
        };
        let d = JamDecision::on_with(on, self.cfg.power);
        if self.cfg.kind == JammerKind::Adaptive {
            self.win_r.push(r);
            self.win_p.push(d.power);
            self.win_tau.push(self.tau);
            if self.win_r.len() == self.cfg.adaptive.window {
                self.close_window();
            }
        }
        d
    }

    fn close_window(&mut self) {
        let g = adaptive_utility(&self.win_r, &self.win_p, &self.win_tau, self.cfg.adaptive.power_weight)
            .expect("windows have equal nonzero length");
        if let Some(prev) = self.g_prev {
            self.updates += 1;
            self.tau = adaptive_update(self.tau, prev, g, self.cfg.adaptive.delta, self.updates);
        }
        self.g_prev = Some(g);
        self.last_utility = Some(g);
        self.win_r.clear();
        self.win_p.clear();
        self.win_tau.clear();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JammerTraceRow {
    pub slot: u64,
    pub channel: usize,
    pub on: bool,
    pub tau: f64,
    /// Empty until the first adaptive window closes.
    pub utility: Option<f64>,
}

#[derive(Serialize)]
struct TraceCsvRow {
    schema_version: u32,
    slot: u64,
    channel: usize,
    on: u8,
    tau: f64,
    utility: Option<f64>,
}

pub fn write_jammer_trace(path: &Path, rows: &[JammerTraceRow]) -> Result<()> {
    write_csv(
        path,
        rows.iter().map(|r| TraceCsvRow {
            schema_version: SCHEMA_VERSION,
            slot: r.slot,
            channel: r.channel,
            on: u8::from(r.on),
            tau: r.tau,
            utility: r.utility,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn extremes_of_p_j() {
        let mut rng = seeded(1);
        for _ in 0..1000 {
            assert!(!random_step(0.0, 1.0, &mut rng).on);
            assert!(random_step(1.0, 1.0, &mut rng).on);
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        let mut rng = seeded(2);
        assert!(sensing_step(0.0, 2.0, 2.0, 1.0, &mut rng).on);
        assert!(!sensing_step(0.0, 2.0, 0.0, 1.0, &mut rng).on);
    }

    #[test]
    fn utility_examples() {
        assert_eq!(adaptive_utility(&[0.5], &[0.0], &[1.0], 1.0).unwrap(), 0.0);
        assert_eq!(adaptive_utility(&[1.0], &[2.0], &[1.0], 1.0).unwrap(), 3.0);
        assert_eq!(adaptive_utility(&[1.0, 0.0], &[5.0, 5.0], &[1.0, 1.0], 0.0).unwrap(), 0.5);
        assert!(adaptive_utility(&[1.0], &[1.0, 2.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn update_examples() {
        assert_eq!(adaptive_update(1.0, 3.0, 2.0, 0.5, 2), 1.25);
        assert_eq!(adaptive_update(0.1, 2.0, 3.0, 0.5, 2), 0.0);
    }

    #[test]
    fn off_decision_has_no_power() {
        let mut rng = seeded(3);
        let d = random_step(0.0, 5.0, &mut rng);
        assert_eq!(d, JamDecision::OFF);
    }
}
