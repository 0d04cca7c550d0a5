//! Transmit power control for low probability of intercept/detection:
//! the smallest power that still meets the required SINR at the intended
//! receiver.

use serde::{Deserialize, Serialize};

use crate::dsp::from_db;
use crate::error::{Error, Result};

/// Linear power quantities of one link, in a common power unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    /// Path gain from transmitter to intended receiver.
    pub gain: f64,
    pub noise: f64,
    /// Interference (jamming plus co-channel) at the receiver.
    pub interference: f64,
}

impl LinkState {
    pub fn sinr(&self, power: f64) -> f64 {
        power * self.gain / (self.noise + self.interference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLimits {
    pub p_min: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerDecision {
    pub power: f64,
    /// The requirement was out of reach even at `p_max`.
    pub degraded: bool,
}

pub fn lpi_power(required_sinr_db: f64, link: &LinkState, limits: PowerLimits) -> Result<PowerDecision> {
    if !(link.gain > 0.0) {
        return Err(Error::InvalidConfig(format!("link gain {} must be positive", link.gain)));
    }
    if !(limits.p_min >= 0.0 && limits.p_min <= limits.p_max) {
        return Err(Error::InvalidConfig("power limits need 0 <= p_min <= p_max".into()));
    }
    let needed = from_db(required_sinr_db) * (link.noise + link.interference) / link.gain;
    Ok(PowerDecision {
        power: needed.clamp(limits.p_min, limits.p_max),
        degraded: needed > limits.p_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LIM: PowerLimits = PowerLimits { p_min: 1e-3, p_max: 100.0 };

    #[test]
    fn minus_infinity_gives_the_floor() {
        let l = LinkState { gain: 1e-6, noise: 1e-9, interference: 0.0 };
        assert_eq!(lpi_power(f64::NEG_INFINITY, &l, LIM).unwrap().power, 1e-3);
    }

    #[test]
    fn halving_gain_doubles_power() {
        let a = LinkState { gain: 1e-6, noise: 1e-9, interference: 0.0 };
        let b = LinkState { gain: 0.5e-6, ..a };
        let pa = lpi_power(20.0, &a, LIM).unwrap().power;
        let pb = lpi_power(20.0, &b, LIM).unwrap().power;
        assert!((pb / pa - 2.0).abs() < 1e-12);
        assert!((a.sinr(pa) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn unreachable_requirement_caps_and_flags() {
        let l = LinkState { gain: 1e-9, noise: 1e-9, interference: 1e-9 };
        let d = lpi_power(40.0, &l, LIM).unwrap();
        assert_eq!(d, PowerDecision { power: 100.0, degraded: true });
        assert!(lpi_power(0.0, &LinkState { gain: 0.0, ..l }, LIM).is_err());
    }
}
