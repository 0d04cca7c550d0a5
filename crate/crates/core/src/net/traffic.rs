use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub id: usize,
    pub source: usize,
    pub destination: usize,
    pub mean_rate_kbps: f64,
}

impl Flow {
    pub fn new(id: usize, source: usize, destination: usize, mean_rate_kbps: f64) -> Result<Self> {
        if source == destination {
            return Err(Error::InvalidConfig(format!("flow {id} has source = destination = {source}")));
        }
        if !(mean_rate_kbps >= 0.0) || !mean_rate_kbps.is_finite() {
            return Err(Error::InvalidConfig(format!("flow {id} rate {mean_rate_kbps} kb/s")));
        }
        Ok(Self {
            id,
            source,
            destination,
            mean_rate_kbps,
        })
    }
}

/// Per-flow arrivals for one slot. Each flow's rate is drawn uniformly
/// from `[0, 2 r]`, so `r = 500` kb/s gives rates in `[0, 1]` Mb/s.
pub fn gen_traffic<R: Rng + ?Sized>(flows: &[Flow], slot_dt: f64, rng: &mut R) -> Result<Vec<u64>> {
    if !(slot_dt > 0.0) {
        return Err(Error::InvalidConfig(format!("slot duration {slot_dt} must be positive")));
    }
    Ok(flows
        .iter()
        .map(|f| {
            let u: f64 = rng.random();
            (u * 2.0 * f.mean_rate_kbps * 1e3 * slot_dt).round() as u64
        })
        .collect())
}
