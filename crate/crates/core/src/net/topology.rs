use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{db, from_db};
use crate::error::{Error, Result};

/// Radio and geometry constants. Powers are in dBm, gains in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    /// Side of the square deployment area in meters.
    pub area_m: f64,
    pub p_max_dbm: f64,
    pub p_min_dbm: f64,
    pub noise_dbm: f64,
    /// Path loss at 1 m.
    pub path_loss_ref_db: f64,
    pub path_loss_exponent: f64,
    /// Links whose SNR at full power reaches this value are neighbors.
    pub neighbor_snr_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            area_m: 200.0,
            p_max_dbm: 20.0,
            p_min_dbm: -20.0,
            noise_dbm: -95.0,
            path_loss_ref_db: 40.0,
            path_loss_exponent: 3.0,
            neighbor_snr_db: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_m > 0.0) {
            return Err(Error::InvalidConfig(format!("area {} m", self.area_m)));
        }
        if !(self.p_min_dbm <= self.p_max_dbm) {
            return Err(Error::InvalidConfig("p_min_dbm must not exceed p_max_dbm".into()));
        }
        if !(self.path_loss_exponent > 0.0) {
            return Err(Error::InvalidConfig("path loss exponent must be positive".into()));
        }
        Ok(())
    }

    /// Linear power gain over `d` meters (distances below 1 m count as 1 m).
    pub fn gain(&self, d: f64) -> f64 {
        from_db(-(self.path_loss_ref_db + 10.0 * self.path_loss_exponent * d.max(1.0).log10()))
    }

    pub fn noise_mw(&self) -> f64 {
        from_db(self.noise_dbm)
    }

    pub fn p_max_mw(&self) -> f64 {
        from_db(self.p_max_dbm)
    }

    pub fn p_min_mw(&self) -> f64 {
        from_db(self.p_min_dbm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub positions: Vec<[f64; 2]>,
    /// Linear gain between every pair of users.
    pub gain: Vec<Vec<f64>>,
    /// Sorted neighbor lists; the relation is symmetric.
    pub neighbors: Vec<Vec<usize>>,
    pub jammer_position: [f64; 2],
    /// Linear gain from each user to the jammer site.
    pub jammer_gain: Vec<f64>,
    pub radio: RadioConfig,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Topology {
    pub fn from_positions(positions: Vec<[f64; 2]>, jammer_position: [f64; 2], radio: RadioConfig) -> Result<Self> {
        radio.validate()?;
        if positions.len() < 2 {
            return Err(Error::InvalidConfig("need at least two users".into()));
        }
        let n = positions.len();
        let gain: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { radio.gain(dist(positions[i], positions[j])) }).collect())
            .collect();
        let floor = from_db(radio.neighbor_snr_db) * radio.noise_mw() / radio.p_max_mw();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && gain[i][j] >= floor).collect())
            .collect();
        let jammer_gain = positions.iter().map(|&p| radio.gain(dist(p, jammer_position))).collect();
        Ok(Self {
            positions,
            gain,
            neighbors,
            jammer_position,
            jammer_gain,
            radio,
        })
    }

    /// Uniform placement in the square, redrawn until the neighbor graph
    /// is connected. The jammer site is the center of the area.
    pub fn random<R: Rng + ?Sized>(n_users: usize, radio: RadioConfig, rng: &mut R) -> Result<Self> {
        radio.validate()?;
        let center = [radio.area_m / 2.0; 2];
        for _ in 0..1000 {
            let pos = (0..n_users)
                .map(|_| [rng.random_range(0.0..radio.area_m), rng.random_range(0.0..radio.area_m)])
                .collect();
            let t = Self::from_positions(pos, center, radio)?;
            if t.is_connected() {
                return Ok(t);
            }
        }
        Err(Error::InvalidConfig(format!(
            "no connected placement of {n_users} users in a {} m area",
            radio.area_m
        )))
    }

    pub fn n_users(&self) -> usize {
        self.positions.len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_users()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbors[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// SNR (dB) of link `i -> j` at full power.
    pub fn snr_db(&self, i: usize, j: usize) -> f64 {
        db(self.radio.p_max_mw() * self.gain[i][j] / self.radio.noise_mw())
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Median full-power SNR (dB) over neighbor links.
    pub fn median_link_snr_db(&self) -> f64 {
        let mut v: Vec<f64> = (0..self.n_users())
            .flat_map(|i| self.neighbors[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .map(|(i, j)| self.snr_db(i, j))
            .collect();
        v.sort_by(f64::total_cmp);
        match v.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => v[n / 2],
            n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn neighbor_relation_is_symmetric() {
        let t = Topology::random(9, RadioConfig::default(), &mut seeded(1)).unwrap();
        for i in 0..9 {
            for &j in &t.neighbors[i] {
                assert!(t.are_neighbors(j, i));
            }
        }
        assert!(t.is_connected());
    }

    #[test]
    fn snr_follows_path_loss() {
        let r = RadioConfig::default();
        let t = Topology::from_positions(vec![[0.0, 0.0], [100.0, 0.0]], [0.0, 0.0], r).unwrap();
        // 20 dBm - (40 + 60) dB + 95 dB
        assert!((t.snr_db(0, 1) - 15.0).abs() < 1e-9);
    }
}
