//! SINR thresholds for MCS selection, derived by Monte Carlo packet-error
//! simulation.
//!
//! Each trial packet is encoded with the 802.11 convolutional code at the
//! MCS code rate, mapped onto the MCS constellation, passed through AWGN,
//! demapped with max-log LLRs and Viterbi-decoded. At every grid SINR the
//! best MCS is found by starting at MCS 8 and stepping down until `trials`
//! packets all arrive error-free; thresholds are the low edges of the
//! resulting map.
//!
//! Payload classes share packets: the 256- and 512-byte packets of a trial
//! are prefixes of the 1024-byte packet, so a short packet fails only when
//! the long one does and thresholds cannot decrease with payload size.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bcc;
use crate::dsp::{from_db, C64};
use crate::error::{Error, Result};
use crate::phy::{GuardInterval, McsEntry, MCS_TABLE};
use crate::report::{write_csv, SCHEMA_VERSION};
use crate::rng::{derive_seed, seeded};
use crate::waveform::random_bits;

pub const PAYLOAD_CLASSES: [usize; 3] = [256, 512, 1024];
pub const N_MCS: usize = MCS_TABLE.len();

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McsOracleConfig {
    pub sinr_min_db: f64,
    pub sinr_max_db: f64,
    pub sinr_step_db: f64,
    pub trials: usize,
    pub payloads: Vec<usize>,
    pub seed: u64,
}

impl Default for McsOracleConfig {
    fn default() -> Self {
        Self {
            sinr_min_db: -5.0,
            sinr_max_db: 50.0,
            sinr_step_db: 0.25,
            trials: 200,
            payloads: PAYLOAD_CLASSES.to_vec(),
            seed: 8,
        }
    }
}

impl McsOracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sinr_step_db > 0.0) || !(self.sinr_min_db <= self.sinr_max_db) {
            return Err(Error::InvalidConfig("SINR grid needs min <= max and step > 0".into()));
        }
        if self.trials == 0 || self.payloads.is_empty() || self.payloads.contains(&0) {
            return Err(Error::InvalidConfig("oracle needs trials >= 1 and nonzero payloads".into()));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = ((self.sinr_max_db - self.sinr_min_db) / self.sinr_step_db + 1e-9).floor() as usize;
        (0..=n).map(|i| self.sinr_min_db + i as f64 * self.sinr_step_db).collect()
    }
}

/// Index of the first wrong information bit in one packet of `info_bits`
/// bits, or `None` when the packet decodes cleanly.
fn first_error<R: Rng + ?Sized>(entry: &McsEntry, info_bits: usize, sinr_db: f64, rng: &mut R) -> Option<usize> {
    let m = entry.modulation;
    let bps = m.bits_per_symbol();
    let info = random_bits(info_bits, rng);
    let mut coded = bcc::encode(&info, entry.coding_rate);
    let coded_len = coded.len();
    coded.resize(coded_len.div_ceil(bps) * bps, 0);
    let noise_var = 1.0 / from_db(sinr_db);
    let sigma = (0.5 * noise_var).sqrt();
    let mut llrs = Vec::with_capacity(coded.len());
    for sym in coded.chunks(bps) {
        let x = m.map(sym);
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        m.llrs(x + C64::new(sigma * re, sigma * im), noise_var, &mut llrs);
    }
    llrs.truncate(coded_len);
    let decoded = bcc::decode(&llrs, info_bits, entry.coding_rate);
    (0..info_bits).find(|&i| decoded[i] != info[i])
}

/// Number of leading payload classes (ascending) that deliver all
/// `trials` packets at this MCS and SINR. Stops early once the count has
/// dropped to `floor`, since the caller learns nothing more from it.
fn passing_classes(entry: &McsEntry, sinr_db: f64, payloads: &[usize], floor: usize, stream: u64, trials: usize) -> usize {
    let longest = payloads[payloads.len() - 1] * 8;
    let mut passing = payloads.len();
    for t in 0..trials {
        let mut rng = seeded(derive_seed(stream, t as u64));
        if let Some(e) = first_error(entry, longest, sinr_db, &mut rng) {
            passing = passing.min(payloads.iter().position(|&p| e < p * 8).expect("error inside longest packet"));
            if passing <= floor {
                break;
            }
        }
    }
    passing
}

/// Highest MCS per payload class that delivers every trial packet at one
/// SINR, following the link-adaptation procedure (start at the top MCS,
/// step down until a level is error-free). Levels below `lowest[p]` are
/// already resolved for class `p` and are not tried; `None` means no tried
/// level passed.
fn best_mcs_at(sinr_db: f64, point: usize, cfg: &McsOracleConfig, payloads: &[usize], lowest: &[usize]) -> Vec<Option<u8>> {
    let mut best = vec![None; payloads.len()];
    let mut passed = 0;
    for e in MCS_TABLE.iter().rev() {
        let m = e.mcs_id as usize;
        // classes that passed above, or no longer care about this level,
        // form a prefix because thresholds grow with payload size
        let idle = lowest.iter().take_while(|&&l| m < l).count();
        let floor = passed.max(idle);
        if floor == payloads.len() {
            break;
        }
        let stream = derive_seed(derive_seed(cfg.seed, point as u64), m as u64);
        let pass = passing_classes(e, sinr_db, payloads, floor, stream, cfg.trials);
        for b in best.iter_mut().take(pass).skip(floor) {
            *b = Some(e.mcs_id);
        }
        passed = passed.max(pass);
    }
    best
}

/// Lowest SINR (dB) supporting each MCS, per payload class.
#[derive(Debug, Clone, PartialEq)]
pub struct McsThresholds {
    /// Ascending payload classes in bytes.
    pub payloads: Vec<usize>,
    /// `thresholds[p][mcs]`; infinite when the MCS never met the
    /// zero-error criterion on the grid.
    pub thresholds: Vec<[f64; N_MCS]>,
}

impl McsThresholds {
    pub fn from_rows(rows: impl IntoIterator<Item = (usize, u8, f64)>) -> Result<Self> {
        let mut payloads: Vec<usize> = Vec::new();
        let mut thresholds: Vec<[f64; N_MCS]> = Vec::new();
        let mut seen: Vec<[bool; N_MCS]> = Vec::new();
        for (p, m, thr) in rows {
            if m as usize >= N_MCS {
                return Err(Error::Malformed {
                    what: "MCS table",
                    detail: format!("mcs_id {m} out of range"),
                });
            }
            let idx = match payloads.iter().position(|&q| q == p) {
                Some(i) => i,
                None => {
                    payloads.push(p);
                    thresholds.push([f64::INFINITY; N_MCS]);
                    seen.push([false; N_MCS]);
                    payloads.len() - 1
                }
            };
            thresholds[idx][m as usize] = thr;
            seen[idx][m as usize] = true;
        }
        if payloads.is_empty() || seen.iter().any(|s| s.iter().any(|&v| !v)) {
            return Err(Error::Malformed {
                what: "MCS table",
                detail: "every payload class needs all MCS rows".into(),
            });
        }
        let mut order: Vec<usize> = (0..payloads.len()).collect();
        order.sort_by_key(|&i| payloads[i]);
        Ok(Self {
            payloads: order.iter().map(|&i| payloads[i]).collect(),
            thresholds: order.iter().map(|&i| thresholds[i]).collect(),
        })
    }

    fn class_index(&self, payload_bytes: usize) -> usize {
        // nearest class, ties toward the larger (more conservative) one
        let mut best = 0;
        for (i, &p) in self.payloads.iter().enumerate() {
            if p.abs_diff(payload_bytes) <= self.payloads[best].abs_diff(payload_bytes) {
                best = i;
            }
        }
        best
    }

    /// Thresholds of the payload class nearest to `payload_bytes`.
    pub fn for_payload(&self, payload_bytes: usize) -> &[f64; N_MCS] {
        &self.thresholds[self.class_index(payload_bytes)]
    }

    pub fn threshold(&self, payload_bytes: usize, mcs_id: u8) -> f64 {
        self.for_payload(payload_bytes)[mcs_id as usize]
    }

    /// Highest MCS whose threshold the SINR meets; MCS 0 when none does.
    pub fn mcs_select(&self, sinr_db: f64, payload_bytes: usize, gi: GuardInterval) -> (u8, f64) {
        let thr = self.for_payload(payload_bytes);
        let id = (0..N_MCS).rev().find(|&m| sinr_db >= thr[m]).unwrap_or(0) as u8;
        (id, MCS_TABLE[id as usize].rate(gi))
    }

    /// Usable link rate in Mb/s: the selected MCS rate, or zero below the
    /// MCS 0 threshold.
    pub fn link_rate(&self, sinr_db: f64, payload_bytes: usize, gi: GuardInterval) -> f64 {
        if sinr_db < self.threshold(payload_bytes, 0) {
            return 0.0;
        }
        self.mcs_select(sinr_db, payload_bytes, gi).1
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, u8, f64)> + '_ {
        self.payloads
            .iter()
            .zip(&self.thresholds)
            .flat_map(|(&p, t)| t.iter().enumerate().map(move |(m, &v)| (p, m as u8, v)))
    }
}

/// Runs the procedure over the SINR grid. The threshold of MCS `m` is the
/// first grid SINR whose best MCS is `m` or higher, so thresholds never
/// decrease with the MCS index; an MCS that is never the best level shares
/// the threshold of the next one up.
pub fn derive_thresholds(cfg: &McsOracleConfig) -> Result<McsThresholds> {
    cfg.validate()?;
    let mut payloads = cfg.payloads.clone();
    payloads.sort_unstable();
    payloads.dedup();
    let grid = cfg.grid();
    let mut thresholds = vec![[f64::INFINITY; N_MCS]; payloads.len()];
    let batch = rayon::current_num_threads().max(1);
    for (b, chunk) in grid.chunks(batch).enumerate() {
        let lowest: Vec<usize> = thresholds
            .iter()
            .map(|t| t.iter().position(|v| v.is_infinite()).unwrap_or(N_MCS))
            .collect();
        let best: Vec<Vec<Option<u8>>> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, &s)| best_mcs_at(s, b * batch + i, cfg, &payloads, &lowest))
            .collect();
        for (&s, row) in chunk.iter().zip(&best) {
            for (p, m) in row.iter().enumerate() {
                if let Some(m) = *m {
                    for t in thresholds[p].iter_mut().take(m as usize + 1) {
                        if t.is_infinite() {
                            *t = s;
                        }
                    }
                }
            }
        }
        if thresholds.iter().all(|t| t[N_MCS - 1].is_finite()) {
            break;
        }
    }
    Ok(McsThresholds { payloads, thresholds })
}

#[derive(Serialize, Deserialize)]
struct ThresholdRow {
    schema_version: u32,
    payload_bytes: usize,
    sinr_db_low_edge: f64,
    mcs_id: u8,
}

pub fn write_thresholds(path: &Path, table: &McsThresholds) -> Result<()> {
    write_csv(
        path,
        table.rows().map(|(payload_bytes, mcs_id, sinr_db_low_edge)| ThresholdRow {
            schema_version: SCHEMA_VERSION,
            payload_bytes,
            sinr_db_low_edge,
            mcs_id,
        }),
    )
}

pub fn read_thresholds(path: &Path) -> Result<McsThresholds> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_thresholds(file)
}

fn parse_thresholds<R: std::io::Read>(input: R) -> Result<McsThresholds> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for r in rdr.deserialize::<ThresholdRow>() {
        let r = r?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                what: "MCS threshold table",
                found: r.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        rows.push((r.payload_bytes, r.mcs_id, r.sinr_db_low_edge));
    }
    McsThresholds::from_rows(rows)
}

const BUILTIN_CSV: &str = include_str!("../../data/mcs_thresholds.csv");

impl McsThresholds {
    /// The table derived with `McsOracleConfig::default()`, shipped so that
    /// simulations do not rerun the link-level oracle.
    pub fn builtin() -> McsThresholds {
        parse_thresholds(BUILTIN_CSV.as_bytes()).expect("shipped threshold table parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_packets_decode() {
        for e in &MCS_TABLE {
            assert_eq!(first_error(e, 2048, 200.0, &mut seeded(1)), None);
        }
    }

    #[test]
    fn select_uses_highest_met_threshold() {
        let thr: [f64; N_MCS] = std::array::from_fn(|m| 5.0 + 3.0 * m as f64);
        let t = McsThresholds {
            payloads: vec![256, 1024],
            thresholds: vec![thr, thr.map(|v| v + 1.0)],
        };
        assert_eq!(t.mcs_select(100.0, 256, GuardInterval::Long800), (8, 78.0));
        assert_eq!(t.mcs_select(-20.0, 256, GuardInterval::Long800), (0, 6.5));
        assert_eq!(t.link_rate(-20.0, 256, GuardInterval::Long800), 0.0);
        assert_eq!(t.mcs_select(8.5, 256, GuardInterval::Long800).0, 1);
        assert_eq!(t.mcs_select(8.5, 1024, GuardInterval::Long800).0, 0);
        // 600 bytes maps to the 256 class
        assert_eq!(t.mcs_select(8.5, 600, GuardInterval::Long800).0, 1);
    }
}
