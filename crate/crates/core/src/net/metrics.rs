//! CSV outputs of simulation runs.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{write_csv, SCHEMA_VERSION};

use super::config::SLOT_SECONDS;
use super::engine::{RunSummary, SlotMetrics, TxRecord, UserStats};

#[derive(Serialize)]
struct LongRow {
    schema_version: u32,
    slot: u64,
    metric: &'static str,
    value: f64,
}

/// One row per slot per metric. `cumulative_mbps` is the running
/// end-to-end throughput up to and including the slot.
pub fn write_slot_metrics(path: &Path, slots: &[SlotMetrics]) -> Result<()> {
    let mut delivered = 0u64;
    let mut rows = Vec::with_capacity(slots.len() * 11);
    for (k, s) in slots.iter().enumerate() {
        delivered += s.delivered_bits;
        let cum = delivered as f64 / ((k + 1) as f64 * SLOT_SECONDS) / 1e6;
        let mut push = |metric, value| {
            rows.push(LongRow {
                schema_version: SCHEMA_VERSION,
                slot: s.slot,
                metric,
                value,
            })
        };
        push("delivered_bits", s.delivered_bits as f64);
        push("link_bits", s.link_bits as f64);
        push("transmissions", f64::from(s.transmissions));
        push("successes", f64::from(s.successes));
        push("collisions", f64::from(s.collisions));
        push("sinr_failures", f64::from(s.sinr_failures));
        push("waits", f64::from(s.waits));
        push("degraded", f64::from(s.degraded));
        push("jammed_channels", f64::from(s.jammed_channels));
        if let Some(p) = s.mean_tx_power_dbm {
            push("mean_tx_power_dbm", p);
        }
        push("cumulative_mbps", cum);
    }
    write_csv(path, rows)
}

pub fn write_summaries(path: &Path, runs: &[RunSummary]) -> Result<()> {
    write_csv(path, runs)
}

pub fn read_summaries(path: &Path) -> Result<Vec<RunSummary>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for r in rdr.deserialize::<RunSummary>() {
        let r = r?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                what: "run summary",
                found: r.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        out.push(r);
    }
    Ok(out)
}

#[derive(Serialize)]
struct UserRow {
    schema_version: u32,
    user: usize,
    tx_mbps: f64,
    delivered_mbps: f64,
    transmissions: u64,
    successes: u64,
}

/// Per-user link-level and end-to-end throughput over `slots` slots.
pub fn write_user_stats(path: &Path, users: &[UserStats], slots: u64) -> Result<()> {
    let secs = slots.max(1) as f64 * SLOT_SECONDS;
    write_csv(
        path,
        users.iter().map(|u| UserRow {
            schema_version: SCHEMA_VERSION,
            user: u.user,
            tx_mbps: u.tx_bits as f64 / secs / 1e6,
            delivered_mbps: u.delivered_bits as f64 / secs / 1e6,
            transmissions: u.transmissions,
            successes: u.successes,
        }),
    )
}

/// One row per transmission, for transmit-power histograms.
pub fn write_tx_log(path: &Path, txs: &[TxRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        schema_version: u32,
        slot: u64,
        user: usize,
        next_hop: usize,
        flow: usize,
        channel: usize,
        power_dbm: f64,
        mcs_id: u8,
        degraded: u8,
        sensed_db: f64,
        success: u8,
    }
    write_csv(
        path,
        txs.iter().map(|t| Row {
            schema_version: SCHEMA_VERSION,
            slot: t.slot,
            user: t.user,
            next_hop: t.next_hop,
            flow: t.flow,
            channel: t.channel,
            power_dbm: t.power_dbm,
            mcs_id: t.mcs_id,
            degraded: u8::from(t.degraded),
            sensed_db: t.sensed_db,
            success: u8::from(t.success),
        }),
    )
}
