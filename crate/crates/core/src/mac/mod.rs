//! Channel access (scan and backoff), LPI/LPD power control and MCS
//! selection, for DeepWiFi users and the baseline WiFi policy.

pub mod access;
pub mod bcc;
pub mod mcs;
pub mod power;

pub use access::{
    baseline_scan, deepwifi_scan, scan, AccessPolicy, BackoffConfig, BackoffState, ChannelView, ScanAction,
};
pub use mcs::{
    derive_thresholds, read_thresholds, write_thresholds, McsOracleConfig, McsThresholds, N_MCS, PAYLOAD_CLASSES,
};
pub use power::{lpi_power, LinkState, PowerDecision, PowerLimits};
