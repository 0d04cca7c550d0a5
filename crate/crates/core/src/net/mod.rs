//! Multi-hop network simulation: traffic, per-flow queues, backpressure
//! routing, the slotted engine with jammers and the MAC in the loop, and
//! throughput metrics.

pub mod backpressure;
pub mod config;
pub mod engine;
pub mod labels;
pub mod metrics;
pub mod queue;
pub mod sweep;
pub mod topology;
pub mod traffic;

pub use backpressure::{backpressure_select, BpChoice, NeighborState};
pub use config::{JamScenario, LabelConfig, MacConfig, ScenarioConfig, TrafficConfig, TrafficModel, SLOT_SECONDS};
pub use engine::{label_source, random_flows, run, Engine, Recording, RunOutput, RunSummary, SlotMetrics, TxRecord, UserStats};
pub use labels::{BankConfig, LabelMode, LabelSource};
pub use metrics::{read_summaries, write_slot_metrics, write_summaries, write_tx_log, write_user_stats};
pub use queue::{FlowQueue, QueueState};
pub use sweep::{grid, mean_curve, run_sweep, SweepAxis, SweepConfig};
pub use topology::{RadioConfig, Topology};
pub use traffic::{gen_traffic, Flow};
