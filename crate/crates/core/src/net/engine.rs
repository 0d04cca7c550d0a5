//! The slotted network simulation.
//!
//! Each slot: arrivals, jammer random draws, backpressure on the queue
//! snapshot, then users decide one after another in random order (a user
//! senses the transmissions already started in this slot), reactive
//! jammers respond to the sensed power, and transmissions are resolved.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Confusion;
use crate::dsp::{db, from_db};
use crate::error::{Error, Result};
use crate::jammer::{Jammer, JammerTraceRow};
use crate::mac::{lpi_power, scan, AccessPolicy, BackoffState, ChannelView, LinkState, McsThresholds, PowerLimits, ScanAction};
use crate::rng::{derive_seed, substream, SimRng};
use crate::sensing::SensingPipeline;
use crate::waveform::SignalLabel;

use super::backpressure::{backpressure_select, NeighborState};
use super::config::{ScenarioConfig, TrafficModel, SLOT_SECONDS};
use super::labels::{LabelMode, LabelSource};
use super::queue::QueueState;
use super::topology::Topology;
use super::traffic::{gen_traffic, Flow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct SlotMetrics {
    pub slot: u64,
    /// Bits that reached their flow's destination.
    pub delivered_bits: u64,
    /// Payload bits carried by successful transmissions (every hop).
    pub link_bits: u64,
    pub transmissions: u32,
    pub successes: u32,
    pub collisions: u32,
    pub sinr_failures: u32,
    pub waits: u32,
    pub degraded: u32,
    pub jammed_channels: u32,
    pub mean_tx_power_dbm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TxRecord {
    pub slot: u64,
    pub user: usize,
    pub next_hop: usize,
    pub flow: usize,
    pub channel: usize,
    pub power_dbm: f64,
    pub mcs_id: u8,
    pub degraded: bool,
    /// Power of this transmission at the jammer site, dB above noise.
    pub sensed_db: f64,
    pub success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct UserStats {
    pub user: usize,
    pub tx_bits: u64,
    pub delivered_bits: u64,
    pub transmissions: u64,
    pub successes: u64,
}

/// What to keep besides the aggregate counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Recording {
    pub slots: bool,
    pub transmissions: bool,
    pub jammers: bool,
}

impl Recording {
    pub const ALL: Recording = Recording {
        slots: true,
        transmissions: true,
        jammers: true,
    };
}

#[derive(Debug, Clone)]
struct Tx {
    from: usize,
    to: usize,
    flow: usize,
    channel: usize,
    power: f64,
    mcs: u8,
    rate: f64,
    degraded: bool,
}

pub struct Engine {
    cfg: ScenarioConfig,
    topo: Topology,
    flows: Vec<Flow>,
    queues: QueueState,
    next_seq: Vec<u64>,
    arrived: Vec<u64>,
    delivered: Vec<u64>,
    users: Vec<UserStats>,
    backoff: Vec<BackoffState>,
    jammers: Vec<Jammer>,
    labels: LabelSource,
    table: McsThresholds,
    nominal_rate: Vec<Vec<f64>>,
    jam_rx: f64,
    rng_traffic: SimRng,
    rng_jam: SimRng,
    rng_mac: SimRng,
    rng_label: SimRng,
    scan_seed: u64,
    fail_seed: u64,
    slot: u64,
    recording: Recording,
    slot_log: Vec<SlotMetrics>,
    tx_log: Vec<TxRecord>,
    jammer_log: Vec<JammerTraceRow>,
}

/// Picks `n` flows with distinct endpoints inside each flow.
pub fn random_flows<R: Rng + ?Sized>(n: usize, n_users: usize, mean_rate_kbps: f64, rng: &mut R) -> Result<Vec<Flow>> {
    (0..n)
        .map(|id| {
            let source = rng.random_range(0..n_users);
            let mut destination = rng.random_range(0..n_users - 1);
            if destination >= source {
                destination += 1;
            }
            Flow::new(id, source, destination, mean_rate_kbps)
        })
        .collect()
}

/// Label source for a scenario. Classifier mode needs a trained pipeline.
pub fn label_source(cfg: &ScenarioConfig, pipeline: Option<&SensingPipeline>) -> Result<LabelSource> {
    match cfg.labels.mode {
        LabelMode::Truth => Ok(LabelSource::truth()),
        LabelMode::Confusion => {
            let counts = cfg
                .labels
                .confusion
                .ok_or_else(|| Error::InvalidConfig("confusion label mode needs a confusion matrix".into()))?;
            LabelSource::from_confusion(&Confusion { counts })
        }
        LabelMode::Classifier => {
            let p = pipeline.ok_or_else(|| Error::InvalidConfig("classifier label mode needs trained models".into()))?;
            LabelSource::from_pipeline(p, &cfg.labels.bank)
        }
    }
}

impl Engine {
    pub fn new(cfg: ScenarioConfig, labels: LabelSource, table: McsThresholds) -> Result<Self> {
        cfg.validate()?;
        let mut rng_topo = substream(cfg.seed, 1);
        let topo = Topology::random(cfg.users, cfg.radio, &mut rng_topo)?;
        let flows = random_flows(cfg.flows, cfg.users, cfg.traffic.mean_rate_kbps, &mut rng_topo)?;
        Self::with_topology(cfg, topo, flows, labels, table)
    }

    pub fn with_topology(
        cfg: ScenarioConfig,
        topo: Topology,
        flows: Vec<Flow>,
        labels: LabelSource,
        table: McsThresholds,
    ) -> Result<Self> {
        cfg.validate()?;
        if topo.n_users() != cfg.users {
            return Err(Error::dim(cfg.users, topo.n_users(), "topology users"));
        }
        if let Some(f) = flows.iter().find(|f| f.source >= cfg.users || f.destination >= cfg.users) {
            return Err(Error::InvalidConfig(format!("flow {} endpoint outside the network", f.id)));
        }
        let n = cfg.users;
        let m = cfg.channels;
        let (payload, gi) = (cfg.mac.payload_bytes, cfg.mac.guard);
        let nominal_rate = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if topo.are_neighbors(i, j) {
                            table.link_rate(topo.snr_db(i, j), payload, gi)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let jam_rx = cfg.radio.noise_mw() * (from_db(topo.median_link_snr_db() - cfg.jammer.sinr_db) - 1.0).max(0.0);
        let jcfg = cfg.jammer.jammer_config();
        let jammers = (0..m).map(|ch| Jammer::new(ch, jcfg)).collect::<Result<_>>()?;
        let seed = cfg.seed;
        Ok(Self {
            queues: QueueState::new(n, flows.len()),
            next_seq: vec![0; flows.len()],
            arrived: vec![0; flows.len()],
            delivered: vec![0; flows.len()],
            users: (0..n).map(|user| UserStats { user, ..UserStats::default() }).collect(),
            backoff: vec![BackoffState::new(m, cfg.mac.backoff); n],
            jammers,
            labels,
            table,
            nominal_rate,
            jam_rx,
            rng_traffic: substream(seed, 2),
            rng_jam: substream(seed, 3),
            rng_mac: substream(seed, 4),
            rng_label: substream(seed, 5),
            scan_seed: derive_seed(seed, 6),
            fail_seed: derive_seed(seed, 7),
            slot: 0,
            recording: Recording::default(),
            slot_log: Vec::new(),
            tx_log: Vec::new(),
            jammer_log: Vec::new(),
            cfg,
            topo,
            flows,
        })
    }

    pub fn record(mut self, recording: Recording) -> Self {
        self.recording = recording;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn queues(&self) -> &QueueState {
        &self.queues
    }

    pub fn jammers(&self) -> &[Jammer] {
        &self.jammers
    }

    /// Interference power each jammer puts on every receiver while on (mW).
    pub fn jam_power_at_receivers(&self) -> f64 {
        self.jam_rx
    }

    /// Bits that entered flow `s` at its source so far.
    pub fn arrived(&self, flow: usize) -> u64 {
        self.arrived[flow]
    }

    pub fn delivered(&self, flow: usize) -> u64 {
        self.delivered[flow]
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    fn arrivals(&mut self) -> Result<()> {
        let bits = match self.cfg.traffic.model {
            TrafficModel::Uniform => gen_traffic(&self.flows, SLOT_SECONDS, &mut self.rng_traffic)?,
            TrafficModel::Saturated => self
                .flows
                .iter()
                .map(|f| {
                    self.cfg
                        .traffic
                        .saturated_backlog_bits
                        .saturating_sub(self.queues.backlog(f.source, f.id))
                })
                .collect(),
        };
        for (f, b) in self.flows.iter().zip(bits) {
            let start = self.next_seq[f.id];
            self.queues.queue_mut(f.source, f.id).push(start..start + b);
            self.next_seq[f.id] += b;
            self.arrived[f.id] += b;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<SlotMetrics> {
        let (n, m) = (self.cfg.users, self.cfg.channels);
        let t = self.slot;
        let mut out = SlotMetrics { slot: t, ..SlotMetrics::default() };
        self.arrivals()?;

        let u: Vec<f64> = (0..m).map(|_| self.rng_jam.random()).collect();
        let visible: Vec<bool> = self.jammers.iter().zip(&u).map(|(j, &u)| j.random_part(u)).collect();

        let backlogs: Vec<Vec<u64>> = (0..n).map(|i| self.queues.backlogs(i)).collect();
        let choices: Vec<_> = (0..n)
            .map(|i| {
                let nb: Vec<NeighborState<'_>> = self.topo.neighbors[i]
                    .iter()
                    .map(|&j| NeighborState {
                        id: j,
                        backlogs: &backlogs[j],
                        rate: self.nominal_rate[i][j],
                    })
                    .collect();
                backpressure_select(&backlogs[i], &nb)
            })
            .collect();

        let noise = self.cfg.radio.noise_mw();
        let p_max = self.cfg.radio.p_max_mw();
        let limits = PowerLimits {
            p_min: self.cfg.radio.p_min_mw(),
            p_max,
        };
        let (payload, gi) = (self.cfg.mac.payload_bytes, self.cfg.mac.guard);
        let floor_db = self.table.threshold(payload, 0);
        let policy = self.cfg.policy;

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng_mac);
        let mut txs: Vec<Tx> = Vec::new();
        let mut on_channel: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut labels = vec![SignalLabel::I; m];
        let mut interference = vec![0.0; m];
        let mut sinr_db = vec![0.0; m];
        for i in order {
            let Some(choice) = choices[i] else { continue };
            let j = choice.next_hop;
            let g = self.topo.gain[i][j];
            for ch in 0..m {
                let truth = if visible[ch] {
                    SignalLabel::J
                } else if on_channel[ch].is_empty() {
                    SignalLabel::I
                } else {
                    SignalLabel::W
                };
                labels[ch] = match policy {
                    AccessPolicy::DeepWiFi => {
                        let l = self.labels.label(truth, &mut self.rng_label);
                        match (self.cfg.labels.energy_gate, truth, l) {
                            (true, SignalLabel::I, _) => SignalLabel::I,
                            (true, _, SignalLabel::I) => SignalLabel::W,
                            _ => l,
                        }
                    }
                    // energy detection: busy or idle is all the baseline needs
                    AccessPolicy::Baseline => truth,
                };
                let jam = if visible[ch] { self.jam_rx } else { 0.0 };
                interference[ch] = jam + on_channel[ch].iter().map(|&k| txs[k].power * self.topo.gain[txs[k].from][j]).sum::<f64>();
                // a receiver already transmitting on the channel cannot listen
                sinr_db[ch] = if on_channel[ch].iter().any(|&k| txs[k].from == j) {
                    f64::NEG_INFINITY
                } else {
                    db(p_max * g / (noise + interference[ch]))
                };
            }
            let view = ChannelView::new(labels.clone(), sinr_db.clone())?;
            // per (slot, user) stream: the scan start does not depend on how
            // many backoff draws earlier events made
            let mut rng_scan = substream(self.scan_seed, t * n as u64 + i as u64);
            match scan(&view, &mut self.backoff[i], policy, &mut rng_scan)? {
                ScanAction::Wait => out.waits += 1,
                ScanAction::Transmit { channel, degraded } => {
                    let s = sinr_db[channel];
                    if s < floor_db {
                        out.waits += 1;
                        continue;
                    }
                    let (mut mcs, mut rate) = self.table.mcs_select(s, payload, gi);
                    let mut power = p_max;
                    if policy == AccessPolicy::DeepWiFi && self.cfg.mac.lpi && !degraded {
                        // lowest power that still meets the MCS-0 requirement
                        let link = LinkState {
                            gain: g,
                            noise,
                            interference: interference[channel],
                        };
                        power = lpi_power(floor_db + self.cfg.mac.lpi_margin_db, &link, limits)?.power;
                        (mcs, rate) = self.table.mcs_select(db(link.sinr(power)), payload, gi);
                    }
                    on_channel[channel].push(txs.len());
                    txs.push(Tx {
                        from: i,
                        to: j,
                        flow: choice.flow,
                        channel,
                        power,
                        mcs,
                        rate,
                        degraded,
                    });
                }
            }
        }

        let mut jam_on = vec![false; m];
        for ch in 0..m {
            let r: f64 = on_channel[ch]
                .iter()
                .map(|&k| txs[k].power * self.topo.jammer_gain[txs[k].from] / noise)
                .sum();
            jam_on[ch] = self.jammers[ch].step_with(r, u[ch]).on;
            if self.recording.jammers {
                self.jammer_log.push(JammerTraceRow {
                    slot: t,
                    channel: ch,
                    on: jam_on[ch],
                    tau: self.jammers[ch].tau(),
                    utility: self.jammers[ch].last_utility(),
                });
            }
        }
        out.jammed_channels = jam_on.iter().filter(|&&b| b).count() as u32;

        let mut moves = Vec::new();
        let mut power_db_sum = 0.0;
        for (k, tx) in txs.iter().enumerate() {
            let others = || on_channel[tx.channel].iter().filter(move |&&o| o != k).map(|&o| &txs[o]);
            let collided = others().any(|o| self.topo.are_neighbors(o.from, tx.from));
            let jam = if jam_on[tx.channel] { self.jam_rx } else { 0.0 };
            let interf = jam + others().map(|o| o.power * self.topo.gain[o.from][tx.to]).sum::<f64>();
            let sinr = db(tx.power * self.topo.gain[tx.from][tx.to] / (noise + interf));
            let success = !collided && sinr >= self.table.threshold(payload, tx.mcs);
            out.transmissions += 1;
            out.degraded += u32::from(tx.degraded);
            power_db_sum += db(tx.power);
            self.users[tx.from].transmissions += 1;
            if collided {
                out.collisions += 1;
            } else if !success {
                out.sinr_failures += 1;
            }
            if success {
                out.successes += 1;
                self.users[tx.from].successes += 1;
                self.backoff[tx.from].clear(tx.channel);
                let cap = ((tx.rate * 1e6 * SLOT_SECONDS).floor() as u64).saturating_sub(self.cfg.mac.exchange_overhead_bits);
                let runs = self.queues.queue_mut(tx.from, tx.flow).pop(cap);
                let bits: u64 = runs.iter().map(|r| r.end - r.start).sum();
                out.link_bits += bits;
                self.users[tx.from].tx_bits += bits;
                moves.push((tx.to, tx.flow, runs, bits));
            } else {
                let mut rng_fail = substream(self.fail_seed, t * n as u64 + tx.from as u64);
                self.backoff[tx.from].busy(tx.channel, &mut rng_fail);
            }
            if self.recording.transmissions {
                self.tx_log.push(TxRecord {
                    slot: t,
                    user: tx.from,
                    next_hop: tx.to,
                    flow: tx.flow,
                    channel: tx.channel,
                    power_dbm: db(tx.power),
                    mcs_id: tx.mcs,
                    degraded: tx.degraded,
                    sensed_db: db(tx.power * self.topo.jammer_gain[tx.from] / noise),
                    success,
                });
            }
        }
        for (to, flow, runs, bits) in moves {
            if to == self.flows[flow].destination {
                self.delivered[flow] += bits;
                self.users[to].delivered_bits += bits;
                out.delivered_bits += bits;
            } else {
                let q = self.queues.queue_mut(to, flow);
                for r in runs {
                    q.push(r);
                }
            }
        }
        if out.transmissions > 0 {
            out.mean_tx_power_dbm = Some(power_db_sum / f64::from(out.transmissions));
        }
        if self.recording.slots {
            self.slot_log.push(out);
        }
        self.slot += 1;
        Ok(out)
    }

    /// Runs the configured number of slots.
    pub fn run(mut self) -> Result<RunOutput> {
        let mut total = Totals::default();
        for _ in 0..self.cfg.slots {
            let s = self.step()?;
            total.add(&s);
        }
        Ok(self.finish(total))
    }

    fn finish(self, total: Totals) -> RunOutput {
        let secs = self.slot as f64 * SLOT_SECONDS;
        let delivered: u64 = self.delivered.iter().sum();
        let summary = RunSummary {
            schema_version: crate::report::SCHEMA_VERSION,
            policy: self.cfg.policy,
            jammer: self.cfg.jammer.kind,
            p_j: self.cfg.jammer.p_j,
            sinr_db: self.cfg.jammer.sinr_db,
            tau_db: self.cfg.jammer.tau_db,
            seed: self.cfg.seed,
            users: self.cfg.users,
            channels: self.cfg.channels,
            slots: self.slot,
            cumulative_mbps: delivered as f64 / secs / 1e6,
            link_mbps: total.link_bits as f64 / secs / 1e6,
            transmissions: total.transmissions,
            successes: total.successes,
            collisions: total.collisions,
            sinr_failures: total.sinr_failures,
            degraded: total.degraded,
            waits: total.waits,
        };
        RunOutput {
            summary,
            users: self.users,
            slots: self.slot_log,
            transmissions: self.tx_log,
            jammers: self.jammer_log,
        }
    }
}

#[derive(Debug, Default)]
struct Totals {
    link_bits: u64,
    transmissions: u64,
    successes: u64,
    collisions: u64,
    sinr_failures: u64,
    degraded: u64,
    waits: u64,
}

impl Totals {
    fn add(&mut self, s: &SlotMetrics) {
        self.link_bits += s.link_bits;
        self.transmissions += u64::from(s.transmissions);
        self.successes += u64::from(s.successes);
        self.collisions += u64::from(s.collisions);
        self.sinr_failures += u64::from(s.sinr_failures);
        self.degraded += u64::from(s.degraded);
        self.waits += u64::from(s.waits);
    }
}

/// Aggregate result of one run, keyed by (policy, jammer, p_j, sinr_db,
/// seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub policy: AccessPolicy,
    pub jammer: crate::jammer::JammerKind,
    pub p_j: f64,
    pub sinr_db: f64,
    pub tau_db: f64,
    pub seed: u64,
    pub users: usize,
    pub channels: usize,
    pub slots: u64,
    /// End-to-end delivered bits over elapsed time, Mb/s.
    pub cumulative_mbps: f64,
    pub link_mbps: f64,
    pub transmissions: u64,
    pub successes: u64,
    pub collisions: u64,
    pub sinr_failures: u64,
    pub degraded: u64,
    pub waits: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub users: Vec<UserStats>,
    pub slots: Vec<SlotMetrics>,
    pub transmissions: Vec<TxRecord>,
    pub jammers: Vec<JammerTraceRow>,
}

/// Builds and runs one scenario.
pub fn run(cfg: &ScenarioConfig, labels: &LabelSource, table: &McsThresholds, recording: Recording) -> Result<RunOutput> {
    Engine::new(cfg.clone(), labels.clone(), table.clone())?.record(recording).run()
}
