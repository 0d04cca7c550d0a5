use deepwifi::classifier::Confusion;
use deepwifi::mac::{AccessPolicy, McsThresholds};
use deepwifi::net::*;
use deepwifi::phy::{GuardInterval, MCS_TABLE};
use deepwifi::rng::seeded;
use deepwifi::waveform::SignalLabel;
use proptest::prelude::*;
use rand::Rng;

fn truth_cfg() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.labels.mode = LabelMode::Truth;
    c.slots = 400;
    c
}

fn flow(id: usize, s: usize, d: usize) -> Flow {
    Flow::new(id, s, d, 500.0).unwrap()
}

#[test]
fn uniform_traffic_mean_is_500_kbps() {
    let flows = [flow(0, 0, 1)];
    let mut rng = seeded(1);
    let n = 100_000;
    let mut total = 0u64;
    for _ in 0..n {
        total += gen_traffic(&flows, SLOT_SECONDS, &mut rng).unwrap()[0];
    }
    let kbps = total as f64 / (n as f64 * SLOT_SECONDS) / 1e3;
    assert!((kbps - 500.0).abs() <= 10.0, "{kbps}");
    assert!(gen_traffic(&[], SLOT_SECONDS, &mut rng).unwrap().is_empty());
    assert!(gen_traffic(&flows, 0.0, &mut rng).is_err());
    assert!(Flow::new(0, 2, 2, 500.0).is_err());
}

/// Lexicographically first (neighbor, flow) pair with maximal utility.
fn brute_force(own: &[u64], nb: &[NeighborState<'_>]) -> Option<(usize, usize, f64)> {
    let mut pairs = Vec::new();
    for n in nb {
        for s in 0..own.len() {
            pairs.push((n.id, s, n.rate * own[s].saturating_sub(n.backlogs[s]) as f64));
        }
    }
    let best = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    if best <= 0.0 {
        return None;
    }
    pairs.into_iter().find(|p| p.2 == best)
}

#[test]
fn backpressure_matches_exhaustive_search() {
    let mut rng = seeded(2);
    let rates: Vec<f64> = std::iter::once(0.0).chain(MCS_TABLE.iter().map(|e| e.rate_800ns)).collect();
    for _ in 0..1000 {
        let flows = rng.random_range(1..=2);
        let users = rng.random_range(2..=4);
        let q: Vec<Vec<u64>> = (0..users).map(|_| (0..flows).map(|_| rng.random_range(0..6)).collect()).collect();
        let mut nb = Vec::new();
        for j in 1..users {
            if rng.random_bool(0.8) {
                nb.push(NeighborState {
                    id: j,
                    backlogs: &q[j],
                    rate: rates[rng.random_range(0..rates.len())],
                });
            }
        }
        let got = backpressure_select(&q[0], &nb).map(|c| (c.next_hop, c.flow, c.utility));
        assert_eq!(got, brute_force(&q[0], &nb), "{q:?} {nb:?}");
    }
}

fn two_user_engine(traffic: TrafficModel) -> Engine {
    let mut cfg = truth_cfg();
    cfg.users = 2;
    cfg.flows = 1;
    cfg.traffic.model = traffic;
    let topo = Topology::from_positions(vec![[0.0, 0.0], [40.0, 0.0]], [500.0, 500.0], cfg.radio).unwrap();
    Engine::with_topology(cfg, topo, vec![flow(0, 0, 1)], LabelSource::truth(), McsThresholds::builtin()).unwrap()
}

#[test]
fn single_link_delivers_min_of_queue_and_frame() {
    let table = McsThresholds::builtin();
    let mut e = two_user_engine(TrafficModel::Saturated);
    let rate = table.link_rate(e.topology().snr_db(0, 1), 1024, GuardInterval::Long800);
    let cap = (rate * 1e6 * SLOT_SECONDS).floor() as u64;
    for _ in 0..50 {
        assert_eq!(e.step().unwrap().delivered_bits, cap);
    }
    let mut e = two_user_engine(TrafficModel::Uniform);
    for _ in 0..200 {
        let (backlog, arrived) = (e.queues().backlog(0, 0), e.arrived(0));
        let s = e.step().unwrap();
        let queued = backlog + e.arrived(0) - arrived;
        assert_eq!(s.delivered_bits, queued.min(cap));
        assert_eq!(e.queues().backlog(0, 0), 0);
    }
}

#[test]
fn full_jamming_silences_the_baseline() {
    let mut cfg = truth_cfg();
    cfg.jammer.p_j = 1.0;
    cfg.policy = AccessPolicy::Baseline;
    let out = run(&cfg, &LabelSource::truth(), &McsThresholds::builtin(), Recording::default()).unwrap();
    assert_eq!(out.summary.cumulative_mbps, 0.0);
    assert_eq!(out.summary.transmissions, 0);
    cfg.policy = AccessPolicy::DeepWiFi;
    let out = run(&cfg, &LabelSource::truth(), &McsThresholds::builtin(), Recording::default()).unwrap();
    assert!(out.summary.cumulative_mbps > 0.0);
    assert_eq!(out.summary.degraded, out.summary.transmissions);
}

#[test]
fn bits_are_conserved_every_slot() {
    for (traffic, p_j) in [(TrafficModel::Saturated, 0.6), (TrafficModel::Uniform, 0.9)] {
        let mut cfg = truth_cfg();
        cfg.traffic.model = traffic;
        cfg.jammer.p_j = p_j;
        let mut e = Engine::new(cfg.clone(), LabelSource::truth(), McsThresholds::builtin()).unwrap();
        for _ in 0..300 {
            e.step().unwrap();
            for s in 0..cfg.flows {
                let held = e.queues().total(s);
                assert_eq!(e.arrived(s), held + e.delivered(s), "flow {s} slot {}", e.slot());
            }
        }
    }
}

#[test]
fn queues_hold_flow_bits_in_order() {
    let mut cfg = truth_cfg();
    cfg.jammer.p_j = 0.5;
    let mut e = Engine::new(cfg, LabelSource::truth(), McsThresholds::builtin()).unwrap();
    for _ in 0..200 {
        e.step().unwrap();
    }
    // at the source, queued sequence numbers are strictly increasing and
    // end at the newest arrival
    for f in e.flows().to_vec() {
        let runs: Vec<_> = e.queues().queue(f.source, f.id).runs().cloned().collect();
        assert!(runs.windows(2).all(|w| w[0].end <= w[1].start));
        assert_eq!(runs.last().map(|r| r.end), Some(e.arrived(f.id)));
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = truth_cfg();
    cfg.jammer.p_j = 0.4;
    cfg.jammer.kind = deepwifi::jammer::JammerKind::Adaptive;
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = run(&cfg, &LabelSource::truth(), &McsThresholds::builtin(), Recording::ALL).unwrap();
        let p = dir.path().join(format!("slots{k}.csv"));
        write_slot_metrics(&p, &out.slots).unwrap();
        let q = dir.path().join(format!("tx{k}.csv"));
        write_tx_log(&q, &out.transmissions).unwrap();
        texts.push((std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
    let head = String::from_utf8(texts[0].0.clone()).unwrap();
    assert!(head.starts_with("schema_version,slot,metric,value\n1,0,delivered_bits,"));
}

#[test]
fn deepwifi_dominates_and_degrades_gracefully() {
    let table = McsThresholds::builtin();
    let counts = [[98, 1, 1], [1, 97, 2], [4, 11, 85]];
    let labels = LabelSource::from_confusion(&Confusion { counts }).unwrap();
    let sweep = SweepConfig {
        values: grid(0.0, 1.0, 0.1),
        seeds: vec![1, 2, 3, 4, 5],
        ..SweepConfig::default()
    };
    let runs = run_sweep(&truth_cfg(), &sweep, &labels, &table).unwrap();
    assert_eq!(runs.len(), 11 * 5 * 2);
    for pair in runs.chunks(2) {
        let (d, b) = (&pair[0], &pair[1]);
        assert_eq!((d.policy, b.policy), (AccessPolicy::DeepWiFi, AccessPolicy::Baseline));
        assert!(d.cumulative_mbps >= 0.99 * b.cumulative_mbps, "p_J {} seed {}: {d:?} {b:?}", d.p_j, d.seed);
    }
    let curve = mean_curve(&runs, AccessPolicy::DeepWiFi, SweepAxis::PJ);
    for w in curve.windows(2) {
        assert!(w[1].1 <= 1.05 * w[0].1, "{curve:?}");
    }
}

#[test]
fn summaries_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = SweepConfig {
        values: vec![0.0, 0.5],
        seeds: vec![1, 2],
        ..SweepConfig::default()
    };
    let mut base = truth_cfg();
    base.slots = 50;
    let runs = run_sweep(&base, &sweep, &LabelSource::truth(), &McsThresholds::builtin()).unwrap();
    let p = dir.path().join("summary.csv");
    write_summaries(&p, &runs).unwrap();
    let back = read_summaries(&p).unwrap();
    assert_eq!(back.len(), 8);
    assert_eq!(back, runs);
}

#[test]
fn config_defaults_and_validation() {
    let c = ScenarioConfig::default();
    assert_eq!((c.users, c.channels, c.flows), (9, 40, 5));
    let text = c.to_toml_string().unwrap();
    assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), c);
    let partial = ScenarioConfig::from_toml_str("channels = 6\n[jammer]\np_j = 0.3\n").unwrap();
    assert_eq!((partial.channels, partial.jammer.p_j, partial.users), (6, 0.3, 9));
    assert!(ScenarioConfig::from_toml_str("users = 1").is_err());
    assert!(ScenarioConfig::from_toml_str("[jammer]\np_j = 1.5").is_err());
    assert!(ScenarioConfig::from_toml_str("[labels]\nmode = \"confusion\"").is_err());
    assert_eq!(ScenarioConfig::full_scale().slots, 18235);
}

#[test]
fn identity_confusion_reproduces_truth() {
    let counts = [[5, 0, 0], [0, 5, 0], [0, 0, 5]];
    let src = LabelSource::from_confusion(&Confusion { counts }).unwrap();
    let mut rng = seeded(4);
    for l in SignalLabel::ALL {
        for _ in 0..100 {
            assert_eq!(src.label(l, &mut rng), l);
        }
    }
    assert!(LabelSource::from_confusion(&Confusion { counts: [[0; 3]; 3] }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_queue_is_fifo(ops in prop::collection::vec((any::<bool>(), 0u64..50), 1..60)) {
        let mut q = FlowQueue::default();
        let mut next = 0u64;
        let mut out = Vec::new();
        for (push, n) in ops {
            if push {
                q.push(next..next + n);
                next += n;
            } else {
                for r in q.pop(n) {
                    out.extend(r);
                }
            }
        }
        let expected: Vec<u64> = (0..out.len() as u64).collect();
        prop_assert_eq!(out, expected);
        prop_assert_eq!(q.bits(), q.runs().map(|r| r.end - r.start).sum::<u64>());
    }

    #[test]
    fn arrivals_are_nonnegative_and_bounded(seed in any::<u64>(), rate in 0.0f64..5000.0) {
        let flows = [Flow::new(0, 0, 1, rate).unwrap()];
        let b = gen_traffic(&flows, SLOT_SECONDS, &mut seeded(seed)).unwrap()[0];
        prop_assert!((b as f64) <= (2.0 * rate * 1e3 * SLOT_SECONDS).round());
    }
}
