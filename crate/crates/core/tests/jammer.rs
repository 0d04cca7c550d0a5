use deepwifi::jammer::*;
use deepwifi::rng::seeded;
use proptest::prelude::*;

fn on_rate(j: &mut Jammer, r: f64, slots: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let on = (0..slots).filter(|_| j.step(r, &mut rng).on).count();
    on as f64 / slots as f64
}

#[test]
fn random_jammer_hits_its_probability() {
    let cfg = JammerConfig {
        p_j: 0.7,
        ..JammerConfig::default()
    };
    let rate = on_rate(&mut Jammer::new(0, cfg).unwrap(), 0.0, 10_000, 1);
    assert!((rate - 0.7).abs() <= 0.03, "{rate}");
}

#[test]
fn sensing_jammer_below_threshold_falls_back_to_p_j() {
    let cfg = JammerConfig {
        kind: JammerKind::StaticSensing,
        p_j: 0.7,
        tau: 2.0,
        ..JammerConfig::default()
    };
    let rate = on_rate(&mut Jammer::new(0, cfg).unwrap(), 1.0, 10_000, 2);
    assert!((rate - 0.7).abs() <= 0.03, "{rate}");
    let rate = on_rate(&mut Jammer::new(0, cfg).unwrap(), 2.0, 1000, 2);
    assert_eq!(rate, 1.0);
}

#[test]
fn infinite_threshold_degenerates_to_random() {
    let base = JammerConfig {
        p_j: 0.4,
        ..JammerConfig::default()
    };
    let sensing = JammerConfig {
        kind: JammerKind::StaticSensing,
        tau: f64::INFINITY,
        ..base
    };
    let mut a = Jammer::new(0, base).unwrap();
    let mut b = Jammer::new(0, sensing).unwrap();
    let mut ra = seeded(3);
    let mut rb = seeded(3);
    for k in 0..5000 {
        let r = (k % 7) as f64 * 10.0;
        assert_eq!(a.step(r, &mut ra), b.step(r, &mut rb));
    }
}

#[test]
fn adaptive_with_zero_step_matches_static() {
    let stat = JammerConfig {
        kind: JammerKind::StaticSensing,
        p_j: 0.3,
        tau: 1.0,
        ..JammerConfig::default()
    };
    let adapt = JammerConfig {
        kind: JammerKind::Adaptive,
        adaptive: AdaptiveParams {
            delta: 0.0,
            ..AdaptiveParams::default()
        },
        ..stat
    };
    let mut a = Jammer::new(0, stat).unwrap();
    let mut b = Jammer::new(0, adapt).unwrap();
    let mut ra = seeded(4);
    let mut rb = seeded(4);
    for k in 0..2000 {
        let r = ((k * 13) % 5) as f64 * 0.5;
        assert_eq!(a.step(r, &mut ra), b.step(r, &mut rb));
    }
    assert_eq!(b.tau(), 1.0);
    assert!(b.last_utility().is_some());
}

#[test]
fn adaptive_threshold_steps_by_delta_over_t() {
    let cfg = JammerConfig {
        kind: JammerKind::Adaptive,
        p_j: 0.5,
        tau: 50.0,
        ..JammerConfig::default()
    };
    let mut j = Jammer::new(2, cfg).unwrap();
    let mut rng = seeded(5);
    let w = cfg.adaptive.window;
    let mut prev = j.tau();
    for k in 0..40 * w {
        j.step(if k % 3 == 0 { 1.5 } else { 0.2 }, &mut rng);
        let t = j.tau();
        if (k + 1) % w == 0 && k + 1 > w {
            let update = ((k + 1) / w - 1) as f64;
            assert!(((t - prev).abs() - cfg.adaptive.delta / update).abs() < 1e-12, "slot {k}");
        } else {
            assert_eq!(t, prev, "slot {k}");
        }
        prev = t;
    }
}

#[test]
fn trace_csv_has_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let rows = [
        JammerTraceRow { slot: 0, channel: 1, on: true, tau: 1.0, utility: None },
        JammerTraceRow { slot: 1, channel: 1, on: false, tau: 1.25, utility: Some(0.5) },
    ];
    write_jammer_trace(&path, &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "schema_version,slot,channel,on,tau,utility");
    assert_eq!(lines.next().unwrap(), "1,0,1,1,1.0,");
    assert_eq!(lines.count(), 1);
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        JammerConfig { p_j: 1.5, ..JammerConfig::default() },
        JammerConfig { tau: -1.0, ..JammerConfig::default() },
        JammerConfig {
            adaptive: AdaptiveParams { window: 0, ..AdaptiveParams::default() },
            ..JammerConfig::default()
        },
    ] {
        assert!(Jammer::new(0, cfg).is_err());
    }
}

proptest! {
    #[test]
    fn threshold_never_negative(
        tau in 0.0f64..5.0,
        delta in 0.0f64..3.0,
        gs in proptest::collection::vec(0.0f64..4.0, 2..60),
    ) {
        let mut t = tau;
        for (k, pair) in gs.windows(2).enumerate() {
            t = adaptive_update(t, pair[0], pair[1], delta, k as u64 + 1);
            prop_assert!(t >= 0.0);
        }
    }
}
