use deepwifi::dsp::{band_power_fraction, db, energy, C64};
use deepwifi::rng::seeded;
use deepwifi::waveform::{
    apply_channel, draw_impulse_response, gen_jammer, gen_labeled, gen_wifi, make_dataset, ChannelModelId,
    DatasetConfig, FrameConfig, OfdmGrid, SignalLabel, DEFAULT_FRAME_LEN, DEFAULT_PAYLOAD_BYTES,
};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect()
}

#[test]
fn channels_preserve_energy_on_average() {
    let x = gaussian(4096, 1);
    let e0 = energy(&x);
    for id in ChannelModelId::ALL {
        let model = id.params();
        let mut rng = seeded(10 + id as u64);
        let trials = 1000;
        let mean: f64 = (0..trials).map(|_| energy(&apply_channel(&x, &model, &mut rng)) / e0).sum::<f64>() / trials as f64;
        assert!((mean - 1.0).abs() < 0.1, "model {id:?}: mean energy ratio {mean}");
    }
}

#[test]
fn model_f_has_eighteen_taps_within_its_delay_spread() {
    let model = ChannelModelId::F.params();
    assert_eq!(model.n_taps, 18);
    let mut rng = seeded(2);
    for _ in 0..50 {
        let h = draw_impulse_response(&model, &mut rng);
        let nonzero = h.iter().filter(|v| v.norm() > 0.0).count();
        assert!((1..=18).contains(&nonzero));
        // 25 ns sample spacing.
        assert!((h.len() - 1) as f64 * 25.0 <= model.max_delay_ns + 12.5);
    }
}

#[test]
fn jammer_and_wifi_share_the_channel_band() {
    for seed in 0..10 {
        let j = gen_jammer(DEFAULT_FRAME_LEN, 0.0, &mut seeded(seed), seed).unwrap();
        let w = gen_wifi(seed as u8 % 9, DEFAULT_PAYLOAD_BYTES, OfdmGrid::default(), DEFAULT_FRAME_LEN, &mut seeded(seed + 50), seed)
            .unwrap();
        let ratio = band_power_fraction(&w.samples, -0.25, 0.25) / band_power_fraction(&j.samples, -0.25, 0.25);
        assert!(db(ratio).abs() < 3.0, "seed {seed}: in-band ratio {} dB", db(ratio));
    }
}

#[test]
fn datasets_depend_only_on_the_seed() {
    let cfg = DatasetConfig {
        n_per_class: 12,
        seed: 9,
        ..DatasetConfig::default()
    };
    let (a, b) = (make_dataset(&cfg).unwrap(), make_dataset(&cfg).unwrap());
    assert_eq!(a.split, b.split);
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        assert_eq!(fa.samples, fb.samples);
        assert_eq!(fa.true_label, fb.true_label);
    }
    let other = make_dataset(&DatasetConfig { seed: 10, ..cfg.clone() }).unwrap();
    assert_ne!(a.frames[0].samples, other.frames[0].samples);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn labeled_frames_are_finite_and_reproducible(
        label in 0usize..3,
        model in 0usize..6,
        snr in 0.0f64..30.0,
        mcs in 0u8..9,
        seed in any::<u64>(),
    ) {
        let label = SignalLabel::from_index(label).unwrap();
        let model = ChannelModelId::ALL[model];
        let cfg = FrameConfig::default();
        let a = gen_labeled(label, model, snr, mcs, &cfg, &mut seeded(seed), seed).unwrap();
        let b = gen_labeled(label, model, snr, mcs, &cfg, &mut seeded(seed), seed).unwrap();
        prop_assert!(a.is_finite());
        prop_assert_eq!(a.len(), DEFAULT_FRAME_LEN);
        prop_assert_eq!(a.true_label, label);
        prop_assert_eq!(a.samples, b.samples);
    }
}
