use deepwifi::authfp::*;
use deepwifi::dsp::C64;
use deepwifi::rng::{derive_seed, seeded};
use deepwifi::waveform::add_awgn;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn signature_at(profile: &ImpairmentProfile, snr_db: f64, seed: u64) -> Signature {
    let cfg = AuthConfig::default();
    let burst = received_burst(profile, &cfg, snr_db, &mut seeded(seed)).unwrap();
    extract_signature(&burst, &cfg.signature).unwrap()
}

#[test]
fn unimpaired_burst_has_near_zero_signature() {
    let s = signature_at(&ImpairmentProfile::identity(0), 30.0, 1);
    assert!(s.coarse_cfo_hz.abs() < 2e3, "{s:?}");
    assert!(s.fine_cfo_hz.abs() < 1e3, "{s:?}");
    assert!(s.timing_offset.abs() < 0.2, "{s:?}");
    assert!(s.psi_db.abs() < 0.3, "{s:?}");
    assert!(s.phi_deg.abs() < 2.0, "{s:?}");
}

#[test]
fn injected_cfo_is_recovered_within_two_percent() {
    for (k, cfo) in [50e3, 120e3, -80e3].into_iter().enumerate() {
        let p = ImpairmentProfile {
            cfo_hz: cfo,
            ..ImpairmentProfile::identity(1)
        };
        let s = signature_at(&p, 25.0, 10 + k as u64);
        assert!((s.coarse_cfo_hz - cfo).abs() <= 0.02 * cfo.abs(), "{cfo}: {s:?}");
        assert!((s.fine_cfo_hz - cfo).abs() <= 0.02 * cfo.abs(), "{cfo}: {s:?}");
    }
}

#[test]
fn injected_amplitude_imbalance_is_recovered() {
    let p = ImpairmentProfile {
        psi_db: 3.0,
        ..ImpairmentProfile::identity(1)
    };
    for seed in 0..5 {
        let s = signature_at(&p, 25.0, 20 + seed);
        assert!((s.psi_db - 3.0).abs() < 0.5, "{s:?}");
        assert!(s.phi_deg.abs() < 3.0, "{s:?}");
    }
}

#[test]
fn estimator_error_shrinks_with_snr() {
    let p = ImpairmentProfile::evenly_spaced(3);
    let truth = [p.cfo_hz, p.cfo_hz, p.psi_db, p.phi_deg];
    let rmse = |snr: f64| {
        let mut acc = [0.0; 4];
        let n = 40;
        for i in 0..n {
            let s = signature_at(&p, snr, derive_seed(snr as u64, i));
            let got = [s.coarse_cfo_hz, s.fine_cfo_hz, s.psi_db, s.phi_deg];
            for k in 0..4 {
                acc[k] += (got[k] - truth[k]).powi(2);
            }
        }
        acc.map(|v| (v / n as f64).sqrt())
    };
    let low = rmse(5.0);
    let high = rmse(25.0);
    for k in 0..4 {
        assert!(low[k] >= high[k], "feature {k}: {} < {}", low[k], high[k]);
    }
}

#[test]
fn empty_capture_fails_detection() {
    let mut x = vec![C64::new(0.0, 0.0); 7424];
    x[5] = C64::new(1.0, 0.0);
    add_awgn(&mut x, -10.0, &mut seeded(3));
    let err = extract_signature(&x, &SignatureConfig::default()).unwrap_err();
    assert!(matches!(err, deepwifi::Error::PreambleNotDetected { .. }), "{err}");
}

fn gaussian_rows(n: usize, mean: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            mean.iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + z
                })
                .collect()
        })
        .collect()
}

#[test]
fn mcd_location_on_clean_gaussian() {
    let mean = [1.0, -2.0, 0.5, 3.0, 0.0];
    let n = 400;
    let data = gaussian_rows(n, &mean, 4);
    let m = mcd_fit(&data, &McdConfig::default(), &mut seeded(5)).unwrap();
    let bound = 3.0 / (n as f64).sqrt();
    for (k, mu) in mean.iter().enumerate() {
        assert!((m.location[k] - mu).abs() < bound, "coord {k}: {}", m.location[k]);
    }
    assert!(m.distance(m.location.as_slice()).unwrap() < 1e-9);
}

#[test]
fn mcd_ignores_twenty_percent_gross_outliers() {
    let mean = [0.0; 5];
    let n = 500;
    let mut data = gaussian_rows(n, &mean, 6);
    for row in data.iter_mut().take(n / 5) {
        for v in row.iter_mut() {
            *v += 25.0;
        }
    }
    let m = mcd_fit(&data, &McdConfig::default(), &mut seeded(7)).unwrap();
    let sample_mean: f64 = data.iter().map(|r| r[0]).sum::<f64>() / n as f64;
    // bound from the 400 clean points
    let bound = 3.0 / 400f64.sqrt();
    for k in 0..5 {
        assert!(m.location[k].abs() < bound, "coord {k}: {}", m.location[k]);
    }
    assert!(sample_mean > 4.0);
}

#[test]
fn mahalanobis_is_affine_invariant() {
    let data = gaussian_rows(120, &[0.0; 5], 8);
    let mut rng = seeded(9);
    let a = loop {
        let a = DMatrix::<f64>::from_fn(5, 5, |_, _| rng.random_range(-2.0..2.0));
        if a.determinant().abs() > 0.5 {
            break a;
        }
    };
    let b = DVector::from_fn(5, |_, _| rng.random_range(-10.0..10.0));
    let map = |r: &Vec<f64>| (&a * DVector::from_column_slice(r) + &b).as_slice().to_vec();
    let mapped: Vec<Vec<f64>> = data.iter().map(map).collect();
    let probe = vec![0.3, -1.0, 2.0, 0.1, 0.7];
    let probe_mapped = map(&probe);

    let g1 = fit_gaussian(&data).unwrap();
    let g2 = fit_gaussian(&mapped).unwrap();
    let d1 = g1.distance(&probe).unwrap();
    let d2 = g2.distance(&probe_mapped).unwrap();
    assert!((d1 - d2).abs() < 1e-6, "{d1} vs {d2}");

    // same seed gives the same random subsets, and C-steps rank points by
    // affine-invariant distances, so the fit follows the map
    let m1 = mcd_fit(&data, &McdConfig::default(), &mut seeded(10)).unwrap();
    let m2 = mcd_fit(&mapped, &McdConfig::default(), &mut seeded(10)).unwrap();
    let d1 = m1.distance(&probe).unwrap();
    let d2 = m2.distance(&probe_mapped).unwrap();
    assert!((d1 - d2).abs() < 1e-6, "{d1} vs {d2}");
}

#[test]
fn threshold_extremes() {
    let data = gaussian_rows(60, &[0.0; 5], 11);
    let m = fit_gaussian(&data).unwrap();
    let far = Signature::from_slice(&[50.0, -50.0, 9.0, 7.0, 3.0]).unwrap();
    assert_eq!(authenticate(&far, &m, f64::INFINITY).unwrap(), AuthDecision::Authorized);
    assert_eq!(authenticate(&far, &m, 0.0).unwrap(), AuthDecision::Outlier);
    let center = Signature::from_slice(m.location.as_slice()).unwrap();
    assert_eq!(authenticate(&center, &m, 0.0).unwrap(), AuthDecision::Authorized);
    assert_eq!(authenticate(&center, &m, 1e-9).unwrap(), AuthDecision::Authorized);
}

#[test]
fn user_three_is_identified_at_high_snr() {
    let cfg = AuthConfig::default();
    let mut train = Vec::new();
    for j in 1..=6 {
        let p = ImpairmentProfile::evenly_spaced(j);
        train.extend(collect_signatures(&p, &cfg, 40, (15.0, 25.0), derive_seed(12, u64::from(j))).unwrap());
    }
    let auth = Authenticator::fit(&train, &McdConfig::default(), cfg.threshold(), 13).unwrap();
    let s = signature_at(&ImpairmentProfile::evenly_spaced(3), 25.0, 14);
    assert_eq!(auth.identify(&s).unwrap(), 3);
}

#[test]
fn identical_profiles_are_indistinguishable() {
    let cfg = AuthConfig::default();
    let a = ImpairmentProfile::evenly_spaced(2);
    let b = ImpairmentProfile { user_id: 7, ..a };
    let mut train = collect_signatures(&a, &cfg, 60, (15.0, 25.0), 15).unwrap();
    train.extend(collect_signatures(&b, &cfg, 60, (15.0, 25.0), 16).unwrap());
    let auth = Authenticator::fit(&train, &McdConfig::default(), cfg.threshold(), 17).unwrap();
    let probes = collect_signatures(&a, &cfg, 200, (15.0, 25.0), 18).unwrap();
    let hits = probes
        .iter()
        .filter(|r| auth.identify(&r.signature.unwrap()).unwrap() == 2)
        .count();
    let frac = hits as f64 / probes.len() as f64;
    assert!((0.3..=0.7).contains(&frac), "{frac}");
}

#[test]
fn signature_csv_has_schema_column() {
    let cfg = AuthConfig {
        n_users: 3,
        n_authorized: 2,
        train_per_user: 20,
        test_per_authorized: 5,
        test_per_outlier: 5,
        id_per_user: 5,
        ..AuthConfig::default()
    };
    let run = run_auth_scenario(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("signatures.csv");
    write_signatures(&path, &run).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("schema_version,set,user_id"));
    assert_eq!(text.lines().count(), 1 + 40 + 15 + 10);
    write_auth_summary(&dir.path().join("auth.csv"), &run.report).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn impairments_keep_length_and_finiteness(
        j in 0u32..20,
        cfo in -3e5f64..3e5,
        psi in -6.0f64..6.0,
        phi in -60.0f64..60.0,
    ) {
        let p = ImpairmentProfile { user_id: 0, p: 10_000, q: 10_000 - u64::from(j), cfo_hz: cfo, psi_db: psi, phi_deg: phi };
        let x: Vec<C64> = (0..300).map(|i| C64::from_polar(1.0, i as f64 * 0.1)).collect();
        let y = apply_impairments(&x, &p, 40e6);
        prop_assert_eq!(y.len(), x.len());
        prop_assert!(y.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }
}
