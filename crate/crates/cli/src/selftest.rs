//! Quick end-to-end sanity checks. Each prints one PASS/FAIL line.

use deepwifi::authfp::{apply_impairments, ImpairmentProfile};
use deepwifi::dsp::C64;
use deepwifi::jammer::JammerKind;
use deepwifi::mac::{AccessPolicy, McsThresholds, PAYLOAD_CLASSES};
use deepwifi::net::{backpressure_select, run, LabelMode, LabelSource, NeighborState, Recording, ScenarioConfig};
use deepwifi::nn::{gradient_check, Activation, LayerSpec, LossKind, Network};
use deepwifi::rng::seeded;
use rand::Rng;

use crate::error::CliError;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn gradients() -> Result<Check, CliError> {
    let cls = [
        LayerSpec::new(6, 15, Activation::Relu).with_dropout(0.5),
        LayerSpec::new(15, 3, Activation::Softmax),
    ];
    let dae = [
        LayerSpec::new(8, 6, Activation::Tanh),
        LayerSpec::new(6, 3, Activation::Tanh),
        LayerSpec::new(3, 6, Activation::Tanh),
        LayerSpec::new(6, 8, Activation::Linear),
    ];
    let mut rng = seeded(11);
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let net = Network::new(&cls, &mut rng, seed)?;
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = [0.0, 1.0, 0.0];
        worst = worst.max(gradient_check(&net, &x, &t, LossKind::CrossEntropy, 1e-6)?);
        let net = Network::new(&dae, &mut rng, seed)?;
        let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(gradient_check(&net, &x, &x, LossKind::Mse, 1e-6)?);
    }
    Ok(Check {
        name: "gradient check",
        pass: worst < 1e-4,
        detail: format!("max relative error {worst:.2e}"),
    })
}

fn identity_impairments() -> Check {
    let mut rng = seeded(12);
    let x: Vec<C64> = (0..1024)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let y = apply_impairments(&x, &ImpairmentProfile::identity(0), 40e6);
    let err = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).norm())
        .fold(if x.len() == y.len() { 0.0 } else { f64::INFINITY }, f64::max);
    Check {
        name: "identity impairments",
        pass: err <= 1e-12,
        detail: format!("max deviation {err:.1e}"),
    }
}

fn backpressure() -> Check {
    let mut rng = seeded(13);
    let mut mismatches = 0;
    for _ in 0..500 {
        let flows = rng.random_range(1..5);
        let own: Vec<u64> = (0..flows).map(|_| rng.random_range(0..50)).collect();
        let backlogs: Vec<Vec<u64>> = (0..rng.random_range(0..5))
            .map(|_| (0..flows).map(|_| rng.random_range(0..50)).collect())
            .collect();
        let rates: Vec<f64> = backlogs.iter().map(|_| rng.random_range(0.0..10.0)).collect();
        let nbrs: Vec<NeighborState<'_>> = backlogs
            .iter()
            .zip(&rates)
            .enumerate()
            .map(|(id, (b, &rate))| NeighborState { id, backlogs: b, rate })
            .collect();
        let mut best: f64 = 0.0;
        for n in &nbrs {
            for f in 0..flows {
                best = best.max(n.rate * own[f].saturating_sub(n.backlogs[f]) as f64);
            }
        }
        let ok = match backpressure_select(&own, &nbrs) {
            None => best == 0.0,
            Some(c) => c.utility == best && n_utility(&own, &nbrs[c.next_hop], c.flow) == best,
        };
        mismatches += usize::from(!ok);
    }
    Check {
        name: "backpressure oracle",
        pass: mismatches == 0,
        detail: format!("{mismatches} of 500 instances differ from brute force"),
    }
}

fn n_utility(own: &[u64], n: &NeighborState<'_>, flow: usize) -> f64 {
    n.rate * own[flow].saturating_sub(n.backlogs[flow]) as f64
}

fn mcs_table() -> Check {
    let table = McsThresholds::builtin();
    let increasing = PAYLOAD_CLASSES
        .iter()
        .all(|&p| table.for_payload(p).windows(2).all(|w| w[0] < w[1]));
    let ordered = table
        .for_payload(1024)
        .iter()
        .zip(table.for_payload(256))
        .all(|(long, short)| long >= short);
    Check {
        name: "MCS thresholds monotone",
        pass: increasing && ordered,
        detail: format!("increasing {increasing}, 1024 B >= 256 B {ordered}"),
    }
}

fn full_jamming() -> Result<Check, CliError> {
    let table = McsThresholds::builtin();
    let mut mbps = [0.0; 2];
    for (i, policy) in [AccessPolicy::DeepWiFi, AccessPolicy::Baseline].into_iter().enumerate() {
        let mut cfg = ScenarioConfig::default();
        cfg.slots = 300;
        cfg.policy = policy;
        cfg.labels.mode = LabelMode::Truth;
        cfg.jammer.kind = JammerKind::Random;
        cfg.jammer.p_j = 1.0;
        mbps[i] = run(&cfg, &LabelSource::truth(), &table, Recording::default())?.summary.cumulative_mbps;
    }
    Ok(Check {
        name: "full jamming",
        pass: mbps[0] > 0.0 && mbps[1] == 0.0,
        detail: format!("DeepWiFi {:.2} Mb/s, baseline {:.2} Mb/s", mbps[0], mbps[1]),
    })
}

pub fn self_test() -> Result<(), CliError> {
    let checks = [gradients()?, identity_impairments(), backpressure(), mcs_table(), full_jamming()?];
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.pass);
    }
    if failed > 0 {
        return Err(CliError::Acceptance(failed));
    }
    Ok(())
}
