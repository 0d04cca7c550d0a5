use deepwifi::classifier::{train_fnn, ClassifierConfig, SignalLabel};
use deepwifi::nn::{gradient_check, read_network, write_network, Activation, LayerSpec, LossKind, Network};
use deepwifi::rng::seeded;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn random_input(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn one_hot(k: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect()
}

#[test]
fn classifier_shape_gradients_match_finite_differences() {
    // Dropout is inactive outside training, so the checked function is the
    // inference path of the classifier architecture.
    let specs = [
        LayerSpec::new(8, 15, Activation::Relu).with_dropout(0.5),
        LayerSpec::new(15, 3, Activation::Softmax),
    ];
    for seed in 0..5 {
        let net = Network::new(&specs, &mut seeded(seed), seed).unwrap();
        let x = random_input(8, 100 + seed);
        let err = gradient_check(&net, &x, &one_hot(seed as usize % 3, 3), LossKind::CrossEntropy, 1e-6).unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn autoencoder_shape_gradients_match_finite_differences() {
    let specs = [
        LayerSpec::new(12, 10, Activation::Tanh),
        LayerSpec::new(10, 4, Activation::Tanh),
        LayerSpec::new(4, 10, Activation::Tanh),
        LayerSpec::new(10, 12, Activation::Linear),
    ];
    for seed in 0..5 {
        let net = Network::new(&specs, &mut seeded(seed), seed).unwrap();
        let x = random_input(12, 200 + seed);
        let target = random_input(12, 300 + seed);
        let err = gradient_check(&net, &x, &target, LossKind::Mse, 1e-6).unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn serialized_network_round_trips() {
    let specs = [LayerSpec::new(5, 7, Activation::Relu), LayerSpec::new(7, 3, Activation::Softmax)];
    let net = Network::new(&specs, &mut seeded(3), 3).unwrap();
    let mut buf = Vec::new();
    write_network(&net, &mut buf).unwrap();
    let back = read_network(buf.as_slice()).unwrap();
    let x = random_input(5, 4);
    assert_eq!(net.predict(&x).unwrap(), back.predict(&x).unwrap());
}

fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<SignalLabel>) {
    let mut rng = seeded(seed);
    let mut x = Array2::zeros((n, 4));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % 3;
        for j in 0..4 {
            x[[i, j]] = if j == k { 2.0 } else { 0.0 } + rng.random_range(-0.7..0.7);
        }
        y.push(SignalLabel::from_index(k).unwrap());
    }
    (x, y)
}

#[test]
fn training_is_reproducible_for_a_fixed_seed() {
    let (xtr, ytr) = blobs(150, 1);
    let (xte, yte) = blobs(60, 2);
    let cfg = ClassifierConfig {
        epochs: 60,
        ..ClassifierConfig::default()
    };
    let (a, ha) = train_fnn(xtr.view(), &ytr, xte.view(), &yte, &cfg).unwrap();
    let (b, hb) = train_fnn(xtr.view(), &ytr, xte.view(), &yte, &cfg).unwrap();
    assert_eq!(a.net, b.net);
    assert_eq!(ha, hb);
    let acc = a.confusion(xte.view(), &yte).unwrap().accuracy();
    assert!(acc > 0.9, "separable blobs reached only {acc}");
}

proptest! {
    #[test]
    fn softmax_outputs_are_distributions(logits in prop::collection::vec(-50.0f64..50.0, 1..12)) {
        let n = logits.len();
        let mut net = Network::new(&[LayerSpec::new(n, n, Activation::Softmax)], &mut seeded(0), 0).unwrap();
        net.layers[0].weights.fill(0.0);
        for i in 0..n {
            net.layers[0].weights[[i, i]] = 1.0;
        }
        net.layers[0].bias.fill(0.0);
        let p = net.predict(&logits).unwrap();
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
