use std::sync::OnceLock;

use deepwifi::classifier::{Confusion, SignalLabel};
use deepwifi::frontend::{pca_fit, preprocess_frames};
use deepwifi::nn::{adam_step, backward_batch, Activation, AdamConfig, AdamState, LayerSpec, LossKind, Network};
use deepwifi::rng::seeded;
use deepwifi::sensing::{train_on_dataset, PipelineConfig, PipelineReport, SensingPipeline};
use deepwifi::waveform::{make_dataset, Dataset, Split};
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

struct Trained {
    ds: Dataset,
    cfg: PipelineConfig,
    pipeline: SensingPipeline,
    report: PipelineReport,
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg = PipelineConfig::default().with_seed(4);
        cfg.dataset.n_per_class = 150;
        cfg.dae.epochs = 15;
        let ds = make_dataset(&cfg.dataset).unwrap();
        let (pipeline, report) = train_on_dataset(&ds, &cfg).unwrap();
        Trained {
            ds,
            cfg,
            pipeline,
            report,
        }
    })
}

fn one_hot(y: &[SignalLabel]) -> Array2<f64> {
    let mut t = Array2::zeros((y.len(), 3));
    for (i, l) in y.iter().enumerate() {
        t[[i, l.index()]] = 1.0;
    }
    t
}

/// Multinomial logistic regression, the linear reference for the FNN.
fn linear_accuracy(xtr: &Array2<f64>, ytr: &[SignalLabel], xte: &Array2<f64>, yte: &[SignalLabel]) -> f64 {
    let mean = xtr.mean_axis(Axis(0)).unwrap();
    let std: Array1<f64> = xtr.std_axis(Axis(0), 0.0).mapv(|s| s.max(1e-12));
    let (xtr, xte) = ((xtr - &mean) / &std, (xte - &mean) / &std);
    let mut rng = seeded(5);
    let mut net = Network::new(&[LayerSpec::new(xtr.ncols(), 3, Activation::Softmax)], &mut rng, 5).unwrap();
    let mut adam = AdamState::new(&net, AdamConfig::with_lr(1e-2));
    let t = one_hot(ytr);
    let mut order: Vec<usize> = (0..xtr.nrows()).collect();
    for _ in 0..200 {
        order.shuffle(&mut rng);
        for chunk in order.chunks(32) {
            let xb = xtr.select(Axis(0), chunk);
            let tb = t.select(Axis(0), chunk);
            let (_, g) = backward_batch(&net, xb.view(), tb.view(), LossKind::CrossEntropy, false, &mut rng).unwrap();
            adam_step(&mut net, &g, &mut adam).unwrap();
        }
    }
    let p = net.predict_batch(xte.view()).unwrap();
    let pairs = p.rows().into_iter().zip(yte).map(|(row, &truth)| {
        let k = (0..3).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        (truth, SignalLabel::from_index(k).unwrap())
    });
    Confusion::from_pairs(pairs).accuracy()
}

#[test]
fn fnn_on_latents_beats_a_linear_model_on_three_principal_components() {
    let t = trained();
    let frames: Vec<_> = t.ds.frames.iter().collect();
    let x = preprocess_frames(&frames, &t.cfg.frontend).unwrap();
    let (tr, te) = (t.ds.indices(Split::Train), t.ds.indices(Split::Test));
    let pca = pca_fit(x.select(Axis(0), &tr).view(), 3, 1).unwrap();
    let ztr = pca.project(x.select(Axis(0), &tr).view()).unwrap();
    let zte = pca.project(x.select(Axis(0), &te).view()).unwrap();
    let label = |idx: &[usize]| idx.iter().map(|&i| t.ds.frames[i].true_label).collect::<Vec<_>>();
    let linear = linear_accuracy(&ztr, &label(&tr), &zte, &label(&te));
    let fnn = t.report.test_confusion.accuracy();
    assert!(fnn - linear >= 0.10, "fnn {fnn:.3} vs linear-on-pca {linear:.3}");
}

#[test]
fn idle_and_wifi_latents_never_coincide() {
    let t = trained();
    let pick = |label: SignalLabel| -> Array2<f64> {
        let frames: Vec<&[_]> = t
            .ds
            .frames
            .iter()
            .filter(|f| f.true_label == label)
            .map(|f| f.samples.as_slice())
            .collect();
        t.pipeline.latents(&frames).unwrap()
    };
    let (zi, zw) = (pick(SignalLabel::I), pick(SignalLabel::W));
    let mut closest = f64::INFINITY;
    let mut total = 0.0;
    for ri in zi.rows() {
        for rw in zw.rows() {
            let d = (&ri - &rw).mapv(|v| v * v).sum().sqrt();
            closest = closest.min(d);
            total += d;
        }
    }
    let mean = total / (zi.nrows() * zw.nrows()) as f64;
    assert!(closest > 1e-6 && mean > 0.0, "closest pair {closest}, mean {mean}");
}

#[test]
fn zero_input_gives_finite_reconstruction() {
    let t = trained();
    let x = Array2::zeros((1, t.pipeline.dae.input_dim()));
    let r = t.pipeline.dae.reconstruct_batch(x.view()).unwrap();
    assert!(r.iter().all(|v| v.is_finite()));
    let z = t.pipeline.dae.encode_batch(x.view()).unwrap();
    assert!(z.iter().all(|v| v.is_finite()));
}

#[test]
fn saved_pipeline_classifies_identically() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    t.pipeline.save(dir.path()).unwrap();
    let loaded = SensingPipeline::load(dir.path(), t.cfg.frontend).unwrap();
    let frames: Vec<&[_]> = t.ds.frames.iter().take(30).map(|f| f.samples.as_slice()).collect();
    assert_eq!(t.pipeline.classify(&frames).unwrap(), loaded.classify(&frames).unwrap());
}
