use std::path::Path;
use std::process::{Command, Output};

fn deepwifi(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepwifi"))
        .env("DEEPWIFI_OUT", out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("test.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

const SMALL_SIM: &str = r#"
[scenario]
slots = 150

[scenario.labels]
mode = "truth"

[scenario.jammer]
p_j = 0.5

[sweep]
values = [0.0, 1.0]
seeds = [1, 2]
"#;

#[test]
fn simulate_writes_every_csv_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_SIM);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = deepwifi(out, &["--config", &cfg, "simulate"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = read(a.join("simulate/manifest.toml"));
    for name in ["summary.csv", "slots.csv", "users.csv", "transmissions.csv", "jammers.csv"] {
        assert!(manifest.contains(name));
        let text = read(a.join("simulate").join(name));
        assert!(text.starts_with("schema_version,"), "{name}");
        assert_eq!(text, read(b.join("simulate").join(name)), "{name} differs between runs");
    }
    assert_eq!(manifest, read(b.join("simulate/manifest.toml")));
}

#[test]
fn saved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_SIM);
    let first = tmp.path().join("first");
    assert!(deepwifi(&first, &["--config", &cfg, "--seed", "9", "simulate"]).status.success());
    let saved = first.join("simulate/config.toml");
    let second = tmp.path().join("second");
    assert!(deepwifi(&second, &["--config", saved.to_str().unwrap(), "simulate"]).status.success());
    assert_eq!(read(first.join("simulate/summary.csv")), read(second.join("simulate/summary.csv")));
    assert_eq!(
        read(first.join("simulate/manifest.toml")),
        read(second.join("simulate/manifest.toml"))
    );
}

#[test]
fn sweep_has_one_row_per_value_seed_and_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_SIM);
    let o = deepwifi(tmp.path(), &["--config", &cfg, "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read(tmp.path().join("sweep/summaries.csv")).lines().count() - 1;
    assert_eq!(rows, 2 * 2 * 2);
    let curve = read(tmp.path().join("sweep/curve.csv")).lines().count() - 1;
    assert_eq!(curve, 2 * 2);
}

#[test]
fn data_then_train_then_classifier_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
[pipeline.dataset]
n_per_class = 30

[pipeline.dae]
hidden = [64, 16, 64]
epochs = 3

[pipeline.classifier]
epochs = 5

[scenario]
slots = 50

[scenario.labels.bank]
per_class = 5
"#,
    );
    let o = deepwifi(tmp.path(), &["--config", &cfg, "gen-data"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // header plus 90 frames
    assert_eq!(read(tmp.path().join("data/frames.csv")).lines().count(), 91);

    let o = deepwifi(tmp.path(), &["--config", &cfg, "train"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("classifier test accuracy"));
    for f in ["autoencoder.dwnn", "classifier.dwnn", "dae_loss.csv", "classifier_metrics.csv", "confusion_test.csv"] {
        assert!(tmp.path().join("models").join(f).exists(), "{f}");
    }

    let o = deepwifi(tmp.path(), &["--config", &cfg, "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn small_mcs_table_and_auth_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
[mcs]
sinr_step_db = 1.0
trials = 10
payloads = [256]

[auth]
n_users = 4
n_authorized = 2
train_per_user = 30
test_per_authorized = 10
test_per_outlier = 10
id_per_user = 10
"#,
    );
    let o = deepwifi(tmp.path(), &["--config", &cfg, "mcs-table"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(tmp.path().join("mcs/mcs_thresholds.csv")).lines().count() > 1);

    let o = deepwifi(tmp.path(), &["--config", &cfg, "auth-eval"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(tmp.path().join("auth/auth_summary.csv")).lines().count(), 3);
}

#[test]
fn configuration_problems_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "[scenario]\nusers = 1\n");
    assert_eq!(deepwifi(tmp.path(), &["--config", &bad, "simulate"]).status.code(), Some(1));

    let typo = write_config(tmp.path(), "[scenarioo]\nslots = 1\n");
    assert_eq!(deepwifi(tmp.path(), &["--config", &typo, "simulate"]).status.code(), Some(1));

    // classifier labels without trained models
    assert_eq!(deepwifi(tmp.path(), &["simulate"]).status.code(), Some(1));
    assert_eq!(deepwifi(tmp.path(), &["train"]).status.code(), Some(1));
    assert_eq!(deepwifi(tmp.path(), &["no-such-command"]).status.code(), Some(1));
}

#[test]
fn self_test_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = deepwifi(tmp.path(), &["self-test"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
}
