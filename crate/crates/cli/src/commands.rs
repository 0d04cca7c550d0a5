use std::path::{Path, PathBuf};

use deepwifi::authfp::{run_auth_scenario, write_auth_summary, write_signatures};
use deepwifi::classifier::{write_confusion, write_metrics};
use deepwifi::frontend::{write_loss_history, FrontEndConfig};
use deepwifi::jammer::write_jammer_trace;
use deepwifi::mac::{derive_thresholds, read_thresholds, write_thresholds, AccessPolicy, McsThresholds};
use deepwifi::net::{
    label_source, mean_curve, run, run_sweep, write_slot_metrics, write_summaries, write_tx_log, write_user_stats,
    LabelMode, LabelSource, Recording, SweepAxis,
};
use deepwifi::report::{write_csv, SCHEMA_VERSION};
use deepwifi::sensing::{train_on_dataset, SensingPipeline};
use deepwifi::waveform::{load_dataset, make_dataset, save_dataset, Split};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{RunManifest, CONFIG_FILE};

pub const DATASET_FILE: &str = "dataset.dwds";

/// Resolved configuration plus the output root.
pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Context {
    fn start(&self, command: &str, seeds: Vec<u64>) -> Result<(PathBuf, RunManifest, String), CliError> {
        let toml = self.cfg.to_toml()?;
        let dir = self.out.join(command);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok((dir, RunManifest::new(command, &toml, seeds), toml))
    }
}

#[derive(Serialize)]
struct FrameRow {
    schema_version: u32,
    index: usize,
    label: String,
    channel_model: Option<String>,
    snr_db: Option<f64>,
    mcs_id: Option<u8>,
    split: &'static str,
    seed: u64,
}

pub fn gen_data(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg.pipeline.dataset;
    let (dir, mut manifest, toml) = ctx.start("data", vec![cfg.seed])?;
    let ds = make_dataset(cfg)?;
    save_dataset(&ds, &manifest.output(&dir, DATASET_FILE))?;
    write_csv(
        &manifest.output(&dir, "frames.csv"),
        ds.frames.iter().zip(&ds.split).enumerate().map(|(i, (f, s))| FrameRow {
            schema_version: SCHEMA_VERSION,
            index: i,
            label: f.true_label.to_string(),
            channel_model: f.channel_model.map(|m| format!("{m:?}")),
            snr_db: f.snr_db.is_finite().then_some(f.snr_db),
            mcs_id: f.mcs_id,
            split: match s {
                Split::Train => "train",
                Split::Test => "test",
            },
            seed: f.seed,
        }),
    )?;
    manifest.write(&dir, &toml)?;
    println!(
        "{} frames ({} train, {} test) -> {}",
        ds.len(),
        ds.indices(Split::Train).len(),
        ds.indices(Split::Test).len(),
        dir.display()
    );
    Ok(())
}

pub fn train(ctx: &Context, data: Option<PathBuf>) -> Result<(), CliError> {
    let data = data.unwrap_or_else(|| ctx.out.join("data").join(DATASET_FILE));
    if !data.exists() {
        return Err(CliError::Config(format!(
            "dataset {} not found; run gen-data first",
            data.display()
        )));
    }
    let cfg = &ctx.cfg.pipeline;
    let (dir, mut manifest, toml) =
        ctx.start("models", vec![cfg.dataset.seed, cfg.dae.seed, cfg.classifier.seed])?;
    let ds = load_dataset(&data)?;
    let (pipeline, report) = train_on_dataset(&ds, cfg)?;
    pipeline.save(&dir)?;
    manifest.outputs.extend(["autoencoder.dwnn".to_string(), "classifier.dwnn".to_string()]);
    write_loss_history(&manifest.output(&dir, "dae_loss.csv"), &report.dae_history)?;
    write_metrics(&manifest.output(&dir, "classifier_metrics.csv"), &report.classifier_history)?;
    write_confusion(&manifest.output(&dir, "confusion_train.csv"), &report.train_confusion)?;
    write_confusion(&manifest.output(&dir, "confusion_test.csv"), &report.test_confusion)?;
    manifest.write(&dir, &toml)?;

    if let (Some(first), Some(last)) = (report.dae_history.first(), report.dae_history.last()) {
        if last.test_loss >= first.test_loss {
            eprintln!(
                "warning: autoencoder test loss did not decrease ({:.4e} -> {:.4e})",
                first.test_loss, last.test_loss
            );
        }
    }
    println!("autoencoder relative MSE {:.4}", report.relative_mse);
    println!("sideband suppression {:.2} dB", report.sideband_suppression_db);
    println!("classifier test accuracy {:.2}%", 100.0 * report.test_confusion.accuracy());
    println!("models -> {}", dir.display());
    Ok(())
}

pub fn auth_eval(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg.auth;
    let (dir, mut manifest, toml) = ctx.start("auth", vec![cfg.seed])?;
    let run = run_auth_scenario(cfg)?;
    write_auth_summary(&manifest.output(&dir, "auth_summary.csv"), &run.report)?;
    write_signatures(&manifest.output(&dir, "signatures.csv"), &run)?;
    manifest.write(&dir, &toml)?;
    let r = &run.report;
    println!("authentication accuracy {:.2}%", 100.0 * r.per_user.accuracy());
    println!("outlier false accept {:.2}%", 100.0 * r.per_user.false_accept_rate());
    println!(
        "identification accuracy {:.2}% over {} trials",
        100.0 * r.identification_accuracy,
        r.identification_trials
    );
    Ok(())
}

pub fn mcs_table(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg.mcs;
    let (dir, mut manifest, toml) = ctx.start("mcs", vec![cfg.seed])?;
    let table = derive_thresholds(cfg)?;
    let path = manifest.output(&dir, "mcs_thresholds.csv");
    write_thresholds(&path, &table)?;
    manifest.write(&dir, &toml)?;
    for payload in &cfg.payloads {
        let t = table.for_payload(*payload);
        let cells: Vec<String> = t.iter().map(|v| format!("{v:.2}")).collect();
        println!("{payload:>5} B: {}", cells.join(" "));
    }
    println!("table -> {}", path.display());
    Ok(())
}

fn load_table(path: Option<&Path>) -> Result<McsThresholds, CliError> {
    Ok(match path {
        Some(p) => read_thresholds(p)?,
        None => McsThresholds::builtin(),
    })
}

/// Front-end settings the models were trained with, when their config
/// was saved alongside them.
fn model_frontend(models: &Path, fallback: FrontEndConfig) -> Result<FrontEndConfig, CliError> {
    let path = models.join(CONFIG_FILE);
    if !path.exists() {
        return Ok(fallback);
    }
    let cfg = RunConfig::resolve(false, Default::default(), Some(&path))?;
    Ok(cfg.pipeline.frontend)
}

fn labels(ctx: &Context, models: Option<PathBuf>) -> Result<LabelSource, CliError> {
    let scenario = &ctx.cfg.scenario;
    if scenario.labels.mode != LabelMode::Classifier {
        return Ok(label_source(scenario, None)?);
    }
    let dir = models.unwrap_or_else(|| ctx.out.join("models"));
    if !dir.join("classifier.dwnn").exists() || !dir.join("autoencoder.dwnn").exists() {
        return Err(CliError::Config(format!(
            "no trained models in {}; run train first or set scenario.labels.mode",
            dir.display()
        )));
    }
    let frontend = model_frontend(&dir, ctx.cfg.pipeline.frontend)?;
    let pipeline = SensingPipeline::load(&dir, frontend)?;
    Ok(label_source(scenario, Some(&pipeline))?)
}

pub fn simulate(ctx: &Context, models: Option<PathBuf>, table: Option<PathBuf>) -> Result<(), CliError> {
    let scenario = &ctx.cfg.scenario;
    scenario.validate()?;
    let (dir, mut manifest, toml) = ctx.start("simulate", vec![scenario.seed])?;
    let labels = labels(ctx, models)?;
    let table = load_table(table.as_deref())?;
    let out = run(scenario, &labels, &table, Recording::ALL)?;
    write_summaries(&manifest.output(&dir, "summary.csv"), std::slice::from_ref(&out.summary))?;
    write_slot_metrics(&manifest.output(&dir, "slots.csv"), &out.slots)?;
    write_user_stats(&manifest.output(&dir, "users.csv"), &out.users, out.summary.slots)?;
    write_tx_log(&manifest.output(&dir, "transmissions.csv"), &out.transmissions)?;
    write_jammer_trace(&manifest.output(&dir, "jammers.csv"), &out.jammers)?;
    manifest.write(&dir, &toml)?;
    let s = &out.summary;
    println!(
        "{} vs {:?} jammers (p_J {}, SINR {} dB): {:.3} Mb/s end to end, {} of {} transmissions succeeded",
        s.policy.name(),
        s.jammer,
        s.p_j,
        s.sinr_db,
        s.cumulative_mbps,
        s.successes,
        s.transmissions
    );
    println!("outputs -> {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    schema_version: u32,
    policy: AccessPolicy,
    axis: &'static str,
    value: f64,
    mean_mbps: f64,
}

pub fn sweep(ctx: &Context, models: Option<PathBuf>, table: Option<PathBuf>) -> Result<(), CliError> {
    let sweep = &ctx.cfg.sweep;
    sweep.validate()?;
    ctx.cfg.scenario.validate()?;
    let (dir, mut manifest, toml) = ctx.start("sweep", sweep.seeds.clone())?;
    let labels = labels(ctx, models)?;
    let table = load_table(table.as_deref())?;
    let runs = run_sweep(&ctx.cfg.scenario, sweep, &labels, &table)?;
    write_summaries(&manifest.output(&dir, "summaries.csv"), &runs)?;
    let axis = match sweep.axis {
        SweepAxis::PJ => "p_j",
        SweepAxis::SinrDb => "sinr_db",
    };
    let mut rows = Vec::new();
    for &policy in &sweep.policies {
        for (value, mean) in mean_curve(&runs, policy, sweep.axis) {
            rows.push(CurveRow {
                schema_version: SCHEMA_VERSION,
                policy,
                axis,
                value,
                mean_mbps: mean,
            });
            println!("{:>9} {axis} {value:>6.2}: {mean:8.3} Mb/s", policy.name());
        }
    }
    write_csv(&manifest.output(&dir, "curve.csv"), rows)?;
    manifest.write(&dir, &toml)?;
    println!("{} runs -> {}", runs.len(), dir.display());
    Ok(())
}
