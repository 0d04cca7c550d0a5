//! RF fingerprinting: transmitter impairments, per-burst signature
//! extraction, and robust-covariance authentication of users.

mod impair;
mod mcd;
mod signature;

pub use impair::{apply_impairments, ImpairmentProfile, CFO_STEP_HZ, SRO_INTERPOLATION};
pub use mcd::{chi_threshold, fit_gaussian, mcd_fit, McdConfig, McdModel};
pub use signature::{extract_signature, Signature, SignatureConfig, SIGNATURE_DIM};

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::C64;
use crate::error::{Error, Result};
use crate::phy::GuardInterval;
use crate::report::{write_csv, SCHEMA_VERSION};
use crate::rng::{derive_seed, seeded};
use crate::waveform::{add_awgn, apply_channel, random_bits, wifi_samples, ChannelModelId, OfdmGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuthDecision {
    /// Within the authorized envelope.
    Authorized,
    Outlier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuthConfig {
    /// Users `1..=n_users` get the evenly spaced impairment profiles.
    pub n_users: u32,
    /// Users `1..=n_authorized` are enrolled; the rest act as intruders.
    pub n_authorized: u32,
    pub train_per_user: usize,
    /// Held-out bursts per enrolled user. With 100 per intruder, 44 gives
    /// the 39.5% / 60.5% authorized/outlier test mix of the reference
    /// evaluation.
    pub test_per_authorized: usize,
    pub test_per_outlier: usize,
    /// Identification bursts per enrolled user.
    pub id_per_user: usize,
    pub snr_range_db: (f64, f64),
    /// SNR range of the identification trials.
    pub id_snr_range_db: (f64, f64),
    pub mcs_id: u8,
    pub payload_bytes: usize,
    pub n_samples: usize,
    pub guard: GuardInterval,
    pub channel: Option<ChannelModelId>,
    /// Chi-square quantile of the acceptance radius.
    pub threshold_quantile: f64,
    pub mcd: McdConfig,
    pub signature: SignatureConfig,
    pub seed: u64,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self {
            n_users: 10,
            n_authorized: 6,
            train_per_user: 100,
            test_per_authorized: 44,
            test_per_outlier: 100,
            id_per_user: 100,
            snr_range_db: (5.0, 25.0),
            id_snr_range_db: (15.0, 25.0),
            mcs_id: 1,
            // 40 OFDM symbols at MCS 1, followed by an idle tail
            payload_bytes: 400,
            n_samples: 7424,
            guard: GuardInterval::Long800,
            channel: None,
            threshold_quantile: 0.975,
            mcd: McdConfig::default(),
            signature: SignatureConfig::default(),
            seed: 1,
        }
    }
}

impl AuthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_authorized == 0 || self.n_authorized > self.n_users {
            return Err(Error::InvalidConfig(format!(
                "{} authorized users out of {}",
                self.n_authorized, self.n_users
            )));
        }
        if u64::from(self.n_users) >= SRO_INTERPOLATION {
            return Err(Error::InvalidConfig("too many users for the SRO grid".into()));
        }
        if self.train_per_user <= SIGNATURE_DIM + 1 || self.test_per_authorized + self.test_per_outlier == 0 {
            return Err(Error::InvalidConfig("too few signatures per user".into()));
        }
        if !(0.0..1.0).contains(&self.threshold_quantile) || self.threshold_quantile == 0.0 {
            return Err(Error::InvalidConfig("threshold quantile must be in (0, 1)".into()));
        }
        for (lo, hi) in [self.snr_range_db, self.id_snr_range_db] {
            if !(lo <= hi) {
                return Err(Error::InvalidConfig(format!("SNR range ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        chi_threshold(SIGNATURE_DIM, self.threshold_quantile)
    }
}

/// One burst as received from a user: optional fading, transmitter
/// impairments, then AWGN at `snr_db`.
pub fn received_burst<R: Rng + ?Sized>(
    profile: &ImpairmentProfile,
    cfg: &AuthConfig,
    snr_db: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let bits = random_bits(cfg.payload_bytes * 8, rng);
    let mut x = wifi_samples(&bits, cfg.mcs_id, OfdmGrid::new(cfg.guard), cfg.n_samples)?;
    if let Some(model) = cfg.channel {
        x = apply_channel(&x, &model.params(), rng);
    }
    let mut y = apply_impairments(&x, profile, cfg.signature.sample_rate_hz);
    add_awgn(&mut y, snr_db, rng);
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignatureRecord {
    pub user_id: u32,
    pub snr_db: f64,
    /// `None` when the preamble was not detected.
    pub signature: Option<Signature>,
}

/// `count` bursts of one user with SNR uniform in `snr_range`. Bursts whose
/// preamble is not found are kept with an empty signature.
pub fn collect_signatures(
    profile: &ImpairmentProfile,
    cfg: &AuthConfig,
    count: usize,
    snr_range: (f64, f64),
    seed: u64,
) -> Result<Vec<SignatureRecord>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(derive_seed(seed, i as u64));
            let snr_db = if snr_range.0 < snr_range.1 {
                rng.random_range(snr_range.0..snr_range.1)
            } else {
                snr_range.0
            };
            let burst = received_burst(profile, cfg, snr_db, &mut rng)?;
            let signature = match extract_signature(&burst, &cfg.signature) {
                Ok(s) => Some(s),
                Err(Error::PreambleNotDetected { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SignatureRecord {
                user_id: profile.user_id,
                snr_db,
                signature,
            })
        })
        .collect()
}

pub fn authenticate(sig: &Signature, model: &McdModel, threshold: f64) -> Result<AuthDecision> {
    Ok(if model.distance(&sig.to_array())? <= threshold {
        AuthDecision::Authorized
    } else {
        AuthDecision::Outlier
    })
}

/// Enrolled users, each with its own robust model, plus one model of all
/// enrolled signatures pooled together.
#[derive(Debug, Clone)]
pub struct Authenticator {
    pub users: Vec<(u32, McdModel)>,
    pub pooled: McdModel,
    pub threshold: f64,
}

impl Authenticator {
    pub fn fit(train: &[SignatureRecord], mcd: &McdConfig, threshold: f64, seed: u64) -> Result<Self> {
        let mut ids: Vec<u32> = train.iter().map(|r| r.user_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(Error::Empty("enrollment signatures"));
        }
        let users = ids
            .par_iter()
            .map(|&id| {
                let rows: Vec<Vec<f64>> = train
                    .iter()
                    .filter(|r| r.user_id == id)
                    .filter_map(|r| r.signature.map(|s| s.to_array().to_vec()))
                    .collect();
                let model = mcd_fit(&rows, mcd, &mut seeded(derive_seed(seed, u64::from(id))))?;
                Ok((id, model))
            })
            .collect::<Result<Vec<_>>>()?;
        let all: Vec<Vec<f64>> = train
            .iter()
            .filter_map(|r| r.signature.map(|s| s.to_array().to_vec()))
            .collect();
        let pooled = mcd_fit(&all, mcd, &mut seeded(derive_seed(seed, u64::MAX)))?;
        Ok(Self {
            users,
            pooled,
            threshold,
        })
    }

    /// Accepts a signature that lies inside any enrolled user's envelope.
    pub fn authenticate(&self, sig: &Signature) -> Result<AuthDecision> {
        for (_, m) in &self.users {
            if authenticate(sig, m, self.threshold)? == AuthDecision::Authorized {
                return Ok(AuthDecision::Authorized);
            }
        }
        Ok(AuthDecision::Outlier)
    }

    pub fn authenticate_pooled(&self, sig: &Signature) -> Result<AuthDecision> {
        authenticate(sig, &self.pooled, self.threshold)
    }

    /// Enrolled user with the smallest Mahalanobis distance.
    pub fn identify(&self, sig: &Signature) -> Result<u32> {
        let v = sig.to_array();
        let mut best = (f64::INFINITY, self.users[0].0);
        for (id, m) in &self.users {
            let d = m.distance(&v)?;
            if d < best.0 {
                best = (d, *id);
            }
        }
        Ok(best.1)
    }
}

/// Two-class confusion with rows = truth (authorized, outlier) and
/// columns = decision (authorized, outlier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct AuthConfusion {
    pub counts: [[u64; 2]; 2],
}

impl AuthConfusion {
    fn add(&mut self, truth: AuthDecision, decision: AuthDecision) {
        let i = |d| usize::from(d == AuthDecision::Outlier);
        self.counts[i(truth)][i(decision)] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        (self.counts[0][0] + self.counts[1][1]) as f64 / self.total().max(1) as f64
    }

    /// Fraction of intruder bursts accepted.
    pub fn false_accept_rate(&self) -> f64 {
        self.counts[1][0] as f64 / (self.counts[1][0] + self.counts[1][1]).max(1) as f64
    }

    /// Mean of the per-class accuracies, insensitive to the test mix.
    pub fn balanced_accuracy(&self) -> f64 {
        0.5 * ((1.0 - self.false_reject_rate()) + (1.0 - self.false_accept_rate()))
    }

    /// Fraction of enrolled-user bursts rejected.
    pub fn false_reject_rate(&self) -> f64 {
        self.counts[0][1] as f64 / (self.counts[0][0] + self.counts[0][1]).max(1) as f64
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AuthReport {
    pub threshold: f64,
    pub per_user: AuthConfusion,
    pub pooled: AuthConfusion,
    pub identification_accuracy: f64,
    pub identification_trials: usize,
    /// Bursts of any set whose preamble was not detected. They are
    /// rejected when scored and skipped during enrollment.
    pub undetected: usize,
    /// Users whose robust scatter needed a ridge.
    pub regularized_users: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct AuthRun {
    pub report: AuthReport,
    pub train: Vec<SignatureRecord>,
    pub test: Vec<SignatureRecord>,
    pub identification: Vec<SignatureRecord>,
}

/// Enrolls the authorized users, then scores held-out bursts from every
/// user and identification bursts from the enrolled users.
pub fn run_auth_scenario(cfg: &AuthConfig) -> Result<AuthRun> {
    cfg.validate()?;
    let profiles: Vec<ImpairmentProfile> = (1..=cfg.n_users).map(ImpairmentProfile::evenly_spaced).collect();
    let stream = |kind: u64, user: u32| derive_seed(derive_seed(cfg.seed, kind), u64::from(user));

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut identification = Vec::new();
    for p in &profiles {
        let enrolled = p.user_id <= cfg.n_authorized;
        if enrolled {
            train.extend(collect_signatures(p, cfg, cfg.train_per_user, cfg.snr_range_db, stream(1, p.user_id))?);
            identification.extend(collect_signatures(
                p,
                cfg,
                cfg.id_per_user,
                cfg.id_snr_range_db,
                stream(3, p.user_id),
            )?);
        }
        let n_test = if enrolled {
            cfg.test_per_authorized
        } else {
            cfg.test_per_outlier
        };
        test.extend(collect_signatures(p, cfg, n_test, cfg.snr_range_db, stream(2, p.user_id))?);
    }

    let threshold = cfg.threshold();
    let auth = Authenticator::fit(&train, &cfg.mcd, threshold, derive_seed(cfg.seed, 4))?;
    let mut per_user = AuthConfusion::default();
    let mut pooled = AuthConfusion::default();
    for r in &test {
        let truth = if r.user_id <= cfg.n_authorized {
            AuthDecision::Authorized
        } else {
            AuthDecision::Outlier
        };
        match &r.signature {
            Some(sig) => {
                per_user.add(truth, auth.authenticate(sig)?);
                pooled.add(truth, auth.authenticate_pooled(sig)?);
            }
            None => {
                per_user.add(truth, AuthDecision::Outlier);
                pooled.add(truth, AuthDecision::Outlier);
            }
        }
    }
    let mut hits = 0;
    for r in &identification {
        if let Some(sig) = &r.signature {
            if auth.identify(sig)? == r.user_id {
                hits += 1;
            }
        }
    }
    let undetected = [&train, &test, &identification]
        .iter()
        .flat_map(|set| set.iter())
        .filter(|r| r.signature.is_none())
        .count();
    let report = AuthReport {
        threshold,
        per_user,
        pooled,
        identification_accuracy: hits as f64 / identification.len().max(1) as f64,
        identification_trials: identification.len(),
        undetected,
        regularized_users: auth.users.iter().filter(|(_, m)| m.regularized).map(|(id, _)| *id).collect(),
    };
    Ok(AuthRun {
        report,
        train,
        test,
        identification,
    })
}

#[derive(Serialize)]
struct SignatureRow {
    schema_version: u32,
    set: &'static str,
    user_id: u32,
    snr_db: f64,
    detected: bool,
    coarse_cfo_hz: Option<f64>,
    fine_cfo_hz: Option<f64>,
    timing_offset: Option<f64>,
    psi_db: Option<f64>,
    phi_deg: Option<f64>,
}

/// Writes every signature of a run, tagged with the set it belongs to.
pub fn write_signatures(path: &Path, run: &AuthRun) -> Result<()> {
    let sets = [("train", &run.train), ("test", &run.test), ("identify", &run.identification)];
    write_csv(
        path,
        sets.iter().flat_map(|(set, recs)| {
            recs.iter().map(move |r| SignatureRow {
                schema_version: SCHEMA_VERSION,
                set,
                user_id: r.user_id,
                snr_db: r.snr_db,
                detected: r.signature.is_some(),
                coarse_cfo_hz: r.signature.map(|s| s.coarse_cfo_hz),
                fine_cfo_hz: r.signature.map(|s| s.fine_cfo_hz),
                timing_offset: r.signature.map(|s| s.timing_offset),
                psi_db: r.signature.map(|s| s.psi_db),
                phi_deg: r.signature.map(|s| s.phi_deg),
            })
        }),
    )
}

#[derive(Serialize)]
struct AuthSummaryRow {
    schema_version: u32,
    mode: &'static str,
    authorized_accepted: u64,
    authorized_rejected: u64,
    outlier_accepted: u64,
    outlier_rejected: u64,
    accuracy: f64,
    balanced_accuracy: f64,
    false_accept_rate: f64,
    false_reject_rate: f64,
    identification_accuracy: f64,
}

pub fn write_auth_summary(path: &Path, report: &AuthReport) -> Result<()> {
    let row = |mode, c: &AuthConfusion| AuthSummaryRow {
        schema_version: SCHEMA_VERSION,
        mode,
        authorized_accepted: c.counts[0][0],
        authorized_rejected: c.counts[0][1],
        outlier_accepted: c.counts[1][0],
        outlier_rejected: c.counts[1][1],
        accuracy: c.accuracy(),
        balanced_accuracy: c.balanced_accuracy(),
        false_accept_rate: c.false_accept_rate(),
        false_reject_rate: c.false_reject_rate(),
        identification_accuracy: report.identification_accuracy,
    };
    write_csv(path, [row("per_user", &report.per_user), row("pooled", &report.pooled)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> AuthConfig {
        AuthConfig {
            n_users: 4,
            n_authorized: 2,
            train_per_user: 30,
            test_per_authorized: 20,
            test_per_outlier: 20,
            id_per_user: 20,
            ..AuthConfig::default()
        }
    }

    #[test]
    fn clean_signature_recovers_profile() {
        let cfg = AuthConfig::default();
        let p = ImpairmentProfile::evenly_spaced(3);
        let burst = received_burst(&p, &cfg, 60.0, &mut seeded(5)).unwrap();
        let s = extract_signature(&burst, &cfg.signature).unwrap();
        assert!((s.fine_cfo_hz - 60e3).abs() < 2e3, "{s:?}");
        assert!((s.coarse_cfo_hz - 60e3).abs() < 10e3, "{s:?}");
        assert!((s.psi_db - 3.0).abs() < 0.3, "{s:?}");
        assert!((s.phi_deg - 30.0).abs() < 3.0, "{s:?}");
        assert!(s.timing_offset.abs() < 1.0, "{s:?}");
    }

    #[test]
    fn noise_only_capture_is_not_detected() {
        let cfg = SignatureConfig::default();
        let mut x = vec![C64::new(0.0, 0.0); 7424];
        x[0] = C64::new(1.0, 0.0);
        add_awgn(&mut x, 0.0, &mut seeded(1));
        assert!(matches!(extract_signature(&x, &cfg), Err(Error::PreambleNotDetected { .. })));
    }

    #[test]
    fn small_scenario_separates_users() {
        let run = run_auth_scenario(&small()).unwrap();
        assert!(run.report.per_user.false_accept_rate() < 0.05, "{:?}", run.report);
        assert!(run.report.per_user.accuracy() > 0.65, "{:?}", run.report);
        assert!(run.report.identification_accuracy > 0.9, "{:?}", run.report);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = AuthConfig {
            n_authorized: 11,
            ..AuthConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
