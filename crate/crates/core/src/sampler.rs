//! Monte Carlo simulation of individual heralded trials.
//!
//! Trial `i` of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`, so every trial
//! owns an independent substream and results do not depend on how trials are
//! split across threads.
//!
//! Photon polarizations are drawn uniformly: each Stokes photon (and each
//! dark click) is σ+ or σ- with probability ½, and anti-Stokes photons are
//! drawn the same way. Only the Stokes polarizations enter the herald
//! decision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::collective::{run_protocol, Polarization, Slot, StateError, ZeemanParams};
use crate::stats::{auto_truncation, success_and_false_for, DetectionModel, EventKey, Signature, StatsError};

/// Minimum number of expected genuine events before an estimate is trusted.
pub const MIN_EXPECTED_SUCCESSES: f64 = 100.0;
/// Bell fidelity assigned to falsely heralded pairs (maximally mixed).
pub const DEFAULT_CONTAMINATED_FIDELITY: f64 = 0.25;

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("only {expected:.1} genuine events expected in {n_trials} trials, need at least 100")]
    UnderSampled { expected: f64, n_trials: u64 },
    #[error("no genuine event observed")]
    NoSuccesses,
    #[error("contaminated-pair fidelity {0} is not in [0, 1]")]
    InvalidFidelity(f64),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_trials: u64,
    pub model: DetectionModel,
    pub lambda: f64,
    pub signature: Signature,
    /// Storage parameters used for the fidelity of genuine pairs.
    pub zeeman: ZeemanParams,
    pub contaminated_fidelity: f64,
}

impl SamplerConfig {
    pub fn new(seed: u64, n_trials: u64, model: DetectionModel, lambda: f64) -> Self {
        SamplerConfig {
            seed,
            n_trials,
            model,
            lambda,
            signature: Signature::StokesPair,
            zeeman: ZeemanParams { omega_m: 1.0, omega_n: 0.0, tau: std::f64::consts::FRAC_PI_2 },
            contaminated_fidelity: DEFAULT_CONTAMINATED_FIDELITY,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n_trials == 0 {
            return Err(SamplerError::NoTrials);
        }
        if !(0.0..=1.0).contains(&self.contaminated_fidelity) {
            return Err(SamplerError::InvalidFidelity(self.contaminated_fidelity));
        }
        self.model.validate()?;
        crate::stats::poisson_p(self.lambda, 0)?;
        Ok(())
    }
}

/// One click in a detection window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Detection {
    #[serde(serialize_with = "serialize_slot")]
    pub slot: Slot,
    #[serde(serialize_with = "serialize_pol")]
    pub polarization: Polarization,
    pub is_dark: bool,
}

fn serialize_slot<S: serde::Serializer>(slot: &Slot, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(slot.name())
}

fn serialize_pol<S: serde::Serializer>(p: &Polarization, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(if *p == Polarization::Plus { "+" } else { "-" })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub n_created: u32,
    pub stokes_detections: Vec<Detection>,
    /// Exactly two Stokes clicks, of opposite polarization.
    pub heralded: bool,
    pub as_detections: Vec<Detection>,
    pub true_class: EventKey,
}

impl TrialOutcome {
    pub fn matches(&self, signature: Signature) -> bool {
        self.true_class.matches(signature)
    }

    pub fn is_success(&self, signature: Signature) -> bool {
        self.true_class.is_success(signature)
    }
}

/// Substream for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_polarization<R: Rng + ?Sized>(rng: &mut R) -> Polarization {
    if rng.random_bool(0.5) {
        Polarization::Plus
    } else {
        Polarization::Minus
    }
}

fn dark_click<R: Rng + ?Sized>(rng: &mut R, p_dc: f64, slot: Slot, into: &mut Vec<Detection>) -> u32 {
    if p_dc > 0.0 && rng.random_bool(p_dc) {
        into.push(Detection { slot, polarization: random_polarization(rng), is_dark: true });
        1
    } else {
        0
    }
}

/// Draws one full trial: creations, Stokes detections and darks, two reads
/// and their anti-Stokes detections.
pub fn sample_trial<R: Rng + ?Sized>(rng: &mut R, config: &SamplerConfig) -> TrialOutcome {
    let model = &config.model;
    let n_created = if config.lambda > 0.0 {
        let poisson = Poisson::new(config.lambda).expect("lambda validated positive");
        poisson.sample(rng) as u32
    } else {
        0
    };

    let mut stokes_detections = Vec::new();
    let mut stokes_detected = 0;
    for _ in 0..n_created {
        let slot = if rng.random_bool(0.5) { Slot::W1 } else { Slot::W2 };
        let polarization = random_polarization(rng);
        if rng.random_bool(model.p_detect_stokes) {
            stokes_detections.push(Detection { slot, polarization, is_dark: false });
            stokes_detected += 1;
        }
    }
    let mut stokes_darks = 0;
    for slot in [Slot::W1, Slot::W2] {
        stokes_darks += dark_click(rng, model.p_dc, slot, &mut stokes_detections);
    }
    let heralded = stokes_detections.len() == 2
        && stokes_detections[0].polarization != stokes_detections[1].polarization;

    let mut as_detections = Vec::new();
    let mut remaining = n_created;
    let mut as_emitted = [0; 2];
    let mut as_detected = [0; 2];
    let mut as_darks = [0; 2];
    for (i, slot) in [Slot::A, Slot::B].into_iter().enumerate() {
        for _ in 0..remaining {
            if rng.random_bool(model.p_read) {
                as_emitted[i] += 1;
                let polarization = random_polarization(rng);
                if rng.random_bool(model.p_detect_as) {
                    as_detections.push(Detection { slot, polarization, is_dark: false });
                    as_detected[i] += 1;
                }
            }
        }
        remaining -= as_emitted[i];
        as_darks[i] = dark_click(rng, model.p_dc, slot, &mut as_detections);
    }

    TrialOutcome {
        n_created,
        stokes_detections,
        heralded,
        as_detections,
        true_class: EventKey { n_created, stokes_detected, stokes_darks, as_emitted, as_detected, as_darks },
    }
}

/// Trial `index` of the run described by `config`.
pub fn trial(config: &SamplerConfig, index: u64) -> TrialOutcome {
    sample_trial(&mut trial_rng(config.seed, index), config)
}

/// Integer event counts of a batch of trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub trials: u64,
    pub signature_success: u64,
    pub signature_false: u64,
    pub heralded: u64,
    pub heralded_success: u64,
    pub heralded_false: u64,
    pub two_stokes_clicks: u64,
}

impl Tally {
    fn record(&mut self, outcome: &TrialOutcome, signature: Signature) {
        self.trials += 1;
        let matches = outcome.matches(signature);
        let success = matches && outcome.is_success(signature);
        if matches {
            if success {
                self.signature_success += 1;
            } else {
                self.signature_false += 1;
            }
        }
        if outcome.stokes_detections.len() == 2 {
            self.two_stokes_clicks += 1;
        }
        if outcome.heralded && matches {
            self.heralded += 1;
            if success {
                self.heralded_success += 1;
            } else {
                self.heralded_false += 1;
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.signature_success += other.signature_success;
        self.signature_false += other.signature_false;
        self.heralded += other.heralded;
        self.heralded_success += other.heralded_success;
        self.heralded_false += other.heralded_false;
        self.two_stokes_clicks += other.two_stokes_clicks;
        self
    }
}

/// Runs trials `range` and counts them; partitioned across threads in fixed
/// chunks so the result is independent of the worker count.
pub fn tally(config: &SamplerConfig) -> Tally {
    let n = config.n_trials;
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for i in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
                t.record(&trial(config, i), config.signature);
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

/// Summary of a Monte Carlo run. `p_success` / `p_false` are per-trial
/// frequencies of the configured signature; `p_herald` and `fidelity_est`
/// additionally require opposite Stokes polarizations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub seed: u64,
    pub n_trials: u64,
    pub signature: Signature,
    pub lambda: f64,
    pub p_herald: f64,
    pub p_success: f64,
    pub p_false: f64,
    pub ratio: f64,
    pub fidelity_est: f64,
    pub protocol_fidelity: f64,
    pub se_p_herald: f64,
    pub se_p_success: f64,
    pub se_p_false: f64,
    pub se_ratio: f64,
    pub se_fidelity_est: f64,
    pub opposite_fraction: f64,
}

fn frequency(count: u64, n: u64) -> (f64, f64) {
    let p = count as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Expected number of genuine events of `config.signature`.
pub fn expected_successes(config: &SamplerConfig) -> Result<f64, SamplerError> {
    let n_max = auto_truncation(config.lambda)?;
    let sf = success_and_false_for(config.lambda, &config.model, config.signature, n_max)?;
    Ok(sf.p_success * config.n_trials as f64)
}

pub fn estimate(config: &SamplerConfig) -> Result<Estimate, SamplerError> {
    config.validate()?;
    let expected = expected_successes(config)?;
    if expected < MIN_EXPECTED_SUCCESSES {
        return Err(SamplerError::UnderSampled { expected, n_trials: config.n_trials });
    }
    let protocol_fidelity =
        run_protocol(&config.zeeman, (Polarization::Plus, Polarization::Minus))?.fidelity.fidelity;

    let t = tally(config);
    if t.signature_success == 0 || t.heralded_success == 0 {
        return Err(SamplerError::NoSuccesses);
    }
    let n = t.trials;
    let (p_herald, se_p_herald) = frequency(t.heralded, n);
    let (p_success, se_p_success) = frequency(t.signature_success, n);
    let (p_false, se_p_false) = frequency(t.signature_false, n);
    let ratio = p_false / p_success;
    // Delta method on the log of a ratio of two multinomial cells.
    let se_ratio = if t.signature_false == 0 {
        0.0
    } else {
        let var_log = (1.0 - p_false) / (n as f64 * p_false)
            + (1.0 - p_success) / (n as f64 * p_success)
            + 2.0 / n as f64;
        ratio * var_log.sqrt()
    };

    let kept = t.heralded as f64;
    let q_false = t.heralded_false as f64 / kept;
    let fidelity_est = protocol_fidelity - q_false * (protocol_fidelity - config.contaminated_fidelity);
    let se_fidelity_est =
        (protocol_fidelity - config.contaminated_fidelity).abs() * (q_false * (1.0 - q_false) / kept).sqrt();
    let opposite_fraction =
        if t.two_stokes_clicks == 0 { 0.0 } else { t.heralded as f64 / t.two_stokes_clicks as f64 };

    Ok(Estimate {
        seed: config.seed,
        n_trials: n,
        signature: config.signature,
        lambda: config.lambda,
        p_herald,
        p_success,
        p_false,
        ratio,
        fidelity_est,
        protocol_fidelity,
        se_p_herald,
        se_p_success,
        se_p_false,
        se_ratio,
        se_fidelity_est,
        opposite_fraction,
    })
}

/// Per-trial CSV rows for the first `limit` trials.
pub fn trials_csv(config: &SamplerConfig, limit: u64) -> String {
    let mut out = String::from(
        "trial,n_created,stokes_detected,stokes_darks,heralded,as_emitted_a,as_emitted_b,as_clicks_a,as_clicks_b,success\n",
    );
    for i in 0..limit.min(config.n_trials) {
        let t = trial(config, i);
        let k = &t.true_class;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            i,
            t.n_created,
            k.stokes_detected,
            k.stokes_darks,
            t.heralded as u8,
            k.as_emitted[0],
            k.as_emitted[1],
            k.as_clicks(0),
            k.as_clicks(1),
            t.is_success(config.signature) as u8
        ));
    }
    out
}
