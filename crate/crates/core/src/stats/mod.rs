//! Photon-counting model of the heralded experiment.
//!
//! Stokes photons from the two write pulses are treated as one Poisson
//! process with mean `λ`. Each photon is detected independently with
//! efficiency `p_detect`; each detection window additionally fires a dark
//! count with probability `p_dc`. Reads convert each stored excitation with
//! probability `p_read`, and anti-Stokes photons are detected with
//! `p_detect_as`.

mod events;
mod optimize;

use serde::Serialize;
use thiserror::Error;

pub use events::{
    auto_truncation, class_columns, class_groups, enumerate_event_classes, poisson_tail, success_and_false,
    success_and_false_for, ClassColumn, EventClass, EventKey, Signature, SuccessFalse, DEFAULT_N_MAX,
    MAX_TRUNCATION_DEFICIT,
};
pub use optimize::{lambda_for_fidelity, ratio_floor, LambdaSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("Poisson mean must be finite and non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{name} = {value} must be finite and non-negative")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("p_dc = {p_dc} disagrees with dark_rate * pulse_duration = {expected}")]
    InconsistentDarkCounts { p_dc: f64, expected: f64 },
    #[error("cannot detect {detected} of {created} photons")]
    DetectedExceedsCreated { created: u32, detected: u32 },
    #[error("truncation n_max = {0} is below the minimum of 4")]
    TruncationTooSmall(u32),
    #[error("Poisson tail beyond the truncation is {deficit:e}, above the allowed 1e-9")]
    TruncationDeficit { deficit: f64 },
    #[error("success probability is zero, false/success ratio undefined")]
    NoSuccess,
    #[error("target ratio {target} is below the dark-count floor {floor}")]
    BelowDarkFloor { target: f64, floor: f64 },
    #[error("no lambda up to {lambda_max} reaches the target ratio {target}")]
    Unbracketed { target: f64, lambda_max: f64 },
    #[error("false/success ratio is not increasing near lambda = {0}")]
    NonMonotone(f64),
}

/// Detector and timing parameters. Defaults are the headline values:
/// 75 % Stokes efficiency, ideal anti-Stokes detection, 10 Hz dark rate over
/// a 100 ns window, 10 MHz repetition and 50 % read conversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionModel {
    pub p_detect_stokes: f64,
    pub p_detect_as: f64,
    /// Dark-count probability per detection window.
    pub p_dc: f64,
    /// Detection window length, seconds.
    pub pulse_duration: Option<f64>,
    /// Detector dark-count rate, Hz.
    pub dark_rate: Option<f64>,
    /// Experiment repetition rate, Hz.
    pub rep_rate: f64,
    /// Per-excitation conversion probability of one read pulse.
    pub p_read: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel {
            p_detect_stokes: 0.75,
            p_detect_as: 1.0,
            p_dc: 10.0 * 100e-9,
            pulse_duration: Some(100e-9),
            dark_rate: Some(10.0),
            rep_rate: 10e6,
            p_read: 0.5,
        }
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<(), StatsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(StatsError::InvalidProbability { name, value })
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<(), StatsError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidRate { name, value })
    }
}

impl DetectionModel {
    pub fn with_p_detect(mut self, p: f64) -> Self {
        self.p_detect_stokes = p;
        self
    }

    pub fn with_p_detect_as(mut self, p: f64) -> Self {
        self.p_detect_as = p;
        self
    }

    pub fn with_p_read(mut self, p: f64) -> Self {
        self.p_read = p;
        self
    }

    pub fn with_rep_rate(mut self, hz: f64) -> Self {
        self.rep_rate = hz;
        self
    }

    /// Sets the dark-count probability directly, dropping rate and window.
    pub fn with_p_dc(mut self, p_dc: f64) -> Self {
        self.p_dc = p_dc;
        self.dark_rate = None;
        self.pulse_duration = None;
        self
    }

    /// Derives `p_dc = rate * window`.
    pub fn with_dark_counts(mut self, rate_hz: f64, window_s: f64) -> Self {
        self.dark_rate = Some(rate_hz);
        self.pulse_duration = Some(window_s);
        self.p_dc = rate_hz * window_s;
        self
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        check_probability("p_detect", self.p_detect_stokes)?;
        check_probability("p_detect_as", self.p_detect_as)?;
        check_probability("p_dc", self.p_dc)?;
        check_probability("p_read", self.p_read)?;
        check_rate("rep_rate", self.rep_rate)?;
        if let Some(rate) = self.dark_rate {
            check_rate("dark_rate", rate)?;
        }
        if let Some(window) = self.pulse_duration {
            check_rate("pulse_duration", window)?;
        }
        if let (Some(rate), Some(window)) = (self.dark_rate, self.pulse_duration) {
            let expected = rate * window;
            if (self.p_dc - expected).abs() > 1e-12 * expected.abs().max(1e-6) {
                return Err(StatsError::InconsistentDarkCounts { p_dc: self.p_dc, expected });
            }
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<(), StatsError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(StatsError::NegativeLambda(lambda))
    }
}

/// `e^{-λ} λ^n / n!`.
pub fn poisson_p(lambda: f64, n: u32) -> Result<f64, StatsError> {
    check_lambda(lambda)?;
    Ok(poisson_unchecked(lambda, n))
}

pub(crate) fn poisson_unchecked(lambda: f64, n: u32) -> f64 {
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    // Log space keeps large n and λ from under/overflowing the product.
    let ln = n as f64 * lambda.ln() - lambda - ln_factorial(n);
    ln.exp()
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn binomial_coefficient(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `C(n, k) p^k (1-p)^(n-k)`: probability that exactly `k` of `n` photons
/// are registered.
pub fn detect_exactly(n: u32, k: u32, p: f64) -> Result<f64, StatsError> {
    if k > n {
        return Err(StatsError::DetectedExceedsCreated { created: n, detected: k });
    }
    check_probability("efficiency", p)?;
    Ok(binomial_unchecked(n, k, p))
}

pub(crate) fn binomial_unchecked(n: u32, k: u32, p: f64) -> f64 {
    binomial_coefficient(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// `P_λ(2) · p_detect²`.
pub fn p_det_two(lambda: f64, model: &DetectionModel) -> Result<f64, StatsError> {
    model.validate()?;
    Ok(poisson_p(lambda, 2)? * model.p_detect_stokes.powi(2))
}

/// First-order probability of a single dark count in a window:
/// `P_λ(0) p_dc + P_λ(1) (1 - p_detect) p_dc`.
pub fn dark_count_prob_one(lambda: f64, model: &DetectionModel) -> Result<f64, StatsError> {
    model.validate()?;
    let p0 = poisson_p(lambda, 0)?;
    let p1 = poisson_p(lambda, 1)?;
    Ok(p0 * model.p_dc + p1 * (1.0 - model.p_detect_stokes) * model.p_dc)
}

/// Probability of exactly one anti-Stokes emission out of two stored
/// excitations, `2 p_read (1 - p_read)`; maximal (0.5) at `p_read = 0.5`.
pub fn single_read_probability(p_read: f64) -> Result<f64, StatsError> {
    detect_exactly(2, 1, p_read)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairRate {
    pub p_per_shot: f64,
    pub rate_hz: f64,
}

/// Entangled pairs per shot and per second:
/// `½ · P_det(2,2) · (P_B(1) · p_detect_as)²` times the repetition rate.
/// The ½ keeps only opposite-polarization Stokes heralds.
pub fn pair_rate(lambda: f64, model: &DetectionModel) -> Result<PairRate, StatsError> {
    let read = single_read_probability(model.p_read)? * model.p_detect_as;
    let p_per_shot = 0.5 * p_det_two(lambda, model)? * read * read;
    Ok(PairRate { p_per_shot, rate_hz: p_per_shot * model.rep_rate })
}
