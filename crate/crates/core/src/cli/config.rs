//! Flat `key = value` run configuration shared by every subcommand.
//!
//! Values are layered: built-in defaults, then a config file, then
//! command-line overrides, each later layer replacing earlier keys.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::collective::{StateError, ZeemanParams};
use crate::stats::{DetectionModel, Signature};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("invalid sweep for {0}: count must be >= 1 and bounds finite")]
    InvalidSweep(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Protocol,
    Stats,
    Mc,
    Optimize,
    Levels,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Protocol => "protocol",
            Subcommand::Stats => "stats",
            Subcommand::Mc => "mc",
            Subcommand::Optimize => "optimize",
            Subcommand::Levels => "levels",
        }
    }
}

/// Inclusive linear sweep of `count` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn points(&self, what: &'static str) -> Result<Vec<f64>, ConfigError> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(ConfigError::InvalidSweep(what));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.start + step * i as f64).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub lambda: f64,
    pub p_detect: f64,
    pub p_detect_as: f64,
    pub dark_rate_hz: f64,
    pub pulse_ns: f64,
    pub rep_rate_hz: f64,
    pub p_read: f64,
    pub n_max: u32,
    /// Storage-manifold Zeeman splitting, rad/s.
    pub omega_m: f64,
    /// Ground-manifold Zeeman splitting, rad/s.
    pub omega_n: f64,
    /// Storage time between the reads, s.
    pub tau: f64,
    /// θ sweep in units of π.
    pub theta: Sweep,
    pub lambda_sweep: Sweep,
    pub seed: u64,
    pub n_trials: u64,
    pub target_ratio: f64,
    pub contaminated_fidelity: f64,
    pub signature: Signature,
    pub trials_limit: u64,
    pub output: Option<PathBuf>,
    pub trials_output: Option<PathBuf>,
}

/// Every recognised key, in the order they are echoed into output headers.
pub const KEYS: &[&str] = &[
    "lambda",
    "p_detect",
    "p_detect_as",
    "dark_rate_hz",
    "pulse_ns",
    "rep_rate_hz",
    "p_read",
    "n_max",
    "omega_m",
    "omega_n",
    "tau",
    "theta_start",
    "theta_stop",
    "theta_count",
    "lambda_start",
    "lambda_stop",
    "lambda_count",
    "seed",
    "n_trials",
    "target_ratio",
    "contaminated_fidelity",
    "signature",
    "trials_limit",
    "output",
    "trials_output",
];

impl RunConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        RunConfig {
            subcommand,
            lambda: 0.2,
            p_detect: 0.75,
            p_detect_as: 1.0,
            dark_rate_hz: 10.0,
            pulse_ns: 100.0,
            rep_rate_hz: 10e6,
            p_read: 0.5,
            n_max: 8,
            omega_m: 2.0 * PI * 15e6,
            omega_n: 2.0 * PI * 5e6,
            tau: 25e-9,
            theta: Sweep { start: 0.0, stop: 1.0, count: 101 },
            lambda_sweep: Sweep { start: 0.01, stop: 0.4, count: 40 },
            seed: 1,
            n_trials: 1_000_000,
            target_ratio: 0.05,
            contaminated_fidelity: 0.25,
            signature: Signature::StokesPair,
            trials_limit: 10_000,
            output: None,
            trials_output: None,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let invalid = || ConfigError::InvalidValue { key: key.to_string(), value: value.to_string() };
        let float = || value.parse::<f64>().map_err(|_| invalid());
        let count = || value.parse::<usize>().map_err(|_| invalid());
        let int = || value.parse::<u64>().map_err(|_| invalid());
        match key {
            "lambda" => self.lambda = float()?,
            "p_detect" => self.p_detect = float()?,
            "p_detect_as" => self.p_detect_as = float()?,
            "dark_rate_hz" => self.dark_rate_hz = float()?,
            "pulse_ns" => self.pulse_ns = float()?,
            "rep_rate_hz" => self.rep_rate_hz = float()?,
            "p_read" => self.p_read = float()?,
            "n_max" => self.n_max = value.parse().map_err(|_| invalid())?,
            "omega_m" => self.omega_m = float()?,
            "omega_n" => self.omega_n = float()?,
            "tau" => self.tau = float()?,
            "theta_start" => self.theta.start = float()?,
            "theta_stop" => self.theta.stop = float()?,
            "theta_count" => self.theta.count = count()?,
            "lambda_start" => self.lambda_sweep.start = float()?,
            "lambda_stop" => self.lambda_sweep.stop = float()?,
            "lambda_count" => self.lambda_sweep.count = count()?,
            "seed" => self.seed = int()?,
            "n_trials" => self.n_trials = int()?,
            "target_ratio" => self.target_ratio = float()?,
            "contaminated_fidelity" => self.contaminated_fidelity = float()?,
            "signature" => self.signature = Signature::parse(value).ok_or_else(invalid)?,
            "trials_limit" => self.trials_limit = int()?,
            "output" => self.output = Some(PathBuf::from(value)),
            "trials_output" => self.trials_output = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a config file body. `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Some(match key {
            "lambda" => self.lambda.to_string(),
            "p_detect" => self.p_detect.to_string(),
            "p_detect_as" => self.p_detect_as.to_string(),
            "dark_rate_hz" => self.dark_rate_hz.to_string(),
            "pulse_ns" => self.pulse_ns.to_string(),
            "rep_rate_hz" => self.rep_rate_hz.to_string(),
            "p_read" => self.p_read.to_string(),
            "n_max" => self.n_max.to_string(),
            "omega_m" => self.omega_m.to_string(),
            "omega_n" => self.omega_n.to_string(),
            "tau" => self.tau.to_string(),
            "theta_start" => self.theta.start.to_string(),
            "theta_stop" => self.theta.stop.to_string(),
            "theta_count" => self.theta.count.to_string(),
            "lambda_start" => self.lambda_sweep.start.to_string(),
            "lambda_stop" => self.lambda_sweep.stop.to_string(),
            "lambda_count" => self.lambda_sweep.count.to_string(),
            "seed" => self.seed.to_string(),
            "n_trials" => self.n_trials.to_string(),
            "target_ratio" => self.target_ratio.to_string(),
            "contaminated_fidelity" => self.contaminated_fidelity.to_string(),
            "signature" => self.signature.name().to_string(),
            "trials_limit" => self.trials_limit.to_string(),
            "output" => path(&self.output),
            "trials_output" => path(&self.trials_output),
            _ => return None,
        })
    }

    pub fn detection_model(&self) -> DetectionModel {
        DetectionModel::default()
            .with_p_detect(self.p_detect)
            .with_p_detect_as(self.p_detect_as)
            .with_dark_counts(self.dark_rate_hz, self.pulse_ns * 1e-9)
            .with_rep_rate(self.rep_rate_hz)
            .with_p_read(self.p_read)
    }

    pub fn zeeman(&self) -> Result<ZeemanParams, StateError> {
        ZeemanParams::new(self.omega_m, self.omega_n, self.tau)
    }
}

/// `key=value` pairs for every key except output paths, space separated.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = KEYS
            .iter()
            .filter(|k| !k.ends_with("output"))
            .map(|k| format!("{}={}", k, self.get(k).unwrap_or_default()))
            .collect();
        f.write_str(&pairs.join(" "))
    }
}
