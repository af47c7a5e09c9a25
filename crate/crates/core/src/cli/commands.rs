use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::collective::{Ensemble, PairBasis, Polarization, ZeemanParams};
use crate::levels::{AmplitudeTable, LevelScheme};
use crate::sampler::{self, SamplerConfig};
use crate::stats::{
    class_columns, class_groups, enumerate_event_classes, lambda_for_fidelity, pair_rate,
    success_and_false_for, Signature,
};
use crate::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn header(schema: &str, config: &RunConfig) -> String {
    format!("# heralded-bell {} schema={}-v1\n# config: {}\n", VERSION, schema, config)
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else if x.abs() < 1e-4 || x.abs() >= 1e15 {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Fidelity sweep over θ = (ω_m - ω_n) τ; `theta_*` keys are in units of π
/// and τ is chosen per point from the configured splittings.
pub fn cmd_protocol(config: &RunConfig) -> Result<String, Error> {
    let ensemble = Ensemble::new(LevelScheme::default())?;
    let thetas = config.theta.points("theta")?;
    let rows = thetas
        .par_iter()
        .map(|&t| {
            let theta = t * PI;
            let zp = ZeemanParams::from_theta(theta, config.omega_m, config.omega_n)?;
            let out = ensemble.run_protocol(&zp, (Polarization::Plus, Polarization::Minus))?;
            let mm = out.rho.population(PairBasis::MinusMinus);
            Ok(format!(
                "{},{},{},{},{}\n",
                num(theta),
                num(out.fidelity.fidelity),
                num(out.fidelity.phi_star),
                num(mm),
                num(1.0 - mm)
            ))
        })
        .collect::<Result<Vec<String>, Error>>()?;

    let mut out = header("protocol", config);
    out.push_str("theta,fidelity,bell_phase,branch_weight_mm,bell_weight\n");
    out.extend(rows);
    Ok(out)
}

/// λ sweep of the two-Stokes-click success/false probabilities, followed by
/// the full-signature totals and their `S(n);AS(m)` breakdown.
pub fn cmd_stats(config: &RunConfig) -> Result<String, Error> {
    let model = config.detection_model();
    model.validate()?;
    let lambdas = config.lambda_sweep.points("lambda")?;
    let columns = class_columns();
    let rows = lambdas
        .par_iter()
        .map(|&lambda| {
            let stokes = success_and_false_for(lambda, &model, Signature::StokesPair, config.n_max)?;
            let full = success_and_false_for(lambda, &model, Signature::StokesAndAntiStokes, config.n_max)?;
            let groups = class_groups(&enumerate_event_classes(lambda, &model, config.n_max)?);
            let mut row = vec![
                num(lambda),
                num(stokes.p_success),
                num(stokes.p_false),
                num(stokes.ratio().unwrap_or(f64::NAN)),
                num(stokes.fidelity_estimate().unwrap_or(f64::NAN)),
                num(full.p_success),
                num(full.p_false),
                num(full.ratio().unwrap_or(f64::NAN)),
            ];
            row.extend(columns.iter().map(|c| num(groups[c])));
            Ok(row.join(",") + "\n")
        })
        .collect::<Result<Vec<String>, Error>>()?;

    let mut out = header("stats", config);
    let mut names: Vec<String> = [
        "lambda",
        "p_success",
        "p_false",
        "ratio",
        "fidelity_est",
        "full_p_success",
        "full_p_false",
        "full_ratio",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend(columns.iter().map(|c| c.label()));
    out.push_str(&names.join(","));
    out.push('\n');
    out.extend(rows);
    Ok(out)
}

pub fn sampler_config(config: &RunConfig) -> Result<SamplerConfig, Error> {
    Ok(SamplerConfig {
        seed: config.seed,
        n_trials: config.n_trials,
        model: config.detection_model(),
        lambda: config.lambda,
        signature: config.signature,
        zeeman: config.zeeman()?,
        contaminated_fidelity: config.contaminated_fidelity,
    })
}

/// Monte Carlo summary as a flat JSON object, plus per-trial CSV rows when
/// `trials_output` is configured.
pub fn cmd_mc(config: &RunConfig) -> Result<(String, Option<String>), Error> {
    let sc = sampler_config(config)?;
    let estimate = sampler::estimate(&sc)?;
    let summary = serde_json::to_string_pretty(&estimate).expect("estimate serializes") + "\n";
    let trials = config.trials_output.as_ref().map(|_| {
        let mut csv = header("trials", config);
        csv.push_str(&sampler::trials_csv(&sc, config.trials_limit));
        csv
    });
    Ok((summary, trials))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizeRecord {
    pub target_ratio: f64,
    pub lambda_star: f64,
    pub ratio: f64,
    pub fidelity_est: f64,
    pub p_per_shot: f64,
    pub rate_hz: f64,
    /// Rate when the anti-Stokes detectors share the Stokes efficiency.
    pub rate_hz_as_matched: f64,
}

pub fn optimize_record(config: &RunConfig) -> Result<OptimizeRecord, Error> {
    let model = config.detection_model();
    let solution = lambda_for_fidelity(config.target_ratio, &model)?;
    let rate = pair_rate(solution.lambda, &model)?;
    let matched = pair_rate(solution.lambda, &model.with_p_detect_as(model.p_detect_stokes))?;
    Ok(OptimizeRecord {
        target_ratio: config.target_ratio,
        lambda_star: solution.lambda,
        ratio: solution.ratio,
        fidelity_est: 1.0 / (1.0 + solution.ratio),
        p_per_shot: rate.p_per_shot,
        rate_hz: rate.rate_hz,
        rate_hz_as_matched: matched.rate_hz,
    })
}

pub fn cmd_optimize(config: &RunConfig) -> Result<String, Error> {
    let record = optimize_record(config)?;
    Ok(serde_json::to_string_pretty(&record).expect("record serializes") + "\n")
}

pub fn cmd_levels(config: &RunConfig) -> Result<String, Error> {
    let table = AmplitudeTable::new(LevelScheme::default())?;
    Ok(header("levels", config) + &table.to_csv())
}
