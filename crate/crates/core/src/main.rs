use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser};

use heralded_bell::cli::{cmd_levels, cmd_mc, cmd_optimize, cmd_protocol, cmd_stats, RunConfig, Subcommand};
use heralded_bell::Error;

/// Heralded Bell-pair simulator: collective-state protocol sweeps, photon
/// statistics, Monte Carlo and the λ rate/fidelity trade-off.
///
/// Settings are resolved as: command-line flag, then `--config` file, then
/// built-in default. Any config key can also be given with `--set key=value`.
#[derive(Parser, Debug)]
#[command(name = "heralded-bell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Sweep θ = (ω_m − ω_n)τ and write fidelity / branch weights as CSV.
    Protocol(Common),
    /// Sweep λ and write success/false probabilities and the S(n);AS(m) breakdown as CSV.
    Stats(Common),
    /// Monte Carlo estimate; JSON summary, optional per-trial CSV.
    Mc(Common),
    /// Largest λ meeting `target_ratio`, with the resulting pair rate (JSON).
    Optimize(Common),
    /// Dump the transition amplitude table as CSV.
    Levels(Common),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set n_max=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output path (stdout when omitted).
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Mean excitation number per shot.
    #[arg(long)]
    lambda: Option<String>,
    /// Stokes detection efficiency.
    #[arg(long)]
    p_detect: Option<String>,
    /// Anti-Stokes detection efficiency.
    #[arg(long)]
    p_detect_as: Option<String>,
    /// Detector dark-count rate, Hz.
    #[arg(long)]
    dark_rate_hz: Option<String>,
    /// Detection window, ns.
    #[arg(long)]
    pulse_ns: Option<String>,
    /// Repetition rate, Hz.
    #[arg(long)]
    rep_rate_hz: Option<String>,
    /// Read conversion probability per excitation.
    #[arg(long)]
    p_read: Option<String>,
    /// Excitation-number truncation for the class enumeration.
    #[arg(long)]
    n_max: Option<String>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<String>,
    /// Monte Carlo trial count.
    #[arg(long)]
    n_trials: Option<String>,
    /// Target false/success ratio for `optimize`.
    #[arg(long)]
    target_ratio: Option<String>,
    /// Per-trial CSV path for `mc`.
    #[arg(long)]
    trials_output: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let named = [
            ("lambda", &self.lambda),
            ("p_detect", &self.p_detect),
            ("p_detect_as", &self.p_detect_as),
            ("dark_rate_hz", &self.dark_rate_hz),
            ("pulse_ns", &self.pulse_ns),
            ("rep_rate_hz", &self.rep_rate_hz),
            ("p_read", &self.p_read),
            ("n_max", &self.n_max),
            ("seed", &self.seed),
            ("n_trials", &self.n_trials),
            ("target_ratio", &self.target_ratio),
        ];
        let mut out: Vec<(String, String)> =
            named.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect();
        if let Some(p) = &self.output {
            out.push(("output".into(), p.display().to_string()));
        }
        if let Some(p) = &self.trials_output {
            out.push(("trials_output".into(), p.display().to_string()));
        }
        out
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|source| Error::Io { path: p.display().to_string(), source })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve(subcommand: Subcommand, common: &Common) -> Result<RunConfig, Error> {
    let mut config = RunConfig::new(subcommand);
    if let Some(path) = &common.config {
        config.apply_file(&read(path)?)?;
    }
    for (key, value) in common.overrides() {
        config.set(&key, &value)?;
    }
    for kv in &common.set {
        let (key, value) = kv.split_once('=').ok_or(heralded_bell::cli::ConfigError::Syntax { line: 0 })?;
        config.set(key.trim(), value)?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Error> {
    let (subcommand, common) = match &cli.command {
        Command::Protocol(c) => (Subcommand::Protocol, c),
        Command::Stats(c) => (Subcommand::Stats, c),
        Command::Mc(c) => (Subcommand::Mc, c),
        Command::Optimize(c) => (Subcommand::Optimize, c),
        Command::Levels(c) => (Subcommand::Levels, c),
    };
    let config = resolve(subcommand, common)?;
    let output = config.output.as_deref();
    match subcommand {
        Subcommand::Protocol => write(output, &cmd_protocol(&config)?),
        Subcommand::Stats => write(output, &cmd_stats(&config)?),
        Subcommand::Optimize => write(output, &cmd_optimize(&config)?),
        Subcommand::Levels => write(output, &cmd_levels(&config)?),
        Subcommand::Mc => {
            let (summary, trials) = cmd_mc(&config)?;
            write(output, &summary)?;
            if let (Some(csv), Some(path)) = (trials, config.trials_output.as_deref()) {
                write(Some(path), &csv)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message={:?}", e.kind(), message);
            ExitCode::from(2)
        }
    }
}
