//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use heralded_bell::collective::{
    run_protocol, zeeman_evolve, Ensemble, PairBasis, Polarization, Slot, ZeemanParams,
};
use heralded_bell::levels::{
    branching_probabilities, clebsch_gordan, AmplitudeTable, LevelScheme, Manifold, Spin,
};
use heralded_bell::sampler::{estimate, SamplerConfig};
use heralded_bell::stats::{
    auto_truncation, lambda_for_fidelity, pair_rate, success_and_false, success_and_false_for,
    DetectionModel, Signature,
};

const OMEGA_M: f64 = 2.0 * PI * 15e6;
const OMEGA_N: f64 = 2.0 * PI * 5e6;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {detail}");
        if !pass {
            self.failures += 1;
        }
    }

    fn error(&mut self, id: &str, name: &str, err: impl std::fmt::Display) {
        self.check(id, name, false, format!("error: {err}"));
    }
}

fn theta_grid() -> Vec<f64> {
    (0..100).map(|i| i as f64 * PI / 99.0).collect()
}

fn bell_point(r: &mut Report) {
    let start = Instant::now();
    let out = ZeemanParams::from_theta(PI / 2.0, OMEGA_M, OMEGA_N)
        .map_err(heralded_bell::Error::from)
        .and_then(|zp| Ok(run_protocol(&zp, (Polarization::Plus, Polarization::Minus))?));
    let elapsed = start.elapsed();
    match out {
        Ok(out) => {
            let dev = (out.fidelity.fidelity - 1.0).abs();
            r.check(
                "C1",
                "Bell point",
                dev <= 1e-9 && elapsed < Duration::from_secs(1),
                format!(
                    "F(π/2) = {:.15}, |F-1| = {dev:.1e} (tol 1e-9), {:.2?} (limit 1 s)",
                    out.fidelity.fidelity, elapsed
                ),
            );
        }
        Err(e) => r.error("C1", "Bell point", e),
    }
}

fn fidelity_and_weight_laws(r: &mut Report) {
    let ens = Ensemble::new(LevelScheme::default()).expect("default scheme");
    let mut worst_f: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    let mut at_zero = f64::NAN;
    for theta in theta_grid() {
        let out = match ZeemanParams::from_theta(theta, OMEGA_M, OMEGA_N)
            .and_then(|zp| ens.run_protocol(&zp, (Polarization::Plus, Polarization::Minus)))
        {
            Ok(out) => out,
            Err(e) => {
                r.error("C2", "fidelity law", &e);
                r.error("C3", "branch weights", e);
                return;
            }
        };
        let c2 = theta.cos().powi(2);
        worst_f = worst_f.max((out.fidelity.fidelity - 1.0 / (2.0 * c2 + 1.0)).abs());
        let mm = out.rho.population(PairBasis::MinusMinus);
        worst_w = worst_w.max((mm - 2.0 * c2 / (2.0 * c2 + 1.0)).abs());
        if theta == 0.0 {
            at_zero = out.fidelity.fidelity;
        }
    }
    let zero_dev = (at_zero - 1.0 / 3.0).abs();
    r.check(
        "C2",
        "fidelity law",
        worst_f <= 1e-10 && zero_dev <= 1e-10,
        format!("max |F - 1/(2cos²θ+1)| = {worst_f:.1e} over 100 θ, F(0) = {at_zero:.15} (tol 1e-10)"),
    );
    r.check(
        "C3",
        "branch weights",
        worst_w <= 1e-10,
        format!("max |w_-- - 2cos²θ/(2cos²θ+1)| = {worst_w:.1e} over 100 θ (tol 1e-10)"),
    );
}

fn headline_probability(r: &mut Report) {
    let model = DetectionModel::default().with_p_detect(0.75).with_p_read(0.5);
    match pair_rate(0.2, &model) {
        Ok(rate) => {
            let dev = (rate.p_per_shot - 1.15e-3).abs();
            let rate_dev = (rate.rate_hz - 1e4).abs() / 1e4;
            r.check(
                "C4",
                "headline probability",
                dev <= 1e-6 && rate_dev <= 0.2,
                format!(
                    "p_per_shot = {:.6e}, |p - 1.15e-3| = {dev:.2e} (tol 1e-6); rate = {:.1} Hz, {:.1}% from 10 kHz (tol 20%)",
                    rate.p_per_shot,
                    rate.rate_hz,
                    100.0 * rate_dev
                ),
            );
        }
        Err(e) => r.error("C4", "headline probability", e),
    }
}

fn fidelity_lambda_point(r: &mut Report) {
    let model = DetectionModel::default().with_p_detect(0.75).with_p_dc(1e-6);
    match success_and_false(0.2, &model).and_then(|sf| Ok((sf, sf.ratio()?))) {
        Ok((sf, ratio)) => r.check(
            "C5",
            "fidelity/λ point",
            (0.025..=0.10).contains(&ratio),
            format!(
                "p_success = {:.4e}, p_false = {:.4e}, ratio = {ratio:.4} (band [0.025, 0.10]), fidelity ≈ {:.3}",
                sf.p_success,
                sf.p_false,
                1.0 / (1.0 + ratio)
            ),
        ),
        Err(e) => r.error("C5", "fidelity/λ point", e),
    }
}

fn low_efficiency(r: &mut Report) {
    let model = DetectionModel::default().with_p_detect(0.3);
    let result = lambda_for_fidelity(0.05, &model).and_then(|sol| {
        let rate = pair_rate(sol.lambda, &model)?;
        let matched = pair_rate(sol.lambda, &model.with_p_detect_as(model.p_detect_stokes))?;
        Ok((sol, rate, matched))
    });
    match result {
        Ok((sol, rate, matched)) => r.check(
            "C6",
            "low-efficiency regime",
            (50.0..=500.0).contains(&rate.rate_hz),
            format!(
                "λ* = {:.5}, rate = {:.1} Hz with ideal AS detection (band [50, 500]); {:.1} Hz with AS efficiency 0.3",
                sol.lambda, rate.rate_hz, matched.rate_hz
            ),
        ),
        Err(e) => r.error("C6", "low-efficiency regime", e),
    }
}

fn oracle_equivalence(r: &mut Report) {
    let start = Instant::now();
    let n = 1_000_000;
    let mut worst: f64 = 0.0;
    let mut worst_cell = String::new();
    for (i, &lambda) in [0.05, 0.2, 0.4].iter().enumerate() {
        for (j, &p) in [0.3, 0.75, 1.0].iter().enumerate() {
            let model = DetectionModel::default().with_p_detect(p);
            let config = SamplerConfig::new(1000 + 10 * i as u64 + j as u64, n, model, lambda);
            let analytic = auto_truncation(lambda)
                .and_then(|n_max| success_and_false_for(lambda, &model, Signature::StokesPair, n_max));
            let (est, sf) = match (estimate(&config), analytic) {
                (Ok(est), Ok(sf)) => (est, sf),
                (Err(e), _) => return r.error("C7", "oracle equivalence", e),
                (_, Err(e)) => return r.error("C7", "oracle equivalence", e),
            };
            for (what, observed, expected) in
                [("p_success", est.p_success, sf.p_success), ("p_false", est.p_false, sf.p_false)]
            {
                let se = (expected * (1.0 - expected) / n as f64).sqrt();
                let z = if se > 0.0 {
                    (observed - expected).abs() / se
                } else if observed == expected {
                    0.0
                } else {
                    f64::INFINITY
                };
                if z > worst {
                    worst = z;
                    worst_cell = format!("{what} at λ={lambda}, p={p}");
                }
            }
        }
    }
    let elapsed = start.elapsed();
    r.check(
        "C7",
        "oracle equivalence",
        worst <= 4.0 && elapsed < Duration::from_secs(300),
        format!("worst deviation {worst:.2} SE ({worst_cell}) over 3×3 grid at 1e6 trials (tol 4), {elapsed:.1?} (limit 300 s)"),
    );
}

fn structural_invariants(r: &mut Report) {
    let mut problems = Vec::new();

    let s = Spin::from_twice;
    let mut orth: f64 = 0.0;
    for j1 in 0..=6i32 {
        for j2 in 0..=6 {
            let js: Vec<i32> = ((j1 - j2).abs()..=j1 + j2).step_by(2).collect();
            for &ja in &js {
                for &jb in &js {
                    for ma in (-ja..=ja).step_by(2) {
                        for mb in (-jb..=jb).step_by(2) {
                            let mut sum = 0.0;
                            for m1 in (-j1..=j1).step_by(2) {
                                for m2 in (-j2..=j2).step_by(2) {
                                    let a = clebsch_gordan(s(j1), s(m1), s(j2), s(m2), s(ja), s(ma))
                                        .unwrap_or(f64::NAN);
                                    let b = clebsch_gordan(s(j1), s(m1), s(j2), s(m2), s(jb), s(mb))
                                        .unwrap_or(f64::NAN);
                                    sum += a * b;
                                }
                            }
                            let want = if ja == jb && ma == mb { 1.0 } else { 0.0 };
                            orth = orth.max((sum - want).abs());
                        }
                    }
                }
            }
        }
    }
    if orth.is_nan() || orth > 1e-12 {
        problems.push(format!("CG orthogonality {orth:.1e}"));
    }

    let scheme = LevelScheme::default();
    let mut branching: f64 = 0.0;
    for target in [Manifold::Ground, Manifold::Storage] {
        for m in scheme.f_excited.projections() {
            let total = scheme
                .sublevel(Manifold::Excited, m)
                .and_then(|e| branching_probabilities(&scheme, &e, target))
                .map(|p| p.iter().map(|(_, w)| w).sum::<f64>())
                .unwrap_or(f64::NAN);
            branching = branching.max((total - 1.0).abs());
        }
    }
    if branching.is_nan() || branching > 1e-12 {
        problems.push(format!("branching {branching:.1e}"));
    }

    let forbidden = AmplitudeTable::new(scheme)
        .map(|t| t.get(Manifold::Storage, Spin::integer(0), Spin::integer(0), 0))
        .unwrap_or(f64::NAN);
    if forbidden != 0.0 {
        problems.push(format!("forbidden line amplitude {forbidden:e}"));
    }

    let ens = Ensemble::default();
    let mut norm: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut min_eig: f64 = 0.0;
    let heralds = [
        (Polarization::Plus, Polarization::Minus),
        (Polarization::Minus, Polarization::Plus),
        (Polarization::Plus, Polarization::Plus),
        (Polarization::Minus, Polarization::Minus),
    ];
    for theta in theta_grid() {
        for &(w1, w2) in &heralds {
            let stages = ZeemanParams::from_theta(theta, OMEGA_M, OMEGA_N).and_then(|zp| {
                let s0 = ens.initial_state();
                let s1 = ens.apply_write_herald(&s0, Slot::W1, w1)?;
                let s2 = ens.apply_write_herald(&s1, Slot::W2, w2)?;
                let s3 = ens.apply_read(&s2, Slot::A)?.normalize()?;
                let s4 = zeeman_evolve(&s3, &zp);
                let s5 = ens.apply_read(&s4, Slot::B)?.normalize()?;
                let out = ens.run_protocol(&zp, (w1, w2))?;
                Ok((vec![s0, s1, s2, s3, s4, s5, out.final_state], out.rho))
            });
            match stages {
                Ok((states, rho)) => {
                    for st in &states {
                        norm = norm.max((st.norm_sqr() - 1.0).abs());
                    }
                    trace = trace.max((rho.trace() - 1.0).abs()).max(rho.hermiticity_error());
                    min_eig = min_eig.min(rho.min_eigenvalue());
                }
                Err(e) => problems.push(format!("protocol error {e}")),
            }
        }
    }
    if norm.is_nan() || norm > 1e-12 {
        problems.push(format!("stage normalization {norm:.1e}"));
    }
    if !(trace <= 1e-10 && min_eig >= -1e-10) {
        problems.push(format!("density matrix trace/hermiticity {trace:.1e}, min eigenvalue {min_eig:.1e}"));
    }

    let detail = format!(
        "orthogonality {orth:.1e}, branching {branching:.1e} (tol 1e-12), forbidden amplitude {forbidden}, \
         stage norm {norm:.1e} (tol 1e-12), |tr ρ - 1| {trace:.1e}, min eig {min_eig:.1e} (tol 1e-10)"
    );
    if problems.is_empty() {
        r.check("C8", "structural invariants", true, detail);
    } else {
        r.check("C8", "structural invariants", false, format!("{detail}; {}", problems.join("; ")));
    }
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    bell_point(&mut report);
    fidelity_and_weight_laws(&mut report);
    headline_probability(&mut report);
    fidelity_lambda_point(&mut report);
    low_efficiency(&mut report);
    oracle_equivalence(&mut report);
    structural_invariants(&mut report);
    println!("acceptance: {} of 8 criteria passed", 8 - report.failures);
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
