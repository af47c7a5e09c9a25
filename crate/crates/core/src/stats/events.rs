//! Exhaustive enumeration of photon-count event classes.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{binomial_unchecked, check_lambda, poisson_unchecked, DetectionModel, StatsError};

pub const DEFAULT_N_MAX: u32 = 8;
pub const MAX_TRUNCATION_DEFICIT: f64 = 1e-9;
/// Tail level used when the truncation is chosen automatically.
const AUTO_TAIL: f64 = 1e-13;
const MAX_AUTO_N: u32 = 400;

/// Detection pattern a trial must show to be kept.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    /// Exactly two Stokes clicks over both write windows.
    #[default]
    StokesPair,
    /// Two Stokes clicks and exactly one anti-Stokes click in each read
    /// window.
    StokesAndAntiStokes,
}

impl Signature {
    pub fn name(self) -> &'static str {
        match self {
            Signature::StokesPair => "stokes",
            Signature::StokesAndAntiStokes => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stokes" => Some(Signature::StokesPair),
            "full" => Some(Signature::StokesAndAntiStokes),
            _ => None,
        }
    }
}

/// What actually happened in one trial. Index 0 of the anti-Stokes arrays
/// is read A, index 1 read B.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EventKey {
    pub n_created: u32,
    pub stokes_detected: u32,
    pub stokes_darks: u32,
    pub as_emitted: [u32; 2],
    pub as_detected: [u32; 2],
    pub as_darks: [u32; 2],
}

impl EventKey {
    pub fn stokes_clicks(&self) -> u32 {
        self.stokes_detected + self.stokes_darks
    }

    pub fn as_clicks(&self, read: usize) -> u32 {
        self.as_detected[read] + self.as_darks[read]
    }

    pub fn matches(&self, signature: Signature) -> bool {
        let stokes = self.stokes_clicks() == 2;
        match signature {
            Signature::StokesPair => stokes,
            Signature::StokesAndAntiStokes => stokes && self.as_clicks(0) == 1 && self.as_clicks(1) == 1,
        }
    }

    /// Signature produced by exactly two real excitations, both seen, with
    /// no dark count involved.
    pub fn is_success(&self, signature: Signature) -> bool {
        let stokes = self.n_created == 2 && self.stokes_detected == 2 && self.stokes_darks == 0;
        match signature {
            Signature::StokesPair => stokes,
            Signature::StokesAndAntiStokes => {
                stokes && self.as_emitted == [1, 1] && self.as_detected == [1, 1] && self.as_darks == [0, 0]
            }
        }
    }

    /// Photons plus darks on each side, the `S(n);AS(m)` labelling.
    pub fn totals(&self) -> (u32, u32) {
        (
            self.n_created + self.stokes_darks,
            self.as_emitted.iter().sum::<u32>() + self.as_darks.iter().sum::<u32>(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EventClass {
    pub key: EventKey,
    pub probability: f64,
}

/// `P(n > n_max)` for a Poisson mean `lambda`, summed directly.
pub fn poisson_tail(lambda: f64, n_max: u32) -> Result<f64, StatsError> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let mut n = n_max + 1;
    let mut term = poisson_unchecked(lambda, n);
    let mut total = 0.0;
    loop {
        total += term;
        n += 1;
        term *= lambda / n as f64;
        if term <= total * 1e-17 || term == 0.0 {
            break;
        }
    }
    Ok(total)
}

/// Smallest truncation `>= DEFAULT_N_MAX` whose Poisson tail is negligible.
pub fn auto_truncation(lambda: f64) -> Result<u32, StatsError> {
    let mut n_max = DEFAULT_N_MAX;
    while poisson_tail(lambda, n_max)? > AUTO_TAIL {
        n_max += 1;
        if n_max > MAX_AUTO_N {
            return Err(StatsError::TruncationDeficit { deficit: poisson_tail(lambda, n_max)? });
        }
    }
    Ok(n_max)
}

fn check_truncation(lambda: f64, n_max: u32) -> Result<f64, StatsError> {
    if n_max < 4 {
        return Err(StatsError::TruncationTooSmall(n_max));
    }
    let deficit = poisson_tail(lambda, n_max)?;
    if deficit > MAX_TRUNCATION_DEFICIT {
        return Err(StatsError::TruncationDeficit { deficit });
    }
    Ok(deficit)
}

fn bernoulli(hit: u32, p: f64) -> f64 {
    if hit == 1 {
        p
    } else {
        1.0 - p
    }
}

/// Stokes-side classes `(n, detected, darks, probability)`; the read side
/// marginalizes to one.
fn stokes_classes(lambda: f64, model: &DetectionModel, n_max: u32) -> Vec<(u32, u32, u32, f64)> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        let pn = poisson_unchecked(lambda, n);
        if pn == 0.0 {
            continue;
        }
        for k in 0..=n {
            let pk = pn * binomial_unchecked(n, k, model.p_detect_stokes);
            for d in 0..=2 {
                let p = pk * binomial_unchecked(2, d, model.p_dc);
                if p > 0.0 {
                    out.push((n, k, d, p));
                }
            }
        }
    }
    out
}

/// Every event class with `n_created <= n_max`.
///
/// Model: `n ~ Poisson(λ)` excitations over both writes; `k ~ Bin(n,
/// p_detect)` Stokes detections; at most one dark count per write window;
/// read A converts `Bin(n, p_read)`, read B `Bin(n - a_A, p_read)`; each
/// anti-Stokes photon is seen with `p_detect_as` and each read window has at
/// most one dark count. Classes of exactly zero probability are omitted.
/// Probabilities sum to `1 - P(n > n_max)`.
pub fn enumerate_event_classes(
    lambda: f64,
    model: &DetectionModel,
    n_max: u32,
) -> Result<Vec<EventClass>, StatsError> {
    model.validate()?;
    check_lambda(lambda)?;
    check_truncation(lambda, n_max)?;

    let (p_read, p_as, p_dc) = (model.p_read, model.p_detect_as, model.p_dc);
    let mut out = Vec::new();
    for (n, k, d, p_stokes) in stokes_classes(lambda, model, n_max) {
        for a_a in 0..=n {
            let p_a = p_stokes * binomial_unchecked(n, a_a, p_read);
            if p_a == 0.0 {
                continue;
            }
            for a_b in 0..=(n - a_a) {
                let p_b = p_a * binomial_unchecked(n - a_a, a_b, p_read);
                if p_b == 0.0 {
                    continue;
                }
                for det_a in 0..=a_a {
                    let p_da = p_b * binomial_unchecked(a_a, det_a, p_as);
                    if p_da == 0.0 {
                        continue;
                    }
                    for det_b in 0..=a_b {
                        let p_db = p_da * binomial_unchecked(a_b, det_b, p_as);
                        if p_db == 0.0 {
                            continue;
                        }
                        for dark_a in 0..=1 {
                            for dark_b in 0..=1 {
                                let p = p_db * bernoulli(dark_a, p_dc) * bernoulli(dark_b, p_dc);
                                if p == 0.0 {
                                    continue;
                                }
                                out.push(EventClass {
                                    key: EventKey {
                                        n_created: n,
                                        stokes_detected: k,
                                        stokes_darks: d,
                                        as_emitted: [a_a, a_b],
                                        as_detected: [det_a, det_b],
                                        as_darks: [dark_a, dark_b],
                                    },
                                    probability: p,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuccessFalse {
    pub p_success: f64,
    pub p_false: f64,
    /// Part of `p_false` involving at least one dark count.
    pub p_false_dark: f64,
    /// Poisson mass beyond the truncation.
    pub truncation_deficit: f64,
}

impl SuccessFalse {
    /// `p_false / p_success`.
    pub fn ratio(&self) -> Result<f64, StatsError> {
        if self.p_success == 0.0 {
            return Err(StatsError::NoSuccess);
        }
        Ok(self.p_false / self.p_success)
    }

    /// Fraction of kept events that are genuine, `p_s / (p_s + p_f)`.
    pub fn fidelity_estimate(&self) -> Result<f64, StatsError> {
        if self.p_success == 0.0 {
            return Err(StatsError::NoSuccess);
        }
        Ok(self.p_success / (self.p_success + self.p_false))
    }
}

/// Success and false probabilities for `signature` at truncation `n_max`.
pub fn success_and_false_for(
    lambda: f64,
    model: &DetectionModel,
    signature: Signature,
    n_max: u32,
) -> Result<SuccessFalse, StatsError> {
    model.validate()?;
    check_lambda(lambda)?;
    let truncation_deficit = check_truncation(lambda, n_max)?;
    let mut sf = SuccessFalse { p_success: 0.0, p_false: 0.0, p_false_dark: 0.0, truncation_deficit };

    let mut add = |key: &EventKey, p: f64| {
        if !key.matches(signature) {
            return;
        }
        if key.is_success(signature) {
            sf.p_success += p;
        } else {
            sf.p_false += p;
            if key.stokes_darks + key.as_darks[0] + key.as_darks[1] > 0 {
                sf.p_false_dark += p;
            }
        }
    };

    match signature {
        Signature::StokesPair => {
            for (n, k, d, p) in stokes_classes(lambda, model, n_max) {
                let key =
                    EventKey { n_created: n, stokes_detected: k, stokes_darks: d, ..EventKey::default() };
                add(&key, p);
            }
        }
        Signature::StokesAndAntiStokes => {
            for class in enumerate_event_classes(lambda, model, n_max)? {
                add(&class.key, class.probability);
            }
        }
    }
    Ok(sf)
}

/// Two-Stokes-click success/false split with an automatically chosen
/// truncation.
pub fn success_and_false(lambda: f64, model: &DetectionModel) -> Result<SuccessFalse, StatsError> {
    success_and_false_for(lambda, model, Signature::StokesPair, auto_truncation(lambda)?)
}

/// One `S(n);AS(m)` column of the per-class breakdown; the last bucket on
/// each side collects everything at or above it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassColumn {
    pub stokes: u32,
    pub anti_stokes: u32,
}

const CLASS_CAP: u32 = 5;

impl ClassColumn {
    fn bucket(v: u32) -> u32 {
        v.min(CLASS_CAP)
    }

    pub fn of(key: &EventKey) -> Self {
        let (s, a) = key.totals();
        ClassColumn { stokes: ClassColumn::bucket(s), anti_stokes: ClassColumn::bucket(a) }
    }

    pub fn label(&self) -> String {
        let side = |v: u32| if v >= CLASS_CAP { format!("{}+", CLASS_CAP) } else { v.to_string() };
        format!("P(S({});AS({}))", side(self.stokes), side(self.anti_stokes))
    }
}

/// Columns of the full-signature breakdown: `S, AS ∈ {2, 3, 4, 5+}`.
pub fn class_columns() -> Vec<ClassColumn> {
    let mut cols = Vec::new();
    for stokes in 2..=CLASS_CAP {
        for anti_stokes in 2..=CLASS_CAP {
            cols.push(ClassColumn { stokes, anti_stokes });
        }
    }
    cols
}

/// Probability of the full signature grouped by `S(n);AS(m)`.
pub fn class_groups(classes: &[EventClass]) -> BTreeMap<ClassColumn, f64> {
    let mut groups: BTreeMap<ClassColumn, f64> = class_columns().into_iter().map(|c| (c, 0.0)).collect();
    for class in classes.iter().filter(|c| c.key.matches(Signature::StokesAndAntiStokes)) {
        *groups.entry(ClassColumn::of(&class.key)).or_default() += class.probability;
    }
    groups
}
