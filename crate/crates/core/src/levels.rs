//! Zeeman sublevels, Clebsch–Gordan coefficients and dipole transition
//! amplitudes for the g / s / e hyperfine manifolds.
//!
//! Angular momenta are stored as doubled integers ([`Spin`]) so that
//! half-integer values are exact. All coefficients follow the
//! Condon–Shortley phase convention.
//!
//! A transition amplitude between an excited sublevel `|F_e, m_e⟩` and a
//! lower sublevel `|F_g, m_g⟩` with photon polarization `q` is
//!
//! ```text
//! P^(F_g)_{m_e, m_g}(q) = ⟨F_g m_g; 1 q | F_e m_e⟩
//! ```
//!
//! with unit reduced matrix element for every line. For a fixed excited
//! sublevel the squared amplitudes over every `(m_g, q)` of one line sum to
//! one (completeness of the coupled basis), so the table is already
//! normalized per excited sublevel.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Largest `j1 + j2 + J + 1` for which factorials stay finite in `f64`.
const MAX_FACTORIAL: i32 = 170;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevelError {
    #[error("{0} is not an integer or half-integer")]
    NotHalfInteger(f64),
    #[error("angular momentum {0} is negative")]
    NegativeSpin(Spin),
    #[error("projection {m} is out of range for j = {j}")]
    ProjectionOutOfRange { j: Spin, m: Spin },
    #[error("projection {m} and j = {j} differ by a non-integer")]
    ParityMismatch { j: Spin, m: Spin },
    #[error("angular momenta too large for double-precision factorials")]
    TooLarge,
    #[error("polarization q = {0} is not one of -1, 0, +1")]
    InvalidPolarization(i32),
    #[error("expected a sublevel of manifold {expected}, got {got}")]
    WrongManifold { expected: &'static str, got: Manifold },
    #[error("no open decay channel from {from} into manifold {into}")]
    NoOpenChannel { from: SublevelState, into: Manifold },
}

/// An angular momentum quantum number (or projection), stored doubled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spin(i32);

impl Spin {
    pub const ZERO: Spin = Spin(0);

    pub const fn integer(value: i32) -> Self {
        Spin(2 * value)
    }

    pub const fn from_twice(twice: i32) -> Self {
        Spin(twice)
    }

    /// Parses a real number that must be an exact multiple of one half.
    pub fn from_f64(value: f64) -> Result<Self, LevelError> {
        let twice = 2.0 * value;
        let rounded = twice.round();
        if !value.is_finite() || (twice - rounded).abs() > 1e-9 || rounded.abs() > i32::MAX as f64 {
            return Err(LevelError::NotHalfInteger(value));
        }
        Ok(Spin(rounded as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// All projections `-j, -j+1, ..., j`.
    pub fn projections(self) -> impl Iterator<Item = Spin> {
        let j = self.0;
        (-j..=j).step_by(2).map(Spin)
    }
}

impl std::ops::Neg for Spin {
    type Output = Spin;
    fn neg(self) -> Spin {
        Spin(-self.0)
    }
}

impl std::ops::Add for Spin {
    type Output = Spin;
    fn add(self, rhs: Spin) -> Spin {
        Spin(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Spin {
    type Output = Spin;
    fn sub(self, rhs: Spin) -> Spin {
        Spin(self.0 - rhs.0)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

fn check_pair(j: Spin, m: Spin) -> Result<(), LevelError> {
    if j.0 < 0 {
        return Err(LevelError::NegativeSpin(j));
    }
    if (j.0 - m.0) % 2 != 0 {
        return Err(LevelError::ParityMismatch { j, m });
    }
    if m.0.abs() > j.0 {
        return Err(LevelError::ProjectionOutOfRange { j, m });
    }
    Ok(())
}

fn factorial(n: i32) -> f64 {
    debug_assert!((0..=MAX_FACTORIAL).contains(&n));
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `⟨j1 m1; j2 m2 | J M⟩` from the Racah closed form, on doubled arguments.
pub fn clebsch_gordan(j1: Spin, m1: Spin, j2: Spin, m2: Spin, j: Spin, m: Spin) -> Result<f64, LevelError> {
    check_pair(j1, m1)?;
    check_pair(j2, m2)?;
    check_pair(j, m)?;

    if m1.0 + m2.0 != m.0 {
        return Ok(0.0);
    }
    if j.0 < (j1.0 - j2.0).abs() || j.0 > j1.0 + j2.0 || (j1.0 + j2.0 + j.0) % 2 != 0 {
        return Ok(0.0);
    }
    if (j1.0 + j2.0 + j.0) / 2 + 1 > MAX_FACTORIAL {
        return Err(LevelError::TooLarge);
    }

    // Every combination below is an integer once the triangle and parity
    // checks above have passed.
    let h = |twice: i32| twice / 2;
    let a = h(j1.0 + j2.0 - j.0);
    let b = h(j1.0 - m1.0);
    let c = h(j2.0 + m2.0);
    let d = h(j.0 - j2.0 + m1.0);
    let e = h(j.0 - j1.0 - m2.0);

    let prefactor =
        ((j.0 + 1) as f64 * factorial(h(j.0 + j1.0 - j2.0)) * factorial(h(j.0 - j1.0 + j2.0)) * factorial(a)
            / factorial(h(j1.0 + j2.0 + j.0) + 1))
        .sqrt();
    let projections = (factorial(h(j.0 + m.0))
        * factorial(h(j.0 - m.0))
        * factorial(b)
        * factorial(h(j1.0 + m1.0))
        * factorial(h(j2.0 - m2.0))
        * factorial(c))
    .sqrt();

    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);
    let sum: f64 = (k_min..=k_max)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / (factorial(k)
                * factorial(a - k)
                * factorial(b - k)
                * factorial(c - k)
                * factorial(d + k)
                * factorial(e + k))
        })
        .sum();

    Ok(prefactor * projections * sum)
}

/// Real-valued front end for [`clebsch_gordan`]; every argument must be an
/// integer or half-integer.
pub fn cg_coefficient(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64, LevelError> {
    clebsch_gordan(
        Spin::from_f64(j1)?,
        Spin::from_f64(m1)?,
        Spin::from_f64(j2)?,
        Spin::from_f64(m2)?,
        Spin::from_f64(j)?,
        Spin::from_f64(m)?,
    )
}

/// The three hyperfine manifolds of the Λ scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Manifold {
    /// Long-lived ground level `|g⟩`.
    Ground,
    /// Long-lived metastable storage level `|s⟩`.
    Storage,
    /// Optically excited level `|e⟩`.
    Excited,
}

impl Manifold {
    pub fn label(self) -> &'static str {
        match self {
            Manifold::Ground => "g",
            Manifold::Storage => "s",
            Manifold::Excited => "e",
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Hyperfine quantum numbers of the three manifolds. Defaults to
/// `F_g = 1`, `F_s = 2`, `F_e = 2` (the Rb-87 D1 line).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LevelScheme {
    pub f_ground: Spin,
    pub f_storage: Spin,
    pub f_excited: Spin,
}

impl Default for LevelScheme {
    fn default() -> Self {
        LevelScheme { f_ground: Spin::integer(1), f_storage: Spin::integer(2), f_excited: Spin::integer(2) }
    }
}

impl LevelScheme {
    pub fn f_of(&self, manifold: Manifold) -> Spin {
        match manifold {
            Manifold::Ground => self.f_ground,
            Manifold::Storage => self.f_storage,
            Manifold::Excited => self.f_excited,
        }
    }

    pub fn sublevel(&self, manifold: Manifold, m: Spin) -> Result<SublevelState, LevelError> {
        SublevelState::new(manifold, self.f_of(manifold), m)
    }
}

/// A Zeeman sublevel `|F, m_F⟩` of one manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SublevelState {
    manifold: Manifold,
    f: Spin,
    m: Spin,
}

impl SublevelState {
    pub fn new(manifold: Manifold, f: Spin, m: Spin) -> Result<Self, LevelError> {
        check_pair(f, m)?;
        Ok(SublevelState { manifold, f, m })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn f(&self) -> Spin {
        self.f
    }

    pub fn m(&self) -> Spin {
        self.m
    }
}

impl fmt::Display for SublevelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}, F={}, m={}⟩", self.manifold, self.f, self.m)
    }
}

fn check_q(q: i32) -> Result<(), LevelError> {
    if (-1..=1).contains(&q) {
        Ok(())
    } else {
        Err(LevelError::InvalidPolarization(q))
    }
}

/// Dipole amplitude for `excited → lower` emitting a photon of polarization
/// `q` (equivalently, absorbing `q` on `lower → excited`).
///
/// Returns exactly zero for Δm-forbidden pairs and for the `F_e = F_g`,
/// `m_e = m_g = 0`, `q = 0` line, where the Racah sum cancels identically.
pub fn transition_amplitude(
    excited: &SublevelState,
    lower: &SublevelState,
    q: i32,
) -> Result<f64, LevelError> {
    if excited.manifold != Manifold::Excited {
        return Err(LevelError::WrongManifold { expected: "e", got: excited.manifold });
    }
    if lower.manifold == Manifold::Excited {
        return Err(LevelError::WrongManifold { expected: "g or s", got: lower.manifold });
    }
    check_q(q)?;
    if lower.f == excited.f && lower.m == Spin::ZERO && excited.m == Spin::ZERO && q == 0 {
        return Ok(0.0);
    }
    clebsch_gordan(lower.f, lower.m, Spin::integer(1), Spin::integer(q), excited.f, excited.m)
}

/// Probability distribution over the lower sublevels reachable from
/// `excited` in `target`. Entries are listed in increasing `m_g` and include
/// reachable-but-forbidden sublevels with probability zero.
pub fn branching_probabilities(
    scheme: &LevelScheme,
    excited: &SublevelState,
    target: Manifold,
) -> Result<Vec<(Spin, f64)>, LevelError> {
    let f_target = scheme.f_of(target);
    let mut weights = Vec::new();
    for m_g in f_target.projections() {
        let delta = excited.m - m_g;
        if delta.twice().abs() > 2 || !delta.is_integer() {
            continue;
        }
        let lower = SublevelState::new(target, f_target, m_g)?;
        let amp = transition_amplitude(excited, &lower, delta.twice() / 2)?;
        weights.push((m_g, amp * amp));
    }
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if total == 0.0 {
        return Err(LevelError::NoOpenChannel { from: *excited, into: target });
    }
    for (_, w) in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// One row of the amplitude table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeEntry {
    pub manifold: Manifold,
    pub f: Spin,
    pub m_excited: Spin,
    pub m_lower: Spin,
    pub q: i32,
    pub amplitude: f64,
}

/// Every Δm-allowed amplitude `P^(F)_{m_e, m_g}(q)` from the excited
/// manifold into the ground and storage manifolds. Immutable once built.
#[derive(Clone, Debug)]
pub struct AmplitudeTable {
    scheme: LevelScheme,
    entries: BTreeMap<(Manifold, Spin, Spin, i32), f64>,
}

impl AmplitudeTable {
    pub fn new(scheme: LevelScheme) -> Result<Self, LevelError> {
        let mut entries = BTreeMap::new();
        for lower_manifold in [Manifold::Ground, Manifold::Storage] {
            let f_lower = scheme.f_of(lower_manifold);
            for m_e in scheme.f_excited.projections() {
                let excited = SublevelState::new(Manifold::Excited, scheme.f_excited, m_e)?;
                for q in -1..=1 {
                    let m_g = m_e - Spin::integer(q);
                    if m_g.twice().abs() > f_lower.twice() {
                        continue;
                    }
                    let lower = SublevelState::new(lower_manifold, f_lower, m_g)?;
                    let amp = transition_amplitude(&excited, &lower, q)?;
                    entries.insert((lower_manifold, m_e, m_g, q), amp);
                }
            }
        }
        Ok(AmplitudeTable { scheme, entries })
    }

    pub fn scheme(&self) -> &LevelScheme {
        &self.scheme
    }

    /// Amplitude for `e, m_e → lower, m_g` with polarization `q`; zero when
    /// the combination is not Δm-allowed or out of range.
    pub fn get(&self, lower: Manifold, m_excited: Spin, m_lower: Spin, q: i32) -> f64 {
        self.entries.get(&(lower, m_excited, m_lower, q)).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = AmplitudeEntry> + '_ {
        self.entries.iter().map(|(&(manifold, m_e, m_g, q), &amplitude)| AmplitudeEntry {
            manifold,
            f: self.scheme.f_of(manifold),
            m_excited: m_e,
            m_lower: m_g,
            q,
            amplitude,
        })
    }

    /// CSV dump with columns `manifold,F,mE,mG,q,amplitude`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("manifold,F,mE,mG,q,amplitude\n");
        for e in self.entries() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.manifold, e.f, e.m_excited, e.m_lower, e.q, e.amplitude
            ));
        }
        out
    }
}
