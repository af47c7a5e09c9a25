//! Amplitude-level engine for the heralded write / read sequence.
//!
//! The ensemble is described in the large-N limit: each atomic sublevel that
//! can hold an excitation is a bosonic mode and a [`BasisLabel`] records its
//! occupation together with the photons emitted so far. Spatial phase
//! factors are taken to be perfectly phase matched and therefore dropped.
//!
//! The protocol is
//!
//! 1. optical pumping into `|g, m=-1⟩` ([`Ensemble::initial_state`]),
//! 2. two heralded σ+ write pulses, each conditioned on one Stokes photon
//!    ([`Ensemble::apply_write_herald`]),
//! 3. a σ- read pulse A ([`Ensemble::apply_read`]),
//! 4. Zeeman phase accrual for a storage time τ ([`zeeman_evolve`]),
//! 5. a second σ- read pulse B, then normalization.
//!
//! The two anti-Stokes photons are reduced to a 4×4 polarization density
//! matrix ([`photonic_density_matrix`]) whose overlap with the rotated Bell
//! state is computed by [`bell_fidelity`].

mod density;
mod text;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::levels::{AmplitudeTable, LevelError, LevelScheme, Manifold, Spin};

pub use density::{bell_fidelity, photonic_density_matrix, BellFidelity, DensityMatrix, PairBasis};
pub use text::{parse_text, to_text};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("pulse slot {0} has already been used")]
    SlotReused(Slot),
    #[error("slot {slot} cannot be used for a {op}")]
    WrongSlot { slot: Slot, op: &'static str },
    #[error("no excitation to read")]
    NoExcitation,
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("term is missing exactly one photon record for slot {0}")]
    IncompleteSlots(Slot),
    #[error("storage time must be finite and non-negative, got {0}")]
    InvalidStorageTime(f64),
    #[error("Zeeman splittings must be finite")]
    InvalidSplitting,
    #[error("density matrix trace {0} is not 1")]
    NotUnitTrace(f64),
    #[error("sublevel m = {0} in manifold {1} is not tracked by the engine")]
    UntrackedSublevel(Spin, Manifold),
    #[error("cannot parse state text: {0}")]
    Parse(String),
    #[error(transparent)]
    Levels(#[from] LevelError),
}

/// Circular polarization of an emitted photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    Plus,
    Minus,
}

impl Polarization {
    pub fn q(self) -> i32 {
        match self {
            Polarization::Plus => 1,
            Polarization::Minus => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarization::Plus => Polarization::Minus,
            Polarization::Minus => Polarization::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarization::Plus => '+',
            Polarization::Minus => '-',
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ{}", self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Stokes,
    AntiStokes,
}

/// Pulse window in which a photon was emitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    W1,
    W2,
    A,
    B,
}

impl Slot {
    pub fn channel(self) -> Channel {
        match self {
            Slot::W1 | Slot::W2 => Channel::Stokes,
            Slot::A | Slot::B => Channel::AntiStokes,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Slot::W1 => "W1",
            Slot::W2 => "W2",
            Slot::A => "A",
            Slot::B => "B",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One emitted photon. The channel is implied by the slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonRecord {
    pub slot: Slot,
    pub polarization: Polarization,
}

impl PhotonRecord {
    pub fn new(slot: Slot, polarization: Polarization) -> Self {
        PhotonRecord { slot, polarization }
    }

    pub fn channel(&self) -> Channel {
        self.slot.channel()
    }
}

/// Mode occupations plus the ordered photon record of one basis ket.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    /// Excitations stored in `|s, m=-1⟩`.
    pub n_s_minus: u32,
    /// Excitations stored in `|s, m=+1⟩`.
    pub n_s_plus: u32,
    /// Atoms returned to `|g, m=+1⟩`.
    pub n_g_plus: u32,
    /// Atoms returned to `|g, m=-1⟩` after a read.
    pub n_g_minus_ret: u32,
    pub photons: Vec<PhotonRecord>,
}

impl BasisLabel {
    pub fn stored(&self) -> u32 {
        self.n_s_minus + self.n_s_plus
    }

    pub fn returned(&self) -> u32 {
        self.n_g_plus + self.n_g_minus_ret
    }

    pub fn count_channel(&self, channel: Channel) -> usize {
        self.photons.iter().filter(|p| p.channel() == channel).count()
    }

    pub fn has_slot(&self, slot: Slot) -> bool {
        self.photons.iter().any(|p| p.slot == slot)
    }

    /// Every Stokes photon created one excitation, which is either still
    /// stored or has been read back out into `g`.
    pub fn is_consistent(&self) -> bool {
        let stokes = self.count_channel(Channel::Stokes) as u32;
        let anti_stokes = self.count_channel(Channel::AntiStokes) as u32;
        stokes == self.stored() + self.returned() && anti_stokes == self.returned()
    }

    fn storage_count_mut(&mut self, m: Spin) -> Option<&mut u32> {
        match m.twice() {
            -2 => Some(&mut self.n_s_minus),
            2 => Some(&mut self.n_s_plus),
            _ => None,
        }
    }

    fn ground_count_mut(&mut self, m: Spin) -> Option<&mut u32> {
        match m.twice() {
            -2 => Some(&mut self.n_g_minus_ret),
            2 => Some(&mut self.n_g_plus),
            _ => None,
        }
    }
}

/// Coherent superposition over basis labels. Identical labels are always
/// merged.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveKet {
    terms: BTreeMap<BasisLabel, Complex64>,
    /// Product of the squared norms divided out by every normalization so
    /// far, i.e. the relative weight of the conditioned branch.
    norm_tracked: f64,
}

impl CollectiveKet {
    /// Builds a ket from a term list, adding amplitudes of repeated labels.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (BasisLabel, Complex64)>,
    {
        let mut merged: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
        for (label, amp) in terms {
            *merged.entry(label).or_default() += amp;
        }
        CollectiveKet { terms: merged, norm_tracked: 1.0 }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisLabel, &Complex64)> {
        self.terms.iter()
    }

    pub fn term_list(&self) -> Vec<(BasisLabel, Complex64)> {
        self.terms.iter().map(|(l, a)| (l.clone(), *a)).collect()
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.terms.get(label).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_tracked(&self) -> f64 {
        self.norm_tracked
    }

    pub fn normalize(&self) -> Result<CollectiveKet, StateError> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(StateError::ZeroNorm);
        }
        let scale = 1.0 / n2.sqrt();
        Ok(CollectiveKet {
            terms: self.terms.iter().map(|(l, a)| (l.clone(), a * scale)).collect(),
            norm_tracked: self.norm_tracked * n2,
        })
    }

    fn uses_slot(&self, slot: Slot) -> bool {
        self.terms.keys().any(|l| l.has_slot(slot))
    }

    fn with_terms(&self, terms: Vec<(BasisLabel, Complex64)>) -> CollectiveKet {
        let mut ket = CollectiveKet::from_terms(terms);
        ket.norm_tracked = self.norm_tracked;
        ket
    }
}

/// Zeeman splittings (angular frequencies, rad/s) of the storage and ground
/// manifolds and the storage time between the two reads.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeemanParams {
    pub omega_m: f64,
    pub omega_n: f64,
    pub tau: f64,
}

impl ZeemanParams {
    pub fn new(omega_m: f64, omega_n: f64, tau: f64) -> Result<Self, StateError> {
        if !omega_m.is_finite() || !omega_n.is_finite() {
            return Err(StateError::InvalidSplitting);
        }
        if !tau.is_finite() || tau < 0.0 {
            return Err(StateError::InvalidStorageTime(tau));
        }
        Ok(ZeemanParams { omega_m, omega_n, tau })
    }

    /// Chooses τ so that `(ω_m - ω_n) τ = theta`.
    pub fn from_theta(theta: f64, omega_m: f64, omega_n: f64) -> Result<Self, StateError> {
        let delta = omega_m - omega_n;
        if delta == 0.0 {
            return if theta == 0.0 {
                ZeemanParams::new(omega_m, omega_n, 0.0)
            } else {
                Err(StateError::InvalidSplitting)
            };
        }
        ZeemanParams::new(omega_m, omega_n, theta / delta)
    }

    /// Relative phase `(ω_m - ω_n) τ` that sets the |--⟩ admixture.
    pub fn theta(&self) -> f64 {
        (self.omega_m - self.omega_n) * self.tau
    }
}

/// Phase factor picked up by one basis ket during the storage time.
pub fn zeeman_phase(label: &BasisLabel, zp: &ZeemanParams) -> Complex64 {
    let m = zp.omega_m * zp.tau;
    let n = zp.omega_n * zp.tau;
    let phase = -m * label.n_s_minus as f64 + m * label.n_s_plus as f64 + n * label.n_g_plus as f64
        - n * label.n_g_minus_ret as f64;
    Complex64::from_polar(1.0, phase)
}

/// Multiplies every term by its Zeeman phase. Norm and photon records are
/// untouched.
pub fn zeeman_evolve(state: &CollectiveKet, zp: &ZeemanParams) -> CollectiveKet {
    CollectiveKet {
        terms: state.terms.iter().map(|(l, a)| (l.clone(), a * zeeman_phase(l, zp))).collect(),
        norm_tracked: state.norm_tracked,
    }
}

/// Polarizations of the two Stokes heralds `(W1, W2)`.
pub type HeraldPattern = (Polarization, Polarization);

/// Result of [`Ensemble::run_protocol`].
#[derive(Clone, Debug)]
pub struct ProtocolOutcome {
    pub final_state: CollectiveKet,
    pub rho: DensityMatrix,
    pub fidelity: BellFidelity,
}

/// Level scheme plus its amplitude table; all protocol steps read from it.
#[derive(Clone, Debug)]
pub struct Ensemble {
    table: AmplitudeTable,
}

/// Zeeman sublevel the ensemble is optically pumped into.
const PUMPED_M: i32 = -1;
/// Write pulses are σ+, read pulses σ-.
const WRITE_Q: i32 = 1;
const READ_Q: i32 = -1;

impl Ensemble {
    pub fn new(scheme: LevelScheme) -> Result<Self, StateError> {
        Ok(Ensemble { table: AmplitudeTable::new(scheme)? })
    }

    pub fn table(&self) -> &AmplitudeTable {
        &self.table
    }

    /// Every atom in `|g, m=-1⟩`, no photons.
    pub fn initial_state(&self) -> CollectiveKet {
        CollectiveKet::from_terms([(BasisLabel::default(), Complex64::new(1.0, 0.0))])
    }

    /// Projects onto the branch where the write pulse in `slot` emitted one
    /// Stokes photon of polarization `detected`, then renormalizes.
    pub fn apply_write_herald(
        &self,
        state: &CollectiveKet,
        slot: Slot,
        detected: Polarization,
    ) -> Result<CollectiveKet, StateError> {
        if slot.channel() != Channel::Stokes {
            return Err(StateError::WrongSlot { slot, op: "write herald" });
        }
        if state.uses_slot(slot) {
            return Err(StateError::SlotReused(slot));
        }
        let m_excited = Spin::integer(PUMPED_M + WRITE_Q);
        let m_storage = m_excited - Spin::integer(detected.q());
        let amp = self.table.get(Manifold::Storage, m_excited, m_storage, detected.q());
        if amp == 0.0 {
            return Err(StateError::ZeroNorm);
        }

        let mut terms = Vec::with_capacity(state.len());
        for (label, a) in state.terms() {
            let mut next = label.clone();
            let count = next
                .storage_count_mut(m_storage)
                .ok_or(StateError::UntrackedSublevel(m_storage, Manifold::Storage))?;
            *count += 1;
            let bosonic = (*count as f64).sqrt();
            next.photons.push(PhotonRecord::new(slot, detected));
            terms.push((next, a * amp * bosonic));
        }
        state.with_terms(terms).normalize()
    }

    /// Read branching without merging identical labels.
    ///
    /// Each stored excitation in `|s, m⟩` absorbs a σ- read photon into
    /// `|e, m-1⟩` and decays to `|g⟩` emitting σ+ or σ-; π decays leave the
    /// collected anti-Stokes mode and are dropped.
    pub fn expand_read(
        &self,
        terms: &[(BasisLabel, Complex64)],
        slot: Slot,
    ) -> Result<Vec<(BasisLabel, Complex64)>, StateError> {
        if slot.channel() != Channel::AntiStokes {
            return Err(StateError::WrongSlot { slot, op: "read" });
        }
        if terms.iter().any(|(l, _)| l.has_slot(slot)) {
            return Err(StateError::SlotReused(slot));
        }
        if terms.iter().all(|(l, _)| l.stored() == 0) {
            return Err(StateError::NoExcitation);
        }

        let f_ground = self.table.scheme().f_ground;
        let mut out = Vec::new();
        for (label, a) in terms {
            for m_storage in [Spin::integer(-1), Spin::integer(1)] {
                let mut depleted = label.clone();
                let count = depleted.storage_count_mut(m_storage).expect("storage modes are m = ±1");
                if *count == 0 {
                    continue;
                }
                let bosonic = (*count as f64).sqrt();
                *count -= 1;

                let m_excited = m_storage + Spin::integer(READ_Q);
                let absorb = self.table.get(Manifold::Storage, m_excited, m_storage, READ_Q);
                if absorb == 0.0 {
                    continue;
                }
                for emitted in [Polarization::Plus, Polarization::Minus] {
                    let m_ground = m_excited - Spin::integer(emitted.q());
                    if m_ground.twice().abs() > f_ground.twice() {
                        continue;
                    }
                    let decay = self.table.get(Manifold::Ground, m_excited, m_ground, emitted.q());
                    if decay == 0.0 {
                        continue;
                    }
                    let mut next = depleted.clone();
                    let returned = next
                        .ground_count_mut(m_ground)
                        .ok_or(StateError::UntrackedSublevel(m_ground, Manifold::Ground))?;
                    *returned += 1;
                    next.photons.push(PhotonRecord::new(slot, emitted));
                    out.push((next, a * bosonic * absorb * decay));
                }
            }
        }
        Ok(out)
    }

    /// Read pulse in `slot` conditioned on one anti-Stokes photon; identical
    /// labels are merged coherently. The result is not renormalized.
    pub fn apply_read(&self, state: &CollectiveKet, slot: Slot) -> Result<CollectiveKet, StateError> {
        let expanded = self.expand_read(&state.term_list(), slot)?;
        Ok(state.with_terms(expanded))
    }

    /// Whole sequence: pump, two heralds, read A, storage τ, read B,
    /// normalize, then reduce to the photon pair and score it.
    pub fn run_protocol(
        &self,
        zp: &ZeemanParams,
        heralds: HeraldPattern,
    ) -> Result<ProtocolOutcome, StateError> {
        let state = self.initial_state();
        let state = self.apply_write_herald(&state, Slot::W1, heralds.0)?;
        let state = self.apply_write_herald(&state, Slot::W2, heralds.1)?;
        let state = self.apply_read(&state, Slot::A)?;
        let state = zeeman_evolve(&state, zp);
        let state = self.apply_read(&state, Slot::B)?;
        let final_state = state.normalize()?;
        let rho = photonic_density_matrix(&final_state, Slot::A, Slot::B)?;
        let fidelity = bell_fidelity(&rho)?;
        Ok(ProtocolOutcome { final_state, rho, fidelity })
    }
}

impl Default for Ensemble {
    fn default() -> Self {
        Ensemble::new(LevelScheme::default()).expect("default level scheme is valid")
    }
}

/// [`Ensemble::run_protocol`] on the default F = 1 / 2 / 2 scheme.
pub fn run_protocol(zp: &ZeemanParams, heralds: HeraldPattern) -> Result<ProtocolOutcome, StateError> {
    Ensemble::default().run_protocol(zp, heralds)
}
