use std::collections::BTreeMap;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::{BasisLabel, CollectiveKet, Polarization, Slot, StateError};

/// Two-photon polarization basis, first symbol read A, second read B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairBasis {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl PairBasis {
    pub const ALL: [PairBasis; 4] =
        [PairBasis::PlusPlus, PairBasis::PlusMinus, PairBasis::MinusPlus, PairBasis::MinusMinus];

    pub fn new(first: Polarization, second: Polarization) -> Self {
        use Polarization::{Minus, Plus};
        match (first, second) {
            (Plus, Plus) => PairBasis::PlusPlus,
            (Plus, Minus) => PairBasis::PlusMinus,
            (Minus, Plus) => PairBasis::MinusPlus,
            (Minus, Minus) => PairBasis::MinusMinus,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            PairBasis::PlusPlus => "++",
            PairBasis::PlusMinus => "+-",
            PairBasis::MinusPlus => "-+",
            PairBasis::MinusMinus => "--",
        }
    }
}

/// 4×4 density matrix over [`PairBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Matrix4<Complex64>);

impl DensityMatrix {
    pub fn from_matrix(m: Matrix4<Complex64>) -> Self {
        DensityMatrix(m)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Matrix4::identity() * Complex64::new(0.25, 0.0))
    }

    /// `|ψ⟩⟨ψ|` for an (unnormalized) pair amplitude vector.
    pub fn pure(amplitudes: [Complex64; 4]) -> Self {
        let v = Vector4::from(amplitudes);
        DensityMatrix(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn get(&self, row: PairBasis, col: PairBasis) -> Complex64 {
        self.0[(row.index(), col.index())]
    }

    /// Diagonal weight of one basis state.
    pub fn population(&self, b: PairBasis) -> f64 {
        self.get(b, b).re
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let hermitian = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = hermitian.symmetric_eigenvalues();
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

/// Reduces `state` to the polarizations of the photons in `first` and
/// `second`, tracing out everything else (atomic counts and the remaining
/// photon records). Terms with different environments add incoherently.
pub fn photonic_density_matrix(
    state: &CollectiveKet,
    first: Slot,
    second: Slot,
) -> Result<DensityMatrix, StateError> {
    let mut by_environment: BTreeMap<BasisLabel, Vector4<Complex64>> = BTreeMap::new();
    for (label, amp) in state.terms() {
        let pick = |slot: Slot| {
            let mut hits = label.photons.iter().filter(|p| p.slot == slot);
            match (hits.next(), hits.next()) {
                (Some(p), None) => Ok(p.polarization),
                _ => Err(StateError::IncompleteSlots(slot)),
            }
        };
        let basis = PairBasis::new(pick(first)?, pick(second)?);
        let mut env = label.clone();
        env.photons.retain(|p| p.slot != first && p.slot != second);
        by_environment.entry(env).or_insert_with(Vector4::zeros)[basis.index()] += amp;
    }
    let rho = by_environment.values().fold(Matrix4::zeros(), |acc, v| acc + v * v.adjoint());
    Ok(DensityMatrix(rho))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellFidelity {
    pub fidelity: f64,
    /// Phase φ maximizing the overlap with `(|-+⟩ + e^{iφ}|+-⟩)/√2`.
    pub phi_star: f64,
}

/// Best overlap with the rotated Bell family `(|-+⟩ + e^{iφ}|+-⟩)/√2`:
///
/// `F = ½(ρ_{-+,-+} + ρ_{+-,+-}) + |ρ_{-+,+-}|`, reached at
/// `φ* = -arg ρ_{-+,+-}`.
pub fn bell_fidelity(rho: &DensityMatrix) -> Result<BellFidelity, StateError> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > 1e-8 {
        return Err(StateError::NotUnitTrace(trace));
    }
    let coherence = rho.get(PairBasis::MinusPlus, PairBasis::PlusMinus);
    let fidelity = 0.5 * (rho.population(PairBasis::MinusPlus) + rho.population(PairBasis::PlusMinus))
        + coherence.norm();
    let phi_star = if coherence.norm() == 0.0 { 0.0 } else { -coherence.arg() };
    Ok(BellFidelity { fidelity, phi_star })
}
