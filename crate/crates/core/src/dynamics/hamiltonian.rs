use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use super::tridiag::{Eigen, SymTridiagonal};
use crate::hilbert::{Ket, Sector, SectorBasis, StateVector};
use crate::{Error, Result};

/// Which generator a [`HamiltonianOp`] holds. All entries are `H/ħ` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// `δ·n_a + ξ(a†bc + ab†c†)`.
    Rotating { xi: f64, delta: f64 },
    /// `ω_a n_a + ω_b n_b + ω_c n_c + ξ(a†bc + ab†c†)`.
    Lab { xi: f64, omega: [f64; 3] },
    /// `ω_c(c†c + J_z) + ξ(c†J₋ + cJ₊)` with `J_z = (a†a − bb†)/2`,
    /// `J₋ = ab†`, `J₊ = a†b`.
    TavisCummings { xi: f64, omega_c: f64 },
}

/// Block-diagonal Hamiltonian over a [`SectorBasis`]. Each block is real
/// symmetric tridiagonal in the basis ordering; eigendecompositions are
/// computed on first use and cached.
#[derive(Debug)]
pub struct HamiltonianOp {
    basis: Arc<SectorBasis>,
    kind: HamiltonianKind,
    blocks: Vec<SymTridiagonal>,
    eigen: Vec<OnceLock<Eigen>>,
}

/// `⟨n_a+1, n_b−1, n_c−1| a†bc |n_a, n_b, n_c⟩` between neighboring kets
/// `k` and `k+1` of a sector.
fn coupling(lower: Ket) -> f64 {
    let [na, nb, nc] = lower;
    (((na + 1) * nb * nc) as f64).sqrt()
}

impl HamiltonianOp {
    fn assemble(basis: &Arc<SectorBasis>, kind: HamiltonianKind, xi: f64, diagonal: impl Fn(Ket) -> f64) -> Result<Self> {
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::InvalidInput(format!("coupling rate must be finite and ≥ 0, got {xi}")));
        }
        let blocks: Vec<SymTridiagonal> = basis
            .sectors()
            .iter()
            .map(|s: &Sector| {
                let diag = s.kets().map(&diagonal).collect();
                let off = (1..s.len).map(|k| xi * coupling(s.ket(k))).collect();
                SymTridiagonal::new(diag, off)
            })
            .collect();
        let eigen = blocks.iter().map(|_| OnceLock::new()).collect();
        Ok(Self { basis: basis.clone(), kind, blocks, eigen })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    pub fn xi(&self) -> f64 {
        match self.kind {
            HamiltonianKind::Rotating { xi, .. }
            | HamiltonianKind::Lab { xi, .. }
            | HamiltonianKind::TavisCummings { xi, .. } => xi,
        }
    }

    /// Three-mode detuning. The Tavis–Cummings form is resonant by
    /// construction.
    pub fn delta(&self) -> f64 {
        match self.kind {
            HamiltonianKind::Rotating { delta, .. } => delta,
            HamiltonianKind::Lab { omega, .. } => omega[0] - omega[1] - omega[2],
            HamiltonianKind::TavisCummings { .. } => 0.0,
        }
    }

    pub fn blocks(&self) -> &[SymTridiagonal] {
        &self.blocks
    }

    pub fn block(&self, sector: usize) -> &SymTridiagonal {
        &self.blocks[sector]
    }

    /// Cached eigendecomposition of one block.
    pub fn block_eigen(&self, sector: usize) -> Result<&Eigen> {
        if let Some(e) = self.eigen[sector].get() {
            return Ok(e);
        }
        let e = self.blocks[sector].eigen()?;
        Ok(self.eigen[sector].get_or_init(|| e))
    }

    /// `H|ψ⟩` (in rad/s).
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if !state.same_basis(&self.basis) {
            return Err(Error::BasisMismatch);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.basis.dimension()];
        for (s, block) in self.basis.sectors().iter().zip(&self.blocks) {
            block.apply(&state.amplitudes()[s.range()], &mut out[s.range()]);
        }
        StateVector::from_amplitudes(self.basis.clone(), out)
    }

    /// `⟨ψ|H|ψ⟩` in rad/s.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let h = self.apply(state)?;
        Ok(state.inner(&h)?.re)
    }

    /// Largest `|H_ij − conj(H_ji)|` over every block.
    pub fn hermiticity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let m = b.to_dense();
                let n = m.len();
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        worst = worst.max((m[i][j] - m[j][i]).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }
}

/// Rotating-frame generator `δ·n_a + ξ(a†bc + ab†c†)`.
///
/// The bare energies `ω_b(n_a+n_b) + ω_c(n_a+n_c)` are constant within each
/// sector, so only the detuning survives on the diagonal.
pub fn build_hamiltonian(basis: &Arc<SectorBasis>, xi: f64, delta: f64) -> Result<HamiltonianOp> {
    if !delta.is_finite() {
        return Err(Error::InvalidInput("detuning must be finite".into()));
    }
    HamiltonianOp::assemble(basis, HamiltonianKind::Rotating { xi, delta }, xi, |[na, _, _]| delta * na as f64)
}

/// Full generator with bare mode energies `ω·n` restored.
pub fn lab_frame_hamiltonian(basis: &Arc<SectorBasis>, omega: [f64; 3], xi: f64) -> Result<HamiltonianOp> {
    HamiltonianOp::assemble(basis, HamiltonianKind::Lab { xi, omega }, xi, |[na, nb, nc]| {
        omega[0] * na as f64 + omega[1] * nb as f64 + omega[2] * nc as f64
    })
}

/// The same interaction written with Schwinger's two-mode spin:
/// `ω_c(c†c + J_z) + ξ(c†J₋ + cJ₊)`. `c†J₋ = ab†c†` and `cJ₊ = a†bc`, so the
/// off-diagonal part coincides with [`build_hamiltonian`]; `J_z` uses
/// `bb† = n_b + 1`.
pub fn tavis_cummings_hamiltonian(basis: &Arc<SectorBasis>, xi: f64, omega_c: f64) -> Result<HamiltonianOp> {
    HamiltonianOp::assemble(
        basis,
        HamiltonianKind::TavisCummings { xi, omega_c },
        xi,
        |[na, nb, nc]| omega_c * (nc as f64 + 0.5 * (na as f64 - nb as f64 - 1.0)),
    )
}
