//! Trilinear Hamiltonians on a sector basis, per-sector spectra and time
//! evolution.
//!
//! Every generator here is block-diagonal over the sectors of the basis, so
//! evolution runs independently (and in parallel) per sector.

mod hamiltonian;
pub mod krylov;
pub mod tridiag;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hamiltonian::{
    build_hamiltonian, lab_frame_hamiltonian, tavis_cummings_hamiltonian, HamiltonianKind, HamiltonianOp,
};

use crate::hilbert::{SectorBasis, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Diagonalize each block once and reuse the eigenbasis.
    Dense,
    /// Lanczos matrix-exponential action with adaptive sub-steps.
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagator {
    pub method: Method,
    pub tolerance: f64,
    pub max_krylov_dim: usize,
}

impl Propagator {
    pub fn dense() -> Self {
        Self { method: Method::Dense, tolerance: 1e-10, max_krylov_dim: 30 }
    }

    pub fn krylov() -> Self {
        Self { method: Method::Krylov, ..Self::dense() }
    }
}

impl Default for Propagator {
    fn default() -> Self {
        Self::dense()
    }
}

fn dense_block(h: &HamiltonianOp, sector: usize, psi: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let eig = h.block_eigen(sector)?;
    let n = psi.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let q = eig.vector(j);
        let overlap: Complex64 = q.iter().zip(psi).map(|(qi, p)| p * qi).sum();
        if overlap == Complex64::new(0.0, 0.0) {
            continue;
        }
        let c = overlap * Complex64::new(0.0, -eig.values[j] * t).exp();
        for (o, qi) in out.iter_mut().zip(q) {
            *o += c * qi;
        }
    }
    Ok(out)
}

/// `ψ(t) = exp(−i(H/ħ)t) ψ(0)`. Sectors with no weight are skipped.
pub fn evolve(h: &HamiltonianOp, state: &StateVector, t: f64, prop: &Propagator) -> Result<StateVector> {
    if !state.same_basis(h.basis()) {
        return Err(Error::BasisMismatch);
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("evolution time must be finite, got {t}")));
    }
    if !(prop.tolerance > 0.0) {
        return Err(Error::InvalidInput("propagator tolerance must be positive".into()));
    }
    let basis = h.basis();
    let pieces: Vec<Vec<Complex64>> = (0..basis.sectors().len())
        .into_par_iter()
        .map(|s| {
            let psi = state.sector_amplitudes(s);
            if psi.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
                return Ok(psi.to_vec());
            }
            match prop.method {
                Method::Dense => dense_block(h, s, psi, t),
                Method::Krylov => krylov::expm_action(h.block(s), psi, t, prop.tolerance, prop.max_krylov_dim),
            }
        })
        .collect::<Result<_>>()?;
    let amplitudes = pieces.into_iter().flatten().collect();
    StateVector::with_leakage(basis.clone(), amplitudes, state.leakage())
}

/// Evolves the same initial state to each time in `times`, in parallel over
/// the grid. Output order follows `times`.
pub fn evolve_many(h: &HamiltonianOp, state: &StateVector, times: &[f64], prop: &Propagator) -> Result<Vec<StateVector>> {
    // Warm the eigen cache once so parallel workers do not race to fill it.
    if prop.method == Method::Dense {
        for s in 0..h.basis().sectors().len() {
            if state.sector_amplitudes(s).iter().any(|c| *c != Complex64::new(0.0, 0.0)) {
                h.block_eigen(s)?;
            }
        }
    }
    times.par_iter().map(|&t| evolve(h, state, t, prop)).collect()
}

/// Park–resonate–park protocol. The sweeps between detunings are treated as
/// instantaneous: in the rotating frame the parked segments only add phases
/// on `n_a`, so the populations depend on the resonant hold alone.
pub fn quench_schedule(
    h_far: &HamiltonianOp,
    h_res: &HamiltonianOp,
    state: &StateVector,
    hold: f64,
) -> Result<StateVector> {
    if !Arc::ptr_eq(h_far.basis(), h_res.basis()) && **h_far.basis() != **h_res.basis() {
        return Err(Error::BasisMismatch);
    }
    if hold < 0.0 {
        return Err(Error::InvalidInput(format!("hold time must be non-negative, got {hold}")));
    }
    evolve(h_res, state, hold, &Propagator::dense())
}

/// Eigenvalues of one sector at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub delta: f64,
    pub sector: (usize, usize),
    /// Ascending, rad/s.
    pub eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
}

impl SpectrumSlice {
    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }
}

pub fn sector_spectrum(h: &HamiltonianOp, n1: usize, n2: usize, with_vectors: bool) -> Result<SpectrumSlice> {
    let s = h.basis().sector_index(n1, n2).ok_or(Error::MissingSector(n1, n2))?;
    let eig = h.block_eigen(s)?;
    let eigenvectors = with_vectors.then(|| (0..eig.dim()).map(|j| eig.vector(j).to_vec()).collect());
    Ok(SpectrumSlice {
        delta: h.delta(),
        sector: (n1, n2),
        eigenvalues: eig.values.clone(),
        eigenvectors,
    })
}

/// Spectrum of the single-excitation sector `{|100⟩, |011⟩}` across a grid
/// of detunings.
pub fn avoided_crossing_scan(basis: &Arc<SectorBasis>, xi: f64, deltas: &[f64]) -> Result<Vec<SpectrumSlice>> {
    if basis.sector(1, 1).is_none_or(|s| s.len != 2) {
        return Err(Error::MissingSector(1, 1));
    }
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite detuning {d}")));
    }
    deltas
        .par_iter()
        .map(|&delta| {
            let h = build_hamiltonian(basis, xi, delta)?;
            sector_spectrum(&h, 1, 1, false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fock_state, populations, Mode, Truncation};

    fn basis(n: usize) -> Arc<SectorBasis> {
        SectorBasis::build(Truncation::uniform(n).unwrap()).unwrap()
    }

    #[test]
    fn vacuum_rabi_splitting() {
        let xi = 2.0;
        let h = build_hamiltonian(&basis(1), xi, 0.0).unwrap();
        let s = sector_spectrum(&h, 1, 1, true).unwrap();
        assert!((s.eigenvalues[0] + xi).abs() < 1e-14);
        assert!((s.eigenvalues[1] - xi).abs() < 1e-14);
        assert!((s.gap().unwrap() - 2.0 * xi).abs() < 1e-14);
    }

    #[test]
    fn dispersive_limit() {
        let xi = 1.0;
        let delta = 1e4;
        let h = build_hamiltonian(&basis(1), xi, delta).unwrap();
        let s = sector_spectrum(&h, 1, 1, false).unwrap();
        assert!((s.eigenvalues[0] - (-xi * xi / delta)).abs() < 1e-9);
        assert!((s.eigenvalues[1] - (delta + xi * xi / delta)).abs() < 1e-9);
    }

    #[test]
    fn gap_closed_form() {
        let xi = 1.3;
        let deltas: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.5 * xi).collect();
        let scan = avoided_crossing_scan(&basis(1), xi, &deltas).unwrap();
        for (d, s) in deltas.iter().zip(&scan) {
            let want = (d * d + 4.0 * xi * xi).sqrt();
            assert!((s.gap().unwrap() - want).abs() <= 1e-12 * want);
        }
        let min = scan.iter().map(|s| s.gap().unwrap()).fold(f64::INFINITY, f64::min);
        assert!((min - 2.0 * xi).abs() < 1e-12);
        let end = scan.last().unwrap().gap().unwrap();
        assert!((end - 10.0 * xi).abs() / (10.0 * xi) < 0.02);
    }

    #[test]
    fn zero_generator_is_identity() {
        let b = basis(2);
        let h = build_hamiltonian(&b, 0.0, 0.0).unwrap();
        let psi = fock_state(&b, 1, 2, 0).unwrap();
        for prop in [Propagator::dense(), Propagator::krylov()] {
            let out = evolve(&h, &psi, 17.0, &prop).unwrap();
            assert_eq!(out.amplitudes(), psi.amplitudes());
        }
    }

    #[test]
    fn single_phonon_exchange() {
        let b = basis(1);
        let xi = 0.8;
        let h = build_hamiltonian(&b, xi, 0.0).unwrap();
        let psi = fock_state(&b, 1, 0, 0).unwrap();
        for k in 0..50 {
            let t = k as f64 * 0.1;
            let out = evolve(&h, &psi, t, &Propagator::dense()).unwrap();
            let p = out.amplitude([1, 0, 0]).norm_sqr();
            assert!((p - (xi * t).cos().powi(2)).abs() < 1e-13);
        }
        let swap = evolve(&h, &psi, std::f64::consts::FRAC_PI_2 / xi, &Propagator::dense()).unwrap();
        assert!((swap.amplitude([0, 1, 1]).norm_sqr() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quench_holds() {
        let b = basis(2);
        let xi = 1.0;
        let far = build_hamiltonian(&b, xi, -50.0).unwrap();
        let res = build_hamiltonian(&b, xi, 0.0).unwrap();
        let psi = fock_state(&b, 1, 0, 0).unwrap();

        let same = quench_schedule(&far, &res, &psi, 0.0).unwrap();
        assert!((same.amplitude([1, 0, 0]).norm_sqr() - 1.0).abs() < 1e-15);

        let half = quench_schedule(&far, &res, &psi, std::f64::consts::FRAC_PI_2 / xi).unwrap();
        let means: Vec<f64> = Mode::ALL.iter().map(|&m| populations(&half, m).mean()).collect();
        assert!(means[0].abs() < 1e-13 && (means[1] - 1.0).abs() < 1e-13 && (means[2] - 1.0).abs() < 1e-13);

        let full = quench_schedule(&far, &res, &psi, std::f64::consts::PI / xi).unwrap();
        assert!((populations(&full, Mode::A).mean() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn basis_mismatch_detected() {
        let h = build_hamiltonian(&basis(1), 1.0, 0.0).unwrap();
        let psi = fock_state(&basis(2), 0, 0, 0).unwrap();
        assert!(matches!(evolve(&h, &psi, 1.0, &Propagator::dense()), Err(Error::BasisMismatch)));
    }
}
