//! Truncated three-mode Fock space.
//!
//! The interaction `a†bc + ab†c†` shifts `(n_a, n_b, n_c)` by `±(1, −1, −1)`,
//! so both `N₁ = n_a + n_b` and `N₂ = n_a + n_c` are conserved. The basis is
//! stored sector by sector, each sector holding the kets of one `(N₁, N₂)`
//! pair ordered by descending `n_a`. In that ordering the interaction is
//! tridiagonal within every sector.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default ceiling on the number of kets in a basis.
pub const DEFAULT_DIMENSION_CAP: usize = 5_000_000;

/// Leakage above which a coherent state is rejected unless the guard is
/// overridden.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    A,
    B,
    C,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::A, Mode::B, Mode::C];

    pub fn index(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 1,
            Mode::C => 2,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::A => "a",
            Mode::B => "b",
            Mode::C => "c",
        })
    }
}

/// Occupation numbers `[n_a, n_b, n_c]`.
pub type Ket = [usize; 3];

/// Inclusive per-mode Fock cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max: [usize; 3],
}

impl Truncation {
    pub fn new(n_max_a: usize, n_max_b: usize, n_max_c: usize) -> Result<Self> {
        let t = Self { n_max: [n_max_a, n_max_b, n_max_c] };
        t.validate()?;
        Ok(t)
    }

    pub fn uniform(n_max: usize) -> Result<Self> {
        Self::new(n_max, n_max, n_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max.iter().any(|&n| n < 1) {
            return Err(Error::InvalidTruncation(format!(
                "every cutoff must be at least 1, got {:?}",
                self.n_max
            )));
        }
        Ok(())
    }

    pub fn n_max(&self, mode: Mode) -> usize {
        self.n_max[mode.index()]
    }

    /// `(n_a+1)(n_b+1)(n_c+1)`, or `None` on overflow.
    pub fn dimension(&self) -> Option<usize> {
        self.n_max
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n + 1))
    }

    pub fn contains(&self, ket: Ket) -> bool {
        ket.iter().zip(self.n_max.iter()).all(|(n, max)| n <= max)
    }
}

/// One conserved block: all kets with the given `(N₁, N₂)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sector {
    pub n1: usize,
    pub n2: usize,
    /// Position of this sector's first ket in the flat basis.
    pub offset: usize,
    /// Largest `n_a` in the sector; ket `k` has `n_a = n_a_max − k`.
    pub n_a_max: usize,
    pub len: usize,
}

impl Sector {
    fn new(trunc: &Truncation, n1: usize, n2: usize) -> Option<Self> {
        let [na, nb, nc] = trunc.n_max;
        let lo = n1.saturating_sub(nb).max(n2.saturating_sub(nc));
        let hi = na.min(n1).min(n2);
        (lo <= hi).then(|| Self {
            n1,
            n2,
            offset: 0,
            n_a_max: hi,
            len: hi - lo + 1,
        })
    }

    pub fn label(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn ket(&self, k: usize) -> Ket {
        debug_assert!(k < self.len);
        let n_a = self.n_a_max - k;
        [n_a, self.n1 - n_a, self.n2 - n_a]
    }

    pub fn kets(&self) -> impl Iterator<Item = Ket> + '_ {
        (0..self.len).map(|k| self.ket(k))
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Truncated Fock basis partitioned into conserved sectors.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    truncation: Truncation,
    sectors: Vec<Sector>,
    lookup: HashMap<(usize, usize), usize>,
    dimension: usize,
    complete: bool,
}

impl PartialEq for SectorBasis {
    fn eq(&self, other: &Self) -> bool {
        self.truncation == other.truncation && self.sectors == other.sectors
    }
}

impl SectorBasis {
    /// Every ket within `truncation`, sectors sorted by `(N₁, N₂)`.
    pub fn build(truncation: Truncation) -> Result<Arc<Self>> {
        Self::build_with_cap(truncation, DEFAULT_DIMENSION_CAP)
    }

    pub fn build_with_cap(truncation: Truncation, cap: usize) -> Result<Arc<Self>> {
        truncation.validate()?;
        let dimension = truncation.dimension().unwrap_or(usize::MAX);
        if dimension > cap {
            return Err(Error::DimensionCap { dimension, cap });
        }
        let [na, nb, nc] = truncation.n_max;
        let mut labels = Vec::new();
        for n1 in 0..=na + nb {
            for n2 in 0..=na + nc {
                labels.push((n1, n2));
            }
        }
        let basis = Self::assemble(truncation, &labels, true)?;
        debug_assert_eq!(basis.dimension, dimension);
        Ok(Arc::new(basis))
    }

    /// A basis spanning only the listed sectors. Each sector is an invariant
    /// subspace of every Hamiltonian in this crate, so dynamics restricted to
    /// it are exact; this allows sectors whose full truncation would be far
    /// beyond the dimension cap.
    pub fn from_sectors(truncation: Truncation, labels: &[(usize, usize)], cap: usize) -> Result<Arc<Self>> {
        truncation.validate()?;
        let mut sorted = labels.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &(n1, n2) in &sorted {
            if Sector::new(&truncation, n1, n2).is_none() {
                return Err(Error::MissingSector(n1, n2));
            }
        }
        let basis = Self::assemble(truncation, &sorted, false)?;
        if basis.dimension > cap {
            return Err(Error::DimensionCap { dimension: basis.dimension, cap });
        }
        Ok(Arc::new(basis))
    }

    fn assemble(truncation: Truncation, labels: &[(usize, usize)], complete: bool) -> Result<Self> {
        let mut sectors = Vec::new();
        let mut lookup = HashMap::new();
        let mut offset = 0;
        for &(n1, n2) in labels {
            if let Some(mut s) = Sector::new(&truncation, n1, n2) {
                s.offset = offset;
                offset += s.len;
                lookup.insert((n1, n2), sectors.len());
                sectors.push(s);
            }
        }
        Ok(Self {
            truncation,
            sectors,
            lookup,
            dimension: offset,
            complete,
        })
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// True when every ket within the truncation is present.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn sector_index(&self, n1: usize, n2: usize) -> Option<usize> {
        self.lookup.get(&(n1, n2)).copied()
    }

    pub fn sector(&self, n1: usize, n2: usize) -> Option<&Sector> {
        self.sector_index(n1, n2).map(|i| &self.sectors[i])
    }

    /// Flat index of `ket`, if it is in the basis.
    pub fn index_of(&self, ket: Ket) -> Option<usize> {
        if !self.truncation.contains(ket) {
            return None;
        }
        let [na, nb, nc] = ket;
        let s = self.sector(na + nb, na + nc)?;
        Some(s.offset + (s.n_a_max - na))
    }

    /// `(sector index, offset within sector)` of a flat index.
    pub fn locate(&self, index: usize) -> (usize, usize) {
        assert!(index < self.dimension, "index {index} out of range");
        let s = self.sectors.partition_point(|s| s.offset + s.len <= index);
        (s, index - self.sectors[s].offset)
    }

    pub fn ket(&self, index: usize) -> Ket {
        let (s, k) = self.locate(index);
        self.sectors[s].ket(k)
    }

    /// Kets in flat-index order.
    pub fn kets(&self) -> impl Iterator<Item = Ket> + '_ {
        self.sectors.iter().flat_map(|s| s.kets())
    }
}

/// Complex amplitudes over a [`SectorBasis`], laid out sector by sector.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<Complex64>,
    norm: f64,
    leakage: f64,
}

fn two_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl StateVector {
    pub fn from_amplitudes(basis: Arc<SectorBasis>, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::with_leakage(basis, amplitudes, 0.0)
    }

    pub(crate) fn with_leakage(basis: Arc<SectorBasis>, amplitudes: Vec<Complex64>, leakage: f64) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        let norm = two_norm(&amplitudes);
        Ok(Self { basis, amplitudes, norm, leakage })
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn sector_amplitudes(&self, sector: usize) -> &[Complex64] {
        &self.amplitudes[self.basis.sectors()[sector].range()]
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Weight lost to the truncation while producing this state.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn amplitude(&self, ket: Ket) -> Complex64 {
        self.basis
            .index_of(ket)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn same_basis(&self, basis: &Arc<SectorBasis>) -> bool {
        Arc::ptr_eq(&self.basis, basis) || *self.basis == **basis
    }

    /// Returns a unit-norm copy. A zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        if self.norm == 0.0 {
            return self.clone();
        }
        let scale = 1.0 / self.norm;
        let amplitudes: Vec<_> = self.amplitudes.iter().map(|c| c * scale).collect();
        let norm = two_norm(&amplitudes);
        Self { basis: self.basis.clone(), amplitudes, norm, leakage: self.leakage }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if !self.same_basis(&other.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Probability weight in each sector, in basis order.
    pub fn sector_weights(&self) -> Vec<f64> {
        self.basis
            .sectors()
            .iter()
            .map(|s| self.amplitudes[s.range()].iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    /// Mean occupation of `mode`, `⟨n⟩ = Σ n |c|²`.
    pub fn mean_occupation(&self, mode: Mode) -> f64 {
        let m = mode.index();
        self.basis
            .kets()
            .zip(&self.amplitudes)
            .map(|(ket, c)| ket[m] as f64 * c.norm_sqr())
            .sum()
    }
}

/// Initial state of one mode in a product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeState {
    Fock(usize),
    Coherent(Complex64),
}

/// Whether to reject coherent states that the truncation cannot hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeakGuard {
    #[default]
    Enforce,
    Override,
}

/// Amplitudes `e^{−|α|²/2} αⁿ/√(n!)` for `n = 0..=n_max`, without
/// renormalization, and the weight `1 − Σ|cₙ|²` lying beyond `n_max`.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> (Vec<Complex64>, f64) {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    (amps, (1.0 - kept).max(0.0))
}

/// A product state `|ψ_a⟩ ⊗ |ψ_b⟩ ⊗ |ψ_c⟩`, renormalized over the basis.
/// The reported leakage is the weight that fell outside the basis before
/// renormalization.
pub fn product_state(basis: &Arc<SectorBasis>, modes: [ModeState; 3], guard: LeakGuard) -> Result<StateVector> {
    let trunc = basis.truncation();
    let mut factors: Vec<Vec<Complex64>> = Vec::with_capacity(3);
    for (mode, spec) in Mode::ALL.into_iter().zip(modes) {
        let n_max = trunc.n_max(mode);
        match spec {
            ModeState::Fock(n) => {
                if n > n_max {
                    let mut ket = [0; 3];
                    for (i, s) in modes.iter().enumerate() {
                        if let ModeState::Fock(k) = s {
                            ket[i] = *k;
                        }
                    }
                    return Err(Error::OutOfTruncation { n_a: ket[0], n_b: ket[1], n_c: ket[2] });
                }
                let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
                v[n] = Complex64::new(1.0, 0.0);
                factors.push(v);
            }
            ModeState::Coherent(alpha) => {
                let (amps, leakage) = coherent_amplitudes(alpha, n_max);
                let alpha_sq = alpha.norm_sqr();
                if guard == LeakGuard::Enforce && (alpha_sq > n_max as f64 / 4.0 || leakage > LEAKAGE_LIMIT) {
                    return Err(Error::TruncationLeak { mode, alpha_sq, n_max, leakage });
                }
                factors.push(amps);
            }
        }
    }
    let amplitudes: Vec<Complex64> = basis
        .kets()
        .map(|[na, nb, nc]| factors[0][na] * factors[1][nb] * factors[2][nc])
        .collect();
    let kept = two_norm(&amplitudes);
    if kept == 0.0 {
        return Err(Error::InvalidInput("requested state has no weight inside the basis".into()));
    }
    let leakage = (1.0 - kept * kept).max(0.0);
    let amplitudes = amplitudes.into_iter().map(|c| c / kept).collect();
    StateVector::with_leakage(basis.clone(), amplitudes, leakage)
}

/// `|n_a, n_b, n_c⟩`.
pub fn fock_state(basis: &Arc<SectorBasis>, n_a: usize, n_b: usize, n_c: usize) -> Result<StateVector> {
    let index = basis
        .index_of([n_a, n_b, n_c])
        .ok_or(Error::OutOfTruncation { n_a, n_b, n_c })?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dimension()];
    amplitudes[index] = Complex64::new(1.0, 0.0);
    StateVector::from_amplitudes(basis.clone(), amplitudes)
}

/// Coherent state `|α⟩` in `mode`, with the other two modes (in a, b, c
/// order) in the Fock states `others`.
pub fn coherent_state(
    basis: &Arc<SectorBasis>,
    mode: Mode,
    alpha: Complex64,
    others: [usize; 2],
    guard: LeakGuard,
) -> Result<StateVector> {
    let mut spec = [ModeState::Fock(0); 3];
    let mut rest = others.into_iter();
    for m in Mode::ALL {
        spec[m.index()] = if m == mode {
            ModeState::Coherent(alpha)
        } else {
            ModeState::Fock(rest.next().unwrap_or(0))
        };
    }
    product_state(basis, spec, guard)
}

/// Phonon-number distribution of a single mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhononDistribution {
    mode: Mode,
    probabilities: Vec<f64>,
    mean: f64,
}

impl PhononDistribution {
    pub fn new(mode: Mode, probabilities: Vec<f64>) -> Result<Self> {
        if let Some(p) = probabilities.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidInput(format!("probability {p} is negative or not finite")));
        }
        let total: f64 = probabilities.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total} > 1")));
        }
        let mean = probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        Ok(Self { mode, probabilities, mean })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn n_max(&self) -> usize {
        self.probabilities.len().saturating_sub(1)
    }

    /// `Σ|pₙ − qₙ|` over the union of supports.
    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        let len = self.probabilities.len().max(other.len());
        (0..len)
            .map(|n| {
                let p = self.probabilities.get(n).copied().unwrap_or(0.0);
                let q = other.get(n).copied().unwrap_or(0.0);
                (p - q).abs()
            })
            .sum()
    }
}

/// Marginal distribution of `mode`: `pₙ = Σ |amplitude|²` over the other two
/// modes.
pub fn populations(state: &StateVector, mode: Mode) -> PhononDistribution {
    let m = mode.index();
    let n_max = state.basis().truncation().n_max(mode);
    let mut probs = vec![0.0; n_max + 1];
    for (ket, c) in state.basis().kets().zip(state.amplitudes()) {
        probs[ket[m]] += c.norm_sqr();
    }
    // Normalized states sum to 1 up to rounding; clamp the last few ulps.
    let total: f64 = probs.iter().sum();
    if total > 1.0 && total < 1.0 + 1e-12 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    let mean = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    PhononDistribution { mode, probabilities: probs, mean }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Applies `a`, `a†` (or the b, c equivalents). The result is not
/// renormalized; weight pushed past the cutoff is dropped and added to the
/// returned state's leakage.
pub fn apply_ladder(state: &StateVector, mode: Mode, direction: Ladder) -> StateVector {
    let basis = state.basis().clone();
    let m = mode.index();
    let n_max = basis.truncation().n_max(mode);
    let mut out = vec![Complex64::new(0.0, 0.0); basis.dimension()];
    let mut dropped = 0.0;
    for (ket, &c) in basis.kets().zip(state.amplitudes()) {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let n = ket[m];
        let mut target = ket;
        let coeff = match direction {
            Ladder::Lower => {
                if n == 0 {
                    continue;
                }
                target[m] = n - 1;
                (n as f64).sqrt()
            }
            Ladder::Raise => {
                target[m] = n + 1;
                ((n + 1) as f64).sqrt()
            }
        };
        match (target[m] <= n_max).then(|| basis.index_of(target)).flatten() {
            Some(j) => out[j] += c * coeff,
            None => dropped += (c * coeff).norm_sqr(),
        }
    }
    let norm = two_norm(&out);
    StateVector {
        basis,
        amplitudes: out,
        norm,
        leakage: state.leakage() + dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(a: usize, b: usize, c: usize) -> Arc<SectorBasis> {
        SectorBasis::build(Truncation::new(a, b, c).unwrap()).unwrap()
    }

    #[test]
    fn smallest_basis() {
        let b = basis(1, 1, 1);
        assert_eq!(b.dimension(), 8);
        let s = b.sector(1, 1).unwrap();
        assert_eq!(s.kets().collect::<Vec<_>>(), vec![[1, 0, 0], [0, 1, 1]]);
    }

    #[test]
    fn two_phonon_sector() {
        let b = basis(2, 2, 2);
        assert_eq!(b.dimension(), 27);
        let s = b.sector(2, 2).unwrap();
        assert_eq!(s.kets().collect::<Vec<_>>(), vec![[2, 0, 0], [1, 1, 1], [0, 2, 2]]);
    }

    #[test]
    fn sector_count_matches_enumeration() {
        let b = basis(5, 5, 5);
        let mut labels = std::collections::BTreeSet::new();
        for na in 0..=5 {
            for nb in 0..=5 {
                for nc in 0..=5 {
                    labels.insert((na + nb, na + nc));
                }
            }
        }
        assert_eq!(b.sectors().len(), labels.len());
        assert_eq!(b.sectors().iter().map(|s| s.len).sum::<usize>(), 216);
    }

    #[test]
    fn dimension_cap() {
        let t = Truncation::uniform(200).unwrap();
        assert!(matches!(SectorBasis::build(t), Err(Error::DimensionCap { .. })));
        assert!(Truncation::new(0, 1, 1).is_err());
    }

    #[test]
    fn restricted_basis_holds_large_sector() {
        let t = Truncation::uniform(1999).unwrap();
        let b = SectorBasis::from_sectors(t, &[(1999, 1999), (3, 5)], DEFAULT_DIMENSION_CAP).unwrap();
        assert_eq!(b.sector(1999, 1999).unwrap().len, 2000);
        assert_eq!(b.dimension(), 2004);
        assert!(!b.is_complete());
        assert_eq!(b.index_of([0, 0, 0]), None);
        assert!(SectorBasis::from_sectors(t, &[(5000, 1)], DEFAULT_DIMENSION_CAP).is_err());
    }

    #[test]
    fn fock_states() {
        let b = basis(2, 2, 2);
        let s = fock_state(&b, 1, 0, 0).unwrap();
        assert_eq!(s.norm(), 1.0);
        assert_eq!(s.amplitude([1, 0, 0]), Complex64::new(1.0, 0.0));
        let s = fock_state(&b, 0, 1, 1).unwrap();
        assert_eq!(s.amplitude([0, 1, 1]), Complex64::new(1.0, 0.0));
        assert!(matches!(fock_state(&b, 3, 0, 0), Err(Error::OutOfTruncation { .. })));
    }

    #[test]
    fn coherent_vacuum() {
        let b = basis(4, 2, 2);
        let s = coherent_state(&b, Mode::A, Complex64::new(0.0, 0.0), [0, 0], LeakGuard::Enforce).unwrap();
        assert!((s.amplitude([0, 0, 0]).re - 1.0).abs() < 1e-15);
        assert_eq!(s.leakage(), 0.0);
    }

    #[test]
    fn coherent_poisson_weights() {
        let (amps, _) = coherent_amplitudes(Complex64::new(1.8f64.sqrt(), 0.0), 10);
        assert!((amps[0].norm_sqr() - (-1.8f64).exp()).abs() < 1e-15);
        assert!((amps[0].norm_sqr() - 0.1653).abs() < 1e-4);

        // Poisson tail beyond 25 for mean 3.7, summed directly.
        let mut term = (-3.7f64).exp();
        let mut tail = 0.0;
        for n in 1..200 {
            term *= 3.7 / n as f64;
            if n > 25 {
                tail += term;
            }
        }
        let (_, leak) = coherent_amplitudes(Complex64::new(3.7f64.sqrt(), 0.0), 25);
        assert!(leak < 1e-9);
        assert!(tail < 1e-9);
    }

    #[test]
    fn coherent_guard() {
        let b = basis(4, 1, 1);
        let alpha = Complex64::new(2.0, 0.0);
        assert!(matches!(
            coherent_state(&b, Mode::A, alpha, [0, 0], LeakGuard::Enforce),
            Err(Error::TruncationLeak { .. })
        ));
        let s = coherent_state(&b, Mode::A, alpha, [0, 0], LeakGuard::Override).unwrap();
        assert!(s.leakage() > 0.1);
        assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_populations() {
        let b = basis(2, 2, 2);
        let p = populations(&fock_state(&b, 1, 0, 0).unwrap(), Mode::A);
        assert_eq!(p.probabilities()[1], 1.0);

        let mut amps = vec![Complex64::new(0.0, 0.0); b.dimension()];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        amps[b.index_of([1, 0, 0]).unwrap()] = Complex64::new(h, 0.0);
        amps[b.index_of([0, 1, 1]).unwrap()] = Complex64::new(h, 0.0);
        let s = StateVector::from_amplitudes(b, amps).unwrap();
        let p = populations(&s, Mode::B);
        assert!((p.probabilities()[0] - 0.5).abs() < 1e-15);
        assert!((p.probabilities()[1] - 0.5).abs() < 1e-15);
        assert!((p.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coherent_populations_are_poisson() {
        // Poisson tail beyond 10 for mean 1.8 is 3.1e-6, above the leak limit.
        let short = basis(10, 1, 1);
        let alpha = Complex64::new(1.8f64.sqrt(), 0.0);
        assert!(matches!(
            coherent_state(&short, Mode::A, alpha, [0, 0], LeakGuard::Enforce),
            Err(Error::TruncationLeak { .. })
        ));
        let b = basis(16, 1, 1);
        let nbar: f64 = 1.8;
        let s = coherent_state(&b, Mode::A, Complex64::new(nbar.sqrt(), 0.0), [0, 0], LeakGuard::Enforce).unwrap();
        let p = populations(&s, Mode::A);
        let mut pois = (-nbar).exp();
        for n in 0..=16 {
            if n > 0 {
                pois *= nbar / n as f64;
            }
            assert!((p.probabilities()[n] - pois).abs() < 1e-10);
        }
        assert!(s.leakage() < 1e-10);
        assert!((p.mean() - nbar).abs() < 1e-9);
    }

    #[test]
    fn ladder_elements() {
        let b = basis(2, 2, 2);
        let s = apply_ladder(&fock_state(&b, 1, 0, 0).unwrap(), Mode::A, Ladder::Lower);
        assert_eq!(s.amplitude([0, 0, 0]), Complex64::new(1.0, 0.0));

        let s = apply_ladder(&fock_state(&b, 1, 0, 0).unwrap(), Mode::A, Ladder::Raise);
        assert!((s.amplitude([2, 0, 0]).re - 2f64.sqrt()).abs() < 1e-15);

        // a†bc|011⟩ = |100⟩
        let mut s = fock_state(&b, 0, 1, 1).unwrap();
        s = apply_ladder(&s, Mode::C, Ladder::Lower);
        s = apply_ladder(&s, Mode::B, Ladder::Lower);
        s = apply_ladder(&s, Mode::A, Ladder::Raise);
        assert_eq!(s.amplitude([1, 0, 0]), Complex64::new(1.0, 0.0));
        assert_eq!(s.norm(), 1.0);
    }

    #[test]
    fn raising_past_cutoff_leaks() {
        let b = basis(2, 1, 1);
        let s = apply_ladder(&fock_state(&b, 2, 0, 0).unwrap(), Mode::A, Ladder::Raise);
        assert_eq!(s.norm(), 0.0);
        assert!((s.leakage() - 3.0).abs() < 1e-15);
    }
}
