//! End-to-end runs of the four experiments: the avoided crossing, the
//! single-phonon energy exchange, Jaynes–Cummings dynamics, and parametric
//! down-conversion with a depleted pump.
//!
//! Configuration is in ordinary frequency (kHz) and is converted to rad/s
//! here; time grids are given in units of `1/ξ` so the defaults do not
//! depend on the trap.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{avoided_crossing_scan, build_hamiltonian, evolve_many, Propagator};
use crate::hilbert::{
    coherent_state, fock_state, populations, product_state, LeakGuard, Mode, ModeState, PhononDistribution,
    SectorBasis, StateVector, Truncation, LEAKAGE_LIMIT,
};
use crate::modes::{build_mode_system, constants, khz_to_rad, ModeSystem, TrapConfig};
use crate::observe::{fit_geometric, fit_sinusoid, SinusoidFit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSettings {
    /// Ion mass in atomic mass units.
    pub mass_u: f64,
    /// Ion charge in elementary charges.
    pub charge_e: f64,
    pub omega_x_khz: f64,
    pub omega_y_khz: f64,
    pub omega_z_khz: f64,
}

impl Default for TrapSettings {
    fn default() -> Self {
        Self {
            mass_u: 171.0,
            charge_e: 1.0,
            omega_x_khz: 1056.0,
            omega_y_khz: 976.0,
            omega_z_khz: 587.0,
        }
    }
}

impl TrapSettings {
    pub fn to_trap(&self) -> Result<TrapConfig> {
        TrapConfig::new(
            self.mass_u * constants::ATOMIC_MASS_UNIT,
            self.charge_e * constants::ELEMENTARY_CHARGE,
            khz_to_rad(self.omega_x_khz),
            khz_to_rad(self.omega_y_khz),
            khz_to_rad(self.omega_z_khz),
        )
    }
}

/// Evenly spaced `ξτ` values from 0 to `xi_tau_max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub xi_tau_max: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn xi_tau(&self) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.xi_tau_max > 0.0 && self.xi_tau_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "time grid needs ≥ 2 points and a positive span, got {self:?}"
            )));
        }
        let n = self.points - 1;
        Ok((0..=n).map(|k| self.xi_tau_max * k as f64 / n as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AvoidedCrossingSettings {
    pub delta_min_khz: f64,
    pub delta_max_khz: f64,
    pub points: usize,
}

impl Default for AvoidedCrossingSettings {
    fn default() -> Self {
        Self { delta_min_khz: -20.0, delta_max_khz: 20.0, points: 81 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExchangeSettings {
    pub grid: TimeGrid,
    pub truncation: [usize; 3],
}

impl Default for ExchangeSettings {
    fn default() -> Self {
        // Three full population cycles (period π/ξ).
        Self { grid: TimeGrid { xi_tau_max: 3.0 * PI, points: 301 }, truncation: [10, 10, 10] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JcSettings {
    /// Fock numbers of mode c, one run each.
    pub fock: Vec<usize>,
    /// Mean phonon number of the coherent run in mode c; `None` skips it.
    pub coherent_nbar: Option<f64>,
    pub fock_grid: TimeGrid,
    pub coherent_grid: TimeGrid,
    pub truncation: [usize; 3],
    pub coherent_truncation: [usize; 3],
}

impl Default for JcSettings {
    fn default() -> Self {
        Self {
            fock: vec![0, 1, 2, 3, 4],
            coherent_nbar: Some(1.8),
            fock_grid: TimeGrid { xi_tau_max: 10.0, points: 1001 },
            coherent_grid: TimeGrid { xi_tau_max: 40.0, points: 4001 },
            truncation: [10, 10, 10],
            coherent_truncation: [10, 10, 16],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdcSettings {
    pub pump_nbar: f64,
    pub grid: TimeGrid,
    pub truncation: [usize; 3],
}

impl Default for PdcSettings {
    fn default() -> Self {
        Self { pump_nbar: 3.7, grid: TimeGrid { xi_tau_max: 3.0, points: 301 }, truncation: [25, 25, 25] }
    }
}

/// Everything a scenario run needs. Field defaults reproduce the
/// experiment's settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub trap: TrapSettings,
    /// Detuning while the initial state is prepared. The switch to the
    /// interaction detuning is sudden, so this value is recorded but does not
    /// enter the evolution.
    pub delta_park_khz: f64,
    /// Detuning during the interaction.
    pub delta_resonant_khz: f64,
    /// Overrides every scenario's own truncation when set.
    pub truncation: Option<[usize; 3]>,
    pub propagator: Propagator,
    pub avoided_crossing: AvoidedCrossingSettings,
    pub exchange: ExchangeSettings,
    pub jc: JcSettings,
    pub pdc: PdcSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            trap: TrapSettings::default(),
            delta_park_khz: -44.0,
            delta_resonant_khz: 0.0,
            truncation: None,
            propagator: Propagator::dense(),
            avoided_crossing: AvoidedCrossingSettings::default(),
            exchange: ExchangeSettings::default(),
            jc: JcSettings::default(),
            pdc: PdcSettings::default(),
        }
    }
}

impl ScenarioConfig {
    /// Mode system at the interaction detuning.
    pub fn resonant_system(&self) -> Result<ModeSystem> {
        build_mode_system(&self.trap.to_trap()?, Some(khz_to_rad(self.delta_resonant_khz)))
    }

    fn truncation(&self, own: [usize; 3]) -> Result<Truncation> {
        let [a, b, c] = self.truncation.unwrap_or(own);
        Truncation::new(a, b, c)
    }
}

/// Time series produced by one propagation.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionRecord {
    pub xi: f64,
    /// Seconds.
    pub times: Vec<f64>,
    /// `[a, b, c]` per time.
    pub distributions: Vec<[PhononDistribution; 3]>,
    pub means: Vec<[f64; 3]>,
    pub norms: Vec<f64>,
    /// Sectors holding weight in the initial state.
    pub sector_labels: Vec<(usize, usize)>,
    pub sector_weights: Vec<Vec<f64>>,
    /// Weight lost when the initial state was truncated.
    pub leakage: Vec<f64>,
    /// Weight on kets with any mode at its cutoff.
    pub boundary_weight: Vec<f64>,
}

impl EvolutionRecord {
    fn from_states(xi: f64, times: Vec<f64>, initial: &StateVector, states: &[StateVector]) -> Self {
        let basis = initial.basis();
        let occupied: Vec<usize> = initial
            .sector_weights()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
            .collect();
        let sector_labels = occupied.iter().map(|&i| basis.sectors()[i].label()).collect();
        let n_max = basis.truncation().n_max;
        let mut rec = Self {
            xi,
            times,
            distributions: Vec::with_capacity(states.len()),
            means: Vec::with_capacity(states.len()),
            norms: Vec::with_capacity(states.len()),
            sector_labels,
            sector_weights: Vec::with_capacity(states.len()),
            leakage: Vec::with_capacity(states.len()),
            boundary_weight: Vec::with_capacity(states.len()),
        };
        for s in states {
            let d = Mode::ALL.map(|m| populations(s, m));
            rec.means.push([d[0].mean(), d[1].mean(), d[2].mean()]);
            rec.distributions.push(d);
            rec.norms.push(s.norm());
            let w = s.sector_weights();
            rec.sector_weights.push(occupied.iter().map(|&i| w[i]).collect());
            rec.leakage.push(s.leakage());
            rec.boundary_weight.push(
                basis
                    .kets()
                    .zip(s.amplitudes())
                    .filter(|(k, _)| (0..3).any(|m| k[m] == n_max[m]))
                    .map(|(_, c)| c.norm_sqr())
                    .sum(),
            );
        }
        rec
    }

    pub fn mean_series(&self, mode: Mode) -> Vec<f64> {
        self.means.iter().map(|m| m[mode.index()]).collect()
    }

    /// `ξτ` for each row.
    pub fn xi_tau(&self) -> Vec<f64> {
        self.times.iter().map(|t| t * self.xi).collect()
    }

    pub fn max_sector_drift(&self) -> f64 {
        let Some(first) = self.sector_weights.first() else { return 0.0 };
        self.sector_weights
            .iter()
            .flat_map(|row| row.iter().zip(first).map(|(w, w0)| (w - w0).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// True when truncating the initial state lost more than the allowed
    /// weight.
    pub fn flagged(&self) -> bool {
        self.leakage.iter().any(|&l| l > LEAKAGE_LIMIT)
    }
}

fn propagate(cfg: &ScenarioConfig, basis: &Arc<SectorBasis>, initial: &StateVector, grid: &TimeGrid) -> Result<EvolutionRecord> {
    let system = cfg.resonant_system()?;
    let xi = system.xi();
    let h = build_hamiltonian(basis, xi, system.delta())?;
    let times: Vec<f64> = grid.xi_tau()?.into_iter().map(|x| x / xi).collect();
    let states = evolve_many(&h, initial, &times, &cfg.propagator)?;
    Ok(EvolutionRecord::from_states(xi, times, initial, &states))
}

/// One row of the avoided-crossing table; all values rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingRow {
    pub delta: f64,
    /// Eigenvalues of the `{|100⟩, |011⟩}` block, measured from `ω_b + ω_c`.
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AvoidedCrossing {
    pub xi: f64,
    pub rows: Vec<CrossingRow>,
}

pub fn run_avoided_crossing(cfg: &ScenarioConfig) -> Result<AvoidedCrossing> {
    let s = &cfg.avoided_crossing;
    if s.points < 1 || !(s.delta_min_khz <= s.delta_max_khz) {
        return Err(Error::InvalidInput(format!("bad detuning grid {s:?}")));
    }
    let deltas: Vec<f64> = if s.points == 1 {
        vec![khz_to_rad(s.delta_min_khz)]
    } else {
        (0..s.points)
            .map(|k| {
                let f = k as f64 / (s.points - 1) as f64;
                khz_to_rad(s.delta_min_khz + f * (s.delta_max_khz - s.delta_min_khz))
            })
            .collect()
    };
    let xi = cfg.resonant_system()?.xi();
    let basis = SectorBasis::build(Truncation::uniform(1)?)?;
    let rows = avoided_crossing_scan(&basis, xi, &deltas)?
        .into_iter()
        .map(|slice| CrossingRow {
            delta: slice.delta,
            lower: slice.eigenvalues[0],
            upper: slice.eigenvalues[1],
            gap: slice.eigenvalues[1] - slice.eigenvalues[0],
        })
        .collect();
    Ok(AvoidedCrossing { xi, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyExchange {
    pub record: EvolutionRecord,
    /// Fit of `⟨n_a⟩(τ)`; its frequency is `2ξ` in rad/s.
    pub fit: SinusoidFit,
}

/// `|100⟩` held at resonance.
pub fn run_energy_exchange(cfg: &ScenarioConfig) -> Result<EnergyExchange> {
    let basis = SectorBasis::build(cfg.truncation(cfg.exchange.truncation)?)?;
    let initial = fock_state(&basis, 1, 0, 0)?;
    let record = propagate(cfg, &basis, &initial, &cfg.exchange.grid)?;
    let fit = fit_sinusoid(&record.times, &record.mean_series(Mode::A), 2.0 * record.xi)?;
    Ok(EnergyExchange { record, fit })
}

#[derive(Debug, Clone, Serialize)]
pub struct FockRabi {
    pub n: usize,
    pub record: EvolutionRecord,
    pub fit: SinusoidFit,
    /// `2√(n+1)ξ`.
    pub expected_omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherentRabi {
    pub nbar: f64,
    /// Mode-c distribution of the (renormalized) initial state.
    pub initial_c: PhononDistribution,
    pub record: EvolutionRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct JaynesCummings {
    pub fock: Vec<FockRabi>,
    pub coherent: Option<CoherentRabi>,
}

/// `|1, 0, n⟩` for each requested Fock number, and `|1, 0, α⟩` with
/// `|α|² = n̄` when a coherent run is configured.
pub fn run_jaynes_cummings(cfg: &ScenarioConfig) -> Result<JaynesCummings> {
    let jc = &cfg.jc;
    let mut fock = Vec::with_capacity(jc.fock.len());
    if !jc.fock.is_empty() {
        let basis = SectorBasis::build(cfg.truncation(jc.truncation)?)?;
        for &n in &jc.fock {
            let initial = fock_state(&basis, 1, 0, n)?;
            let record = propagate(cfg, &basis, &initial, &jc.fock_grid)?;
            let expected_omega = 2.0 * ((n + 1) as f64).sqrt() * record.xi;
            let fit = fit_sinusoid(&record.times, &record.mean_series(Mode::A), expected_omega)?;
            fock.push(FockRabi { n, record, fit, expected_omega });
        }
    }
    let coherent = match jc.coherent_nbar {
        None => None,
        Some(nbar) => {
            if !(nbar >= 0.0 && nbar.is_finite()) {
                return Err(Error::InvalidInput(format!("coherent n̄ must be ≥ 0, got {nbar}")));
            }
            let basis = SectorBasis::build(cfg.truncation(jc.coherent_truncation)?)?;
            let alpha = Complex64::new(nbar.sqrt(), 0.0);
            let initial = coherent_state(&basis, Mode::C, alpha, [1, 0], LeakGuard::Enforce)?;
            let initial_c = populations(&initial, Mode::C);
            let record = propagate(cfg, &basis, &initial, &jc.coherent_grid)?;
            Some(CoherentRabi { nbar, initial_c, record })
        }
    };
    Ok(JaynesCummings { fock, coherent })
}

#[derive(Debug, Clone, Serialize)]
pub struct PdcDepleted {
    pub record: EvolutionRecord,
    /// Geometric-fit L1 residual of modes b and c at each time.
    pub thermality: Vec<[f64; 2]>,
}

/// Coherent pump in mode a, vacuum in b and c.
pub fn run_pdc_depleted(cfg: &ScenarioConfig) -> Result<PdcDepleted> {
    let p = &cfg.pdc;
    if !(p.pump_nbar >= 0.0 && p.pump_nbar.is_finite()) {
        return Err(Error::InvalidInput(format!("pump n̄ must be ≥ 0, got {}", p.pump_nbar)));
    }
    let basis = SectorBasis::build(cfg.truncation(p.truncation)?)?;
    let alpha = Complex64::new(p.pump_nbar.sqrt(), 0.0);
    let initial = product_state(
        &basis,
        [ModeState::Coherent(alpha), ModeState::Fock(0), ModeState::Fock(0)],
        LeakGuard::Enforce,
    )?;
    let record = propagate(cfg, &basis, &initial, &p.grid)?;
    let thermality = record
        .distributions
        .iter()
        .map(|d| [fit_geometric(&d[1]).residual_norm, fit_geometric(&d[2]).residual_norm])
        .collect();
    Ok(PdcDepleted { record, thermality })
}

/// Peak-to-peak swing of `values` over a sliding window of `window` seconds
/// starting at each sample. Windows that would run past the end are dropped.
pub fn windowed_contrast(times: &[f64], values: &[f64], window: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut end = 0;
    for start in 0..times.len() {
        let stop = times[start] + window;
        if times.last().is_none_or(|&t| t < stop) {
            break;
        }
        end = end.max(start);
        while end < times.len() && times[end] <= stop {
            end += 1;
        }
        let slice = &values[start..end];
        let hi = slice.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = slice.iter().copied().fold(f64::INFINITY, f64::min);
        out.push((times[start], hi - lo));
    }
    out
}
