//! Detection-side modeling: sideband flopping signals synthesized from
//! phonon distributions, phonon-number reconstruction from such signals,
//! and distribution fits.

mod fit;
pub mod nnls;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use fit::{fit_geometric, fit_poisson, fit_sinusoid, FitModel, FitResult, SinusoidFit};

use crate::hilbert::{Mode, PhononDistribution};
use crate::{Error, Result};

/// Condition number above which reconstruction is refused.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Default probe Rabi frequency, 2π × 10 kHz.
pub const DEFAULT_OMEGA0: f64 = 2.0 * PI * 10e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidebandKind {
    Red,
    Blue,
}

/// Phenomenological contrast decay `e^{−γₙt}` with `γₙ = γ₀(n+1)^0.7`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub gamma0: f64,
}

impl Envelope {
    pub fn rate(&self, n: usize) -> f64 {
        self.gamma0 * ((n + 1) as f64).powf(0.7)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SidebandSignal {
    pub kind: SidebandKind,
    pub mode: Mode,
    /// Base Rabi frequency Ω₀, rad/s.
    pub omega0: f64,
    pub times: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SidebandSignal {
    pub fn new(kind: SidebandKind, mode: Mode, omega0: f64, times: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        check_probe(omega0, &times)?;
        if times.len() != probabilities.len() {
            return Err(Error::InvalidInput(format!(
                "{} times but {} probabilities",
                times.len(),
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
        }
        Ok(Self { kind, mode, omega0, times, probabilities })
    }
}

fn check_probe(omega0: f64, times: &[f64]) -> Result<()> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::InvalidInput(format!("Rabi frequency must be positive, got {omega0}")));
    }
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Rabi-frequency multiplier for phonon number `n` on the given sideband,
/// or `None` when the transition does not exist (red sideband of `|0⟩`).
fn sideband_factor(kind: SidebandKind, n: usize) -> Option<f64> {
    match kind {
        SidebandKind::Blue => Some(((n + 1) as f64).sqrt()),
        SidebandKind::Red => (n >= 1).then(|| (n as f64).sqrt()),
    }
}

/// Excitation probability after driving a motional sideband for each time
/// in `times`: blue `Σ pₙ sin²(√(n+1)Ω₀t/2)`, red `Σ_{n≥1} pₙ sin²(√n Ω₀t/2)`.
pub fn synthesize_sideband(
    dist: &PhononDistribution,
    kind: SidebandKind,
    omega0: f64,
    times: &[f64],
    envelope: Option<Envelope>,
) -> Result<SidebandSignal> {
    check_probe(omega0, times)?;
    let probabilities = times
        .iter()
        .map(|&t| {
            let p: f64 = dist
                .probabilities()
                .iter()
                .enumerate()
                .filter_map(|(n, &pn)| {
                    let f = sideband_factor(kind, n)?;
                    let decay = envelope.map_or(1.0, |e| (-e.rate(n) * t).exp());
                    Some(pn * 0.5 * (1.0 - decay * (f * omega0 * t).cos()))
                })
                .sum();
            p.clamp(0.0, 1.0)
        })
        .collect();
    Ok(SidebandSignal {
        kind,
        mode: dist.mode(),
        omega0,
        times: times.to_vec(),
        probabilities,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inversion {
    /// Non-negative least squares on the known flopping curves.
    #[default]
    LeastSquares,
    /// Direct cosine projection of the signal onto each flopping frequency.
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub distribution: PhononDistribution,
    /// RMS difference between the signal and the model rebuilt from the
    /// recovered distribution.
    pub residual_rms: f64,
    pub condition_number: f64,
    /// False when the largest sampling interval exceeds the Nyquist limit of
    /// the fastest flopping frequency.
    pub nyquist_ok: bool,
}

/// Recovers `p₀..p_{n_cut}` from a noiseless or noisy sideband signal.
pub fn reconstruct_distribution(signal: &SidebandSignal, n_cut: usize, method: Inversion) -> Result<Reconstruction> {
    check_probe(signal.omega0, &signal.times)?;
    if n_cut == 0 {
        return Err(Error::InvalidInput("n_cut must be at least 1".into()));
    }
    let kind = signal.kind;
    // Phonon numbers carrying a flopping curve.
    let ns: Vec<usize> = (0..=n_cut).filter(|&n| sideband_factor(kind, n).is_some()).collect();
    let freqs: Vec<f64> = ns.iter().map(|&n| sideband_factor(kind, n).unwrap() * signal.omega0).collect();
    let rows = signal.times.len();

    let max_dt = signal.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let fastest = freqs.iter().copied().fold(0.0, f64::max);
    let nyquist_ok = rows > 1 && fastest * max_dt < PI;

    let design = DMatrix::from_fn(rows, ns.len(), |i, j| {
        let x = freqs[j] * signal.times[i];
        0.5 * (1.0 - x.cos())
    });
    let condition_number = nnls::condition_number(&design);
    if !(condition_number <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition: condition_number, limit: CONDITION_LIMIT });
    }
    let b = DVector::from_column_slice(&signal.probabilities);

    let coeffs: Vec<f64> = match method {
        Inversion::LeastSquares => {
            let mut x = nnls::nnls(&design, &b)?;
            if x.sum() > 1.0 + 1e-12 {
                // Weighting method: append a heavily weighted Σp = 1 row.
                let w = 1e6 * design.norm();
                let mut aug = design.clone().insert_row(rows, w);
                aug.row_mut(rows).fill(w);
                let bb = b.clone().insert_row(rows, w);
                x = nnls::nnls(&aug, &bb)?;
                let s = x.sum();
                if s > 1.0 {
                    x /= s;
                }
            }
            x.iter().copied().collect()
        }
        Inversion::Fourier => fourier_projection(signal, &freqs),
    };

    let mut probs = vec![0.0; n_cut + 1];
    for (&n, &c) in ns.iter().zip(&coeffs) {
        probs[n] = c.max(0.0);
    }
    if kind == SidebandKind::Red {
        probs[0] = (1.0 - probs[1..].iter().sum::<f64>()).max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if total > 1.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }

    let model = &design * DVector::from_iterator(ns.len(), ns.iter().map(|&n| probs[n]));
    let residual_rms = ((model - b).norm_squared() / rows as f64).sqrt();
    Ok(Reconstruction {
        distribution: PhononDistribution::new(signal.mode, probs)?,
        residual_rms,
        condition_number,
        nyquist_ok,
    })
}

/// `pₙ ≈ −(4/T)∫(P − P̄) cos(ωₙt) dt`, trapezoidal on the signal grid.
/// Leaks between incommensurate frequencies; kept for comparison.
fn fourier_projection(signal: &SidebandSignal, freqs: &[f64]) -> Vec<f64> {
    let t = &signal.times;
    let p = &signal.probabilities;
    let span = t[t.len() - 1] - t[0];
    if span <= 0.0 {
        return vec![0.0; freqs.len()];
    }
    let trapz = |f: &dyn Fn(usize) -> f64| -> f64 {
        t.windows(2)
            .enumerate()
            .map(|(i, w)| 0.5 * (w[1] - w[0]) * (f(i) + f(i + 1)))
            .sum()
    };
    let mean = trapz(&|i| p[i]) / span;
    freqs
        .iter()
        .map(|&w| (-4.0 / span * trapz(&|i| (p[i] - mean) * (w * t[i]).cos())).max(0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock(n: usize, n_max: usize) -> PhononDistribution {
        let mut p = vec![0.0; n_max + 1];
        p[n] = 1.0;
        PhononDistribution::new(Mode::A, p).unwrap()
    }

    fn poisson(nbar: f64, n_max: usize) -> PhononDistribution {
        let mut p = Vec::with_capacity(n_max + 1);
        let mut term = (-nbar).exp();
        for n in 0..=n_max {
            if n > 0 {
                term *= nbar / n as f64;
            }
            p.push(term);
        }
        PhononDistribution::new(Mode::C, p).unwrap()
    }

    fn grid(omega0: f64, periods: f64, samples: usize) -> Vec<f64> {
        let t_max = periods * 2.0 * PI / omega0;
        (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect()
    }

    #[test]
    fn vacuum_has_no_red_sideband() {
        let times = grid(1.0, 5.0, 50);
        let s = synthesize_sideband(&fock(0, 4), SidebandKind::Red, 1.0, &times, None).unwrap();
        assert!(s.probabilities.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn ground_state_blue_flopping() {
        let omega0 = 3.0;
        let times = grid(omega0, 3.0, 40);
        let s = synthesize_sideband(&fock(0, 4), SidebandKind::Blue, omega0, &times, None).unwrap();
        for (t, p) in times.iter().zip(&s.probabilities) {
            assert!((p - (omega0 * t / 2.0).sin().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn flopping_frequency_scales_with_root_n() {
        // |3⟩ on the blue sideband flops at √4 = 2 times the ground-state rate.
        let omega0 = 1.0;
        let times = grid(omega0, 3.0, 200);
        let s3 = synthesize_sideband(&fock(3, 4), SidebandKind::Blue, omega0, &times, None).unwrap();
        for (t, p) in times.iter().zip(&s3.probabilities) {
            assert!((p - (2.0 * omega0 * t / 2.0).sin().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_starts_at_zero_and_stays_bounded() {
        let times = grid(1.0, 10.0, 300);
        let env = Some(Envelope { gamma0: 0.05 });
        let s = synthesize_sideband(&poisson(2.0, 15), SidebandKind::Blue, 1.0, &times, env).unwrap();
        assert_eq!(s.probabilities[0], 0.0);
        assert!(s.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn ground_state_round_trip() {
        let omega0 = 1.0;
        let times = grid(omega0, 20.0, 400);
        let s = synthesize_sideband(&fock(0, 12), SidebandKind::Blue, omega0, &times, None).unwrap();
        let r = reconstruct_distribution(&s, 12, Inversion::LeastSquares).unwrap();
        assert!((r.distribution.probabilities()[0] - 1.0).abs() < 1e-8);
        assert!(r.nyquist_ok);
    }

    #[test]
    fn poisson_round_trip() {
        let omega0 = 1.0;
        let times = grid(omega0, 20.0, 400);
        let dist = poisson(1.8, 12);
        let s = synthesize_sideband(&dist, SidebandKind::Blue, omega0, &times, None).unwrap();
        let r = reconstruct_distribution(&s, 12, Inversion::LeastSquares).unwrap();
        let l1 = r.distribution.l1_distance(dist.probabilities());
        assert!(l1 < 1e-6, "L1 {l1}");
    }

    #[test]
    fn red_sideband_round_trip() {
        let omega0 = 1.0;
        let times = grid(omega0, 20.0, 400);
        let dist = poisson(1.0, 10);
        let s = synthesize_sideband(&dist, SidebandKind::Red, omega0, &times, None).unwrap();
        let r = reconstruct_distribution(&s, 10, Inversion::LeastSquares).unwrap();
        assert!(r.distribution.l1_distance(dist.probabilities()) < 1e-5);
    }

    #[test]
    fn fourier_projection_is_approximate() {
        let omega0 = 1.0;
        let times = grid(omega0, 40.0, 2000);
        let dist = fock(2, 8);
        let s = synthesize_sideband(&dist, SidebandKind::Blue, omega0, &times, None).unwrap();
        let r = reconstruct_distribution(&s, 8, Inversion::Fourier).unwrap();
        let p = r.distribution.probabilities();
        let peak = (0..p.len()).max_by(|&i, &j| p[i].total_cmp(&p[j])).unwrap();
        assert_eq!(peak, 2);
    }

    #[test]
    fn short_window_is_ill_conditioned() {
        let omega0 = 1.0;
        let times: Vec<f64> = (0..50).map(|i| 0.2 * i as f64 / 49.0).collect();
        let s = synthesize_sideband(&poisson(1.8, 12), SidebandKind::Blue, omega0, &times, None).unwrap();
        assert!(matches!(
            reconstruct_distribution(&s, 12, Inversion::LeastSquares),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn bad_grids_rejected() {
        let d = fock(0, 2);
        assert!(synthesize_sideband(&d, SidebandKind::Blue, 1.0, &[0.0, 0.0], None).is_err());
        assert!(synthesize_sideband(&d, SidebandKind::Blue, 0.0, &[0.0, 1.0], None).is_err());
    }
}
