use serde::Serialize;

use crate::hilbert::PhononDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Poisson,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub nbar: f64,
    /// L1 norm of `residuals`.
    pub residual_norm: f64,
    /// `pₙ − modelₙ` over the distribution's support.
    pub residuals: Vec<f64>,
}

fn fit_with(dist: &PhononDistribution, model: FitModel, pmf: impl Iterator<Item = f64>) -> FitResult {
    let residuals: Vec<f64> = dist.probabilities().iter().zip(pmf).map(|(p, q)| p - q).collect();
    FitResult {
        model,
        nbar: dist.mean(),
        residual_norm: residuals.iter().map(|r| r.abs()).sum(),
        residuals,
    }
}

/// Poisson fit. The maximum-likelihood mean of a Poisson model is the
/// sample mean, so `n̄` is the distribution mean.
pub fn fit_poisson(dist: &PhononDistribution) -> FitResult {
    let nbar = dist.mean();
    let pmf = (0..).scan((-nbar).exp(), move |term, n: usize| {
        if n > 0 {
            *term *= nbar / n as f64;
        }
        Some(*term)
    });
    fit_with(dist, FitModel::Poisson, pmf)
}

/// Thermal (geometric) fit `pₙ = n̄ⁿ/(1+n̄)^{n+1}` by moment matching.
pub fn fit_geometric(dist: &PhononDistribution) -> FitResult {
    let nbar = dist.mean();
    let ratio = nbar / (1.0 + nbar);
    let pmf = (0..).scan(1.0 / (1.0 + nbar), move |term, n: usize| {
        if n > 0 {
            *term *= ratio;
        }
        Some(*term)
    });
    fit_with(dist, FitModel::Geometric, pmf)
}

/// `y ≈ offset + amplitude·cos(ωt + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinusoidFit {
    pub omega: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub rms: f64,
}

const GRID_POINTS: usize = 801;
const GRID_SPAN: f64 = 0.3;

/// Linear least squares in `[1, cos ωt, sin ωt]` at fixed ω; returns the
/// coefficients and the residual sum of squares.
fn linear_at(times: &[f64], values: &[f64], omega: f64) -> ([f64; 3], f64) {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&t, &y) in times.iter().zip(values) {
        let row = [1.0, (omega * t).cos(), (omega * t).sin()];
        for i in 0..3 {
            atb[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let a = nalgebra::Matrix3::from_fn(|i, j| ata[i][j]);
    let b = nalgebra::Vector3::from(atb);
    let coeffs = a
        .cholesky()
        .map(|c| c.solve(&b))
        .or_else(|| a.try_inverse().map(|inv| inv * b))
        .map_or([0.0; 3], |x| [x[0], x[1], x[2]]);
    let rss = times
        .iter()
        .zip(values)
        .map(|(&t, &y)| {
            let m = coeffs[0] + coeffs[1] * (omega * t).cos() + coeffs[2] * (omega * t).sin();
            (y - m) * (y - m)
        })
        .sum();
    (coeffs, rss)
}

/// Single-frequency sinusoid fit: a grid search over `guess·(1 ± 0.3)`,
/// then golden-section refinement around the best grid point. Deterministic
/// for a given guess.
pub fn fit_sinusoid(times: &[f64], values: &[f64], omega_guess: f64) -> Result<SinusoidFit> {
    if times.len() != values.len() || times.len() < 4 {
        return Err(Error::InvalidInput("sinusoid fit needs at least four (t, y) pairs".into()));
    }
    if !(omega_guess > 0.0 && omega_guess.is_finite()) {
        return Err(Error::InvalidInput(format!("frequency guess must be positive, got {omega_guess}")));
    }
    let lo = omega_guess * (1.0 - GRID_SPAN);
    let step = 2.0 * GRID_SPAN * omega_guess / (GRID_POINTS - 1) as f64;
    let best = (0..GRID_POINTS)
        .map(|k| lo + step * k as f64)
        .map(|w| (w, linear_at(times, values, w).1))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(w, _)| w)
        .unwrap_or(omega_guess);

    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let mut fc = linear_at(times, values, c).1;
    let mut fd = linear_at(times, values, d).1;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * best.abs() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = linear_at(times, values, c).1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = linear_at(times, values, d).1;
        }
    }
    let omega = 0.5 * (a + b);
    let (coeffs, rss) = linear_at(times, values, omega);
    Ok(SinusoidFit {
        omega,
        offset: coeffs[0],
        amplitude: coeffs[1].hypot(coeffs[2]),
        phase: (-coeffs[2]).atan2(coeffs[1]),
        rms: (rss / times.len() as f64).sqrt(),
    })
}
