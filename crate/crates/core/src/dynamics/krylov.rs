//! Action of `exp(−iτT)` on a vector via Lanczos, with adaptive sub-steps.
//!
//! Each sub-step builds an `m`-dimensional Krylov space, exponentiates the
//! projected tridiagonal matrix exactly, and estimates the local error with
//! the `β·h_{m+1,m}·|e_mᵀ τφ₁(−iτT_m) e₁|` bound. The error budget is spread
//! over the interval in proportion to step length.

use num_complex::Complex64;

use super::tridiag::SymTridiagonal;
use crate::{Error, Result};

const MAX_STEPS: usize = 1_000_000;
const SAFETY: f64 = 0.9;

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

struct Lanczos {
    /// Orthonormal basis vectors.
    basis: Vec<Vec<Complex64>>,
    projected: SymTridiagonal,
    /// Norm of the residual after the last vector; zero when the Krylov
    /// space is invariant.
    residual: f64,
}

fn lanczos(op: &SymTridiagonal, start: &[Complex64], m: usize) -> Lanczos {
    let n = start.len();
    let mut basis: Vec<Vec<Complex64>> = vec![start.to_vec()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut residual = 0.0;
    for j in 0..m {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalization, twice.
        for _ in 0..2 {
            for v in &basis {
                let h = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
        }
        let b = norm(&w);
        if j + 1 == n || b <= f64::MIN_POSITIVE {
            // Invariant subspace: the projection is exact.
            break;
        }
        if j + 1 == m {
            residual = b;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|c| c / b).collect());
    }
    let k = alpha.len();
    basis.truncate(k);
    beta.truncate(k.saturating_sub(1));
    Lanczos {
        basis,
        projected: SymTridiagonal::new(alpha, beta),
        residual,
    }
}

/// `τ·φ₁(−iτλ) = (e^{−iτλ} − 1)/(−iλ)`.
fn tau_phi1(lambda: f64, tau: f64) -> Complex64 {
    let x = tau * lambda;
    if x.abs() < 1e-6 {
        // τ(1 − ix/2 − x²/6)
        Complex64::new(tau * (1.0 - x * x / 6.0), -tau * x / 2.0)
    } else {
        let e = Complex64::new(0.0, -x).exp();
        (e - 1.0) / Complex64::new(0.0, -lambda)
    }
}

/// `exp(−i t op) v`, accurate to roughly `tolerance·‖v‖`.
pub fn expm_action(
    op: &SymTridiagonal,
    v: &[Complex64],
    t: f64,
    tolerance: f64,
    max_dim: usize,
) -> Result<Vec<Complex64>> {
    let n = v.len();
    let beta0 = norm(v);
    let anorm = op.inf_norm();
    if t == 0.0 || beta0 == 0.0 || n == 0 {
        return Ok(v.to_vec());
    }
    if anorm == 0.0 {
        return Ok(v.to_vec());
    }
    let (sign, t_total) = if t < 0.0 { (-1.0, -t) } else { (1.0, t) };
    let m = max_dim.max(2).min(n);
    let tol = tolerance * beta0;

    // Expokit's initial step guess.
    let mf = m as f64;
    let fact = ((mf + 1.0) / std::f64::consts::E).powf(mf + 1.0) * (2.0 * std::f64::consts::PI * (mf + 1.0)).sqrt();
    let mut tau = ((fact * tol / (4.0 * beta0 * anorm)).powf(1.0 / mf) / anorm).min(t_total);

    let mut w = v.to_vec();
    let mut t_now = 0.0;
    let mut steps = 0;
    while t_now < t_total {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::ConvergenceFailure { tolerance, estimate: f64::NAN });
        }
        let beta = norm(&w);
        let start: Vec<Complex64> = w.iter().map(|c| c / beta).collect();
        let space = lanczos(op, &start, m);
        let k = space.projected.len();
        let eig = space.projected.eigen()?;
        // Qᵀe₁ and Qᵀe_k.
        let first: Vec<f64> = (0..k).map(|j| eig.vector(j)[0]).collect();
        let last: Vec<f64> = (0..k).map(|j| eig.vector(j)[k - 1]).collect();

        let mut retries = 0;
        let (y, err, used) = loop {
            let step = tau.min(t_total - t_now);
            let err = if space.residual == 0.0 {
                0.0
            } else {
                let est: Complex64 = (0..k)
                    .map(|j| last[j] * first[j] * tau_phi1(sign * eig.values[j], step))
                    .sum();
                beta * space.residual * est.norm()
            };
            let budget = tol * step / t_total;
            if err <= budget || err == 0.0 {
                let phases: Vec<Complex64> = (0..k)
                    .map(|j| Complex64::new(0.0, -sign * eig.values[j] * step).exp() * first[j])
                    .collect();
                let y: Vec<Complex64> = (0..k)
                    .map(|i| (0..k).map(|j| phases[j] * eig.vector(j)[i]).sum::<Complex64>() * beta)
                    .collect();
                break (y, err, step);
            }
            retries += 1;
            if retries > 60 || step < t_total * 1e-15 {
                return Err(Error::ConvergenceFailure { tolerance, estimate: err / beta0 });
            }
            tau = step * (SAFETY * (budget / err).powf(1.0 / mf)).clamp(0.1, 0.9);
        };

        w.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (yi, vi) in y.iter().zip(&space.basis) {
            for (wc, vc) in w.iter_mut().zip(vi) {
                *wc += yi * vc;
            }
        }
        t_now += used;
        if t_now >= t_total * (1.0 - 1e-15) {
            break;
        }
        let budget = tol * used / t_total;
        let growth = if err == 0.0 { 5.0 } else { (SAFETY * (budget / err).powf(1.0 / mf)).clamp(0.2, 5.0) };
        tau = used * growth;
    }
    Ok(w)
}
