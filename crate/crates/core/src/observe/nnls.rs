//! Lawson–Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const MAX_OUTER: usize = 500;

fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let eps = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * svd.singular_values.max();
    svd.solve(b, eps)
        .map_err(|e| Error::InvalidInput(format!("least-squares solve failed: {e}")))
}

fn columns(a: &DMatrix<f64>, set: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), set.len(), |i, j| a[(i, set[j])])
}

/// `argmin ‖Ax − b‖₂` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * a.norm() * a.nrows().max(n) as f64;

    for _ in 0..MAX_OUTER {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate.filter(|&j| w[j] > tol) else {
            return Ok(x);
        };
        passive[j] = true;

        loop {
            let set: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let z = lstsq(&columns(a, &set), b)?;
            if z.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in set.iter().enumerate() {
                    x[i] = z[k];
                }
                break;
            }
            // Step from x toward z until the first passive entry hits zero.
            let mut alpha = f64::INFINITY;
            for (k, &i) in set.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - z[k]));
                }
            }
            for (k, &i) in set.iter().enumerate() {
                x[i] += alpha * (z[k] - x[i]);
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Err(Error::ConvergenceFailure { tolerance: tol, estimate: f64::NAN })
}

/// 2-norm condition number `σ_max/σ_min`; infinite for rank-deficient input.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_solution_when_positive() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x_true = DVector::from_vec(vec![0.3, 0.7]);
        let b = &a * &x_true;
        let x = nnls(&a, &b).unwrap();
        assert!((x - x_true).norm() < 1e-14);
    }

    #[test]
    fn clamps_negative_component() {
        // Unconstrained optimum is (2, −1); the constrained one is (x, 0).
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, -1.0]);
        let x = nnls(&a, &b).unwrap();
        assert_eq!(x[1], 0.0);
        assert!((x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn condition_of_identity() {
        assert!((condition_number(&DMatrix::identity(4, 4)) - 1.0).abs() < 1e-15);
    }
}
