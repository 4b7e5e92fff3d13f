use thiserror::Error;

use crate::hilbert::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trap configuration: {0}")]
    InvalidTrap(String),

    #[error("{mode} mode frequency is imaginary: ω_r² = {omega_r_sq:.6e} < (12/5)·ω_z² = {limit:.6e} (rad/s)²")]
    ComplexFrequency {
        mode: &'static str,
        omega_r_sq: f64,
        limit: f64,
    },

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("basis dimension {dimension} exceeds the cap of {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("ket |{n_a},{n_b},{n_c}⟩ is outside the truncated basis")]
    OutOfTruncation { n_a: usize, n_b: usize, n_c: usize },

    #[error("coherent state in mode {mode} loses {leakage:.3e} of its weight to the truncation (|α|² = {alpha_sq}, n_max = {n_max})")]
    TruncationLeak {
        mode: Mode,
        alpha_sq: f64,
        n_max: usize,
        leakage: f64,
    },

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("no sector labelled (N1={0}, N2={1}) in this basis")]
    MissingSector(usize, usize),

    #[error("Krylov propagation failed to reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    ConvergenceFailure { tolerance: f64, estimate: f64 },

    #[error("design matrix condition number {condition:.3e} exceeds {limit:.1e}; extend the time window or sample more densely")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
