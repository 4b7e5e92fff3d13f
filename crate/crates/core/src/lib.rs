//! Simulation of three bosonic modes coupled by a trilinear interaction
//! `ħξ(a†bc + ab†c†)`, with every physical parameter derived from the
//! trap frequencies of a linear three-ion crystal.
//!
//! The crate is organized bottom-up:
//!
//! - [`modes`]: classical normal modes of the crystal and the coupling rate.
//! - [`hilbert`]: the truncated three-mode Fock space, split into blocks that
//!   the interaction never mixes.
//! - [`dynamics`]: Hamiltonians, per-block spectra and time evolution.
//! - [`observe`]: sideband signals, phonon-number reconstruction and fits.
//! - [`scenarios`]: scripted end-to-end runs that emit tables.
//! - [`cli`]: the `trilin` command-line frontend.

pub mod cli;
pub mod dynamics;
mod error;
pub mod hilbert;
pub mod modes;
pub mod observe;
pub mod scenarios;

pub use error::{Error, Result};
