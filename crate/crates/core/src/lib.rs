//! Coupled replicator learning between information-constrained strategy
//! classes in the iterated prisoner's dilemma.
//!
//! The crate is organized bottom-up: [`game`] defines payoffs, memory-one
//! strategies, and information classes (set partitions of the four per-round
//! outcomes); [`equilibrium`] computes the stationary outcome distribution of
//! a strategy pair three independent ways; [`gradients`] differentiates that
//! distribution with respect to single strategy components; [`dynamics`]
//! integrates the coupled learning flow; [`analysis`] classifies outcomes and
//! studies the reduced oscillator on the exploitation boundary; and
//! [`experiments`] runs seeded ensembles, tournaments, and sweeps.

pub mod analysis;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod game;
pub mod gradients;

pub use error::{Error, Result};

/// Decimal text with 12 significant digits, the precision every CSV and
/// JSON artifact is written at.
pub fn sig12(value: f64) -> String {
    format!("{value:.11e}")
}
