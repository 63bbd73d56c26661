//! Photon antibunching from one or two driven two-level emitters.
//!
//! The crate simulates quantum-jump trajectories of a driven atom pair with
//! dipole-dipole coupling and collective decay, estimates intensity
//! correlations from the emitted photon stream, and derives the coupling
//! parameters of emitters placed near a dielectric nanosphere.
//!
//! * [`quantum_core`]: states, operators, Hamiltonians, matrix exponential.
//! * [`collective_decay`]: collective jump operators from the decay matrix.
//! * [`dynamics`]: trajectories, master equation, closed-form pair solution.
//! * [`photon_stats`]: `g²(τ)` estimation and Poisson-mixture statistics.
//! * [`nanotip`]: near field, Purcell rates and couplings at the sphere.
//! * [`experiments`]: the command-line experiments as library calls.

pub mod collective_decay;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod nanotip;
pub mod output;
pub mod photon_stats;
pub mod quantum_core;
pub mod seeding;

pub use error::{Error, Result};
