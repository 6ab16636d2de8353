//! Weak-measurement simulator that accounts for the probe's own Hamiltonian
//! dynamics.
//!
//! The crate provides an exact numeric engine for pre/postselected pointer
//! statistics of a small-dimension system coupled to a mixed Gaussian probe,
//! the weak-limit closed formulas (including the imaginary-weak-value
//! contribution driven by the probe's free evolution), and spin-1/2 closed
//! forms that serve as mutual cross-checks, plus a CSV-emitting scenario
//! runner behind the `weakmeter` binary.

pub mod config;
pub mod error;
pub mod measurement_engine;
pub mod probe_model;
pub mod quantum_core;
pub mod runner;
pub mod spin_analytic;

pub use error::{Error, Result};
