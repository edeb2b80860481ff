//! Coupled Euler schemes for Langevin-type SDEs without global log-concavity.
//!
//! The library simulates Euler–Maruyama chains whose drift is only
//! contractive at infinity, couples pairs of such chains through a truncated
//! mirror coupling, and evaluates the explicit contraction and bias constants
//! that such couplings certify. On top of the single-chain machinery it
//! provides randomised (subsampled) drift estimators, coupled fine/coarse
//! chains for multi-level Monte Carlo, empirical Wasserstein distances, and
//! quadrature oracles that independently verify the coupling identities.
//!
//! Modules:
//!
//! - [`drift`] — drift models, subsampling estimators and certified constants
//! - [`constants`] — the contraction ledger, distance functions and bounds
//! - [`coupling`] — reflection operator and the truncated mirror coupling
//! - [`chains`] — Euler chains, coupled auxiliary chains, level pairs
//! - [`metrics`] — empirical Wasserstein distances, KS tests, rate fits
//! - [`oracles`] — quadrature and enumeration oracles
//! - [`mlmc`] — Monte Carlo baselines, the telescoping estimator, allocation
//! - [`cli`] — experiment runner behind the command line interface

pub mod chains;
pub mod cli;
pub mod config;
pub mod constants;
pub mod coupling;
pub mod drift;
pub mod error;
pub mod metrics;
pub mod mlmc;
pub mod oracles;
pub mod output;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
