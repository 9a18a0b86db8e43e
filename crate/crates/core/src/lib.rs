//! Rare-event failure probability estimation for nonlinear stochastic
//! dynamic systems.
//!
//! The library combines three ingredients:
//!
//! * **Generalized stratified sampling (GSS)** over a cheap stratification
//!   variable (peak elastic base moment), explored with a large Phase-I
//!   Monte Carlo pass.
//! * **Multi-fidelity Monte Carlo (MFMC)** control variates inside each
//!   stratum, pairing a small number of high-fidelity nonlinear time-history
//!   solves with many cheap surrogate predictions.
//! * An **adaptively trained surrogate**: a gated recurrent network acting on
//!   wavelet-compressed, POD-reduced load/response sequences, grown until its
//!   cross-validated weighted correlation with the high-fidelity model meets
//!   targets.
//!
//! The crate exposes each building block (excitation synthesis, the
//! hysteretic solver, stratification, reduction, the surrogate, and the
//! estimator algebra) plus a [`pipeline`] module that wires them into the
//! staged workflow used by the `mfss` CLI.

pub mod artifacts;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod excitation;
pub mod ledger;
pub mod pipeline;
pub mod presets;
pub mod reduction;
pub mod stats;
pub mod strata;
pub mod stream;
pub mod surrogate;

pub use error::{Error, Result};
