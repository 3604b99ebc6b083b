//! Simulation of symmetric Rydberg-blockade CZ gates driven by double
//! adiabatic-rapid-passage pulses with a counterdiabatic correction.
//!
//! The crate is split along the physics pipeline:
//!
//! * [`pulse`] evaluates the analytic pulse family, its derivatives and the
//!   counterdiabatic term, plus the two- and three-photon constructions.
//! * [`model`] holds level schemes, decay channels, and assembles one- and
//!   two-atom Hamiltonians and jump operators.
//! * [`dynamics`] propagates pure states and density matrices.
//! * [`gate`] runs CZ protocols, applies ideal single-qubit gates and scores
//!   Bell-state preparation.
//! * [`sweep`] runs parameter grids and a bounded Nelder-Mead optimizer.
//! * [`config`] parses unit-tagged TOML configs and ships figure presets.
//! * [`cli`] implements the commands of the `cdgate` binary.
//!
//! All frequencies are angular (rad/us) and all times are in microseconds;
//! `hbar = 1`.

// Negated comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod gate;
pub mod linalg;
pub mod manifest;
pub mod model;
pub mod pulse;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};

/// Crate version echoed into run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
