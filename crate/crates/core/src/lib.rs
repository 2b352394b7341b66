//! Damped quantum oscillators with variable quadratic Hamiltonians.
//!
//! The crate builds Gaussian Green functions from the Hamiltonian
//! coefficients through the characteristic equation, propagates wave packets
//! with them, expands the shifted oscillator in its eigenbasis (Mehler
//! resummation, ladder operators) and integrates the expectation-value
//! dynamics. Every closed-form result is paired with an independent
//! numerical route so the two can be checked against each other; the
//! [`verify`] module bundles those checks into a suite.

pub mod dynamics;
pub mod eigenstates;
pub mod error;
pub mod kernel;
pub mod models;
pub mod moments;
pub mod numerics;
pub mod profile;
pub mod verify;

pub use error::{Error, Result};
pub use models::{builtin_model, CoefficientSet, ModelKind, OperatorCoefficients};
