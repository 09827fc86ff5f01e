//! Sublinear primal–dual solvers for linear classification, minimum enclosing
//! ball, ℓ2-margin SVM and zero-sum games.
//!
//! The quantum subroutines these algorithms are built on (state preparation by
//! amplitude amplification, Dürr–Høyer maximum finding, amplitude estimation)
//! are simulated at the level of their outcome distributions. Oracle calls are
//! billed to a [`instance::QueryLedger`], so query complexity can be measured
//! alongside solution quality.
//!
//! Indices are 0-based throughout the API. The textual instance syntax
//! (`case1:n=..,d=..,k=..,l=..`) uses 1-based planted indices.

pub mod classify;
pub mod error;
pub mod instance;
pub mod mwdual;
pub mod qsim;
pub mod quadratic;
pub mod reference;
pub mod rng;
pub mod zerosum;

pub use error::{Error, Result};
