//! Finite-dimensional models of Hilbert C*-modules and isometry semigroups.
//!
//! The library works over algebras `B = M_{n_1}(C) ⊕ … ⊕ M_{n_k}(C)` and
//! realizes `L²`-type module spaces as finitely supported vectors on a uniform
//! slot grid, so that shift isometries, interval projections and their
//! adjoints are exact up to floating-point rounding.  On top of that sit
//!
//! * [`cooper`] — reconstruction of a pure isometry semigroup as the standard
//!   right shift over an extracted multiplicity module,
//! * [`wold`] — discrete-time splitting into unitary and pure parts,
//! * [`gallery`] — desk-scale realizations of the classical counterexamples
//!   (non-decomposition, broken strong continuity, non-adjointability shadow,
//!   Weyl commutation relations).
//!
//! Every identity is checked as a residual against an explicit tolerance and
//! collected into machine-readable reports (see [`report`]).

pub mod algebra;
pub mod cooper;
pub mod gallery;
pub mod grid;
pub mod json;
pub mod report;
pub mod runner;
pub mod wold;

use thiserror::Error;

/// Default tolerance for residual-norm identity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
