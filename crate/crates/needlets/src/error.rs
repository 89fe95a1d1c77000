//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction and analysis routines.
#[derive(Error, Debug)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// A polynomial degree request exceeds the configured maximum.
    #[error("degree {requested} exceeds configured maximum {max}")]
    DegreeLimit { requested: usize, max: usize },

    /// A truncated expansion could not meet the requested tail tolerance.
    #[error("truncation at degree {degree} leaves tail bound {tail:.3e} above tolerance {tol:.3e}")]
    TailTolerance { degree: usize, tail: f64, tol: f64 },

    /// An eigenvalue or linear solve failed to converge.
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    /// The cubature moment system could not be solved to tolerance.
    #[error("cubature infeasible at degree {degree}: {detail}")]
    CubatureInfeasible { degree: usize, detail: String },

    /// The perturbation series for the dual-frame operator does not contract.
    #[error(
        "correction series diverges at level {level}: operator norm {norm:.6} >= 1 \
         (use a finer net, i.e. smaller gamma)"
    )]
    SeriesDivergence { level: usize, norm: f64 },

    /// Mismatched dimensions between a coefficient set and a frame.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An artifact on disk is missing or malformed.
    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
