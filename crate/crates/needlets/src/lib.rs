//! Frames of band-limited functions ("needlets") for Jacobi expansions on
//! `[-1, 1]`, together with the function-space machinery they discretize.
//!
//! The crate is organized bottom-up:
//!
//! * [`jacobi`] - the underlying metric measure space, orthonormal
//!   polynomials, ball measures, doubling certification, quadrature;
//! * [`spectral`] - smooth spectral multipliers, band-limited kernels, heat
//!   kernel evaluation and its certified bounds;
//! * [`nets`] - maximal separated nets, Voronoi-type cells, sampling checks
//!   and positive cubature rules on nets;
//! * [`frames`] - tight, needlet-style and perturbation-dual frame pairs,
//!   with analysis/synthesis and certification;
//! * [`besov`] - Besov norms by four routes (Littlewood-Paley, heat
//!   semigroup, best approximation, frame coefficients) and their comparison;
//! * [`io`] - deterministic serialization of frames and reports.

pub mod besov;
pub mod error;
pub mod frames;
pub mod io;
pub mod jacobi;
pub mod nets;
pub mod spectral;
pub mod util;

pub use error::{Error, Result};
pub use jacobi::JacobiSetting;
