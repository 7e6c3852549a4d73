//! Generalized Friedrichs angles for N subspaces and the method of
//! alternating projections, in finite dimension.
//!
//! The crate computes the Friedrichs and Dixmier numbers, the configuration
//! constants and the inclination of a system of subspaces of ℝ^d, runs
//! cyclic and random alternating projections, and checks the known
//! convergence-rate bounds against measured operator norms.

pub mod angles;
pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod numerics;
pub mod subspace;

pub use angles::{AngleReport, InclinationBudget, InclinationEstimate};
pub use error::{Error, Result};
pub use numerics::{Matrix, TolerancePolicy, Vector};
pub use subspace::{Projector, Subspace, SubspaceSystem};
