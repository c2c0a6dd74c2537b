//! Exact-arithmetic Θ-positivity for PO(p,q).
//!
//! This crate implements, over exact rational numbers, the positive
//! structure carried by the isometry group of a signature-(p,q) form:
//! the standard form with its J-cone, isotropic partial flags, cross
//! ratios of isotropic subspaces, the positive unipotent semigroup with
//! a factorisation-based positivity certifier, and representations on
//! the Fuchsian locus together with certified spectral data. A
//! verification harness (see the `suites` module and the `thetapq`
//! binary) replays the semigroup, cross-ratio, collar and hybrid-flag
//! inequalities on randomized inputs and reports machine-readable
//! verdicts.
//!
//! Everything that certifies an identity or an inequality is computed
//! exactly; eigenvalue moduli are the only approximate quantities and
//! carry rigorous residual-based tolerances.

pub mod approx;
pub mod crossratio;
pub mod error;
pub mod flags;
pub mod matrix;
pub mod positivity;
pub mod pqspace;
pub mod reps;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod suites;

pub use error::Error;
pub use matrix::Matrix;
pub use scalar::Scalar;
