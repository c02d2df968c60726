//! Numerical laboratory for perturbed Hodge-Dirac operators `Π_B = Γ + B₁Γ*B₂`
//! on periodic grids.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: tori, `ℂ^N`-valued fields, FFTs, norms and grid geometry.
//! - [`dirac`]: symbols, perturbations, structural audits and the standard
//!   constructors (first-order model, elliptic blocks, DA systems, forms).
//! - [`resolvent`]: `R_t`, `P_t`, `Q_t`, Hodge projections and potential maps.
//! - [`funcalc`]: contour-quadrature functional calculus, `sgn`, square roots.
//! - [`tent`]: tent-space norms, Carleson functionals, dyadic averages, Schur
//!   operators on tent fields.
//! - [`probes`]: experiment drivers and the dense oracle.

// `!(x > y)` guards are used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dirac;
pub mod error;
pub mod funcalc;
pub mod lattice;
mod linalg;
pub mod probes;
pub mod random;
pub mod resolvent;
pub mod tent;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use dirac::{DiracSymbol, PerturbedDirac};
pub use lattice::{Field, GridSet, MatrixField, Torus};
pub use resolvent::{ResolventPlan, SolverMode, SolverOptions};
pub use tent::{TentField, TimeGrid};


