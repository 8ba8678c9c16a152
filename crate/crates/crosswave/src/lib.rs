//! Spectral laboratory for the many-body Schrödinger equation with
//! regularized Coulomb potentials: hyperbolic-cross projections,
//! mixed-regularity norms, symmetric splitting and Picard propagators, and
//! numerical verification of the Hardy / Sobolev / Strichartz inequalities
//! that control them.
//!
//! Start with [`lattice::make_grid`] to build a configuration-space grid,
//! [`spin::slater_init`] for Pauli-admissible initial data, and
//! [`hypercross::enumerate_cross`] for the reduced frequency set.

pub mod error;
pub mod experiments;
pub mod hypercross;
pub mod inequalities;
pub mod lattice;
pub mod multipliers;
pub mod norms;
pub mod potentials;
pub mod propagate;
pub mod spin;

pub use error::{CwError, Result};
