//! Numerical laboratory for the half-plane Stokes Dirichlet-to-Neumann map.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod commutator;
pub mod error;
pub mod geometry;
pub mod identities;
pub mod kernels;
pub mod measures;
pub mod quadrature;
pub mod spectral;
pub mod stokes;

pub use error::{DtnError, Result};
