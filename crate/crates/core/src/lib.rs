//! Ultra-generalized Wannier bases: eigenbases of `P e^{-q<X>} P` for
//! gapped projections `P`, with exact Landau-level analytics, a grid
//! pipeline for kernel-represented projections, magnetic lattice models
//! and density-of-states diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod kernel_io;
pub mod landau;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod special_functions;

pub use error::{Error, Result};
