//! Fourier–Bessel harmonic analysis on R_+^n.

// `!(x > 0.0)` is used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod functions;
pub mod grid;
pub mod interp;
pub mod io;
pub mod multiplier;
pub mod quadrature;
pub mod special;
pub mod transform;
pub mod translation;
pub mod uncertainty;

pub use error::{PaxError, Result};
