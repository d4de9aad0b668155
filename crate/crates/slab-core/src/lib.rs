//! Numerical toolkit for the second-order ground-state energy of a Bose gas on a thin
//! periodic slab `[-1/2, 1/2]^2 x [-d/2, d/2]`.
//!
//! The crate is `no_std` (with `alloc`). Enable the `parallel` feature for rayon-backed
//! shell summation; results are bit-identical with or without it.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod energy;
pub mod error;
pub mod fock_oracle;
pub mod lattice_sums;
pub mod numerics;
pub mod potentials;
pub mod scattering;
pub mod torus_fourier;

pub use error::{Error, Result};
