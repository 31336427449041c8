//! Exponential sums on ℂⁿ, their tropical skeletons and the constructions
//! built on them: genericity certificates, root finding, real pencils,
//! Gaussian-net sections and the currents of their zero sets.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod currents;
pub mod expsum;
pub mod genericity;
pub mod geometry;
pub mod linalg;
pub mod skeleton;
pub mod pencil;
pub mod section;
pub mod solve;
pub mod voronoi;

pub use num_complex::Complex64;
