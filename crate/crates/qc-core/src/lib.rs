//! Quasi-contact sub-Riemannian structures on 4-manifolds: pointwise
//! geometry, semi-analytic spectra and trace functionals, Hermite functions,
//! the formal Birkhoff normal form, the boundary Ẑ-flow and microlocal Weyl
//! averages.
//!
//! Everything here is `no_std` + `alloc`. Grid operators, FFT-based
//! transforms and IO live in the `qclab` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod dynamics;
pub mod geometry;
pub mod hermite;
pub mod normalform;
pub mod quadrature;
pub mod real;
pub mod spectral;

pub use real::{Dual, Real};
