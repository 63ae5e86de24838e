//! Generalized diffusions on Krein strings and the complete-Bernstein
//! functional calculus they induce.
//!
//! A string `m` (a non-decreasing, right-continuous mass function on the
//! half line) determines a generalized diffusion, a hitting-time law at
//! the origin, and a complete Bernstein function `psi_m`. This crate
//! evaluates `psi_m(A)` for finite symmetric positive-semidefinite
//! operators `A` through independent routes:
//!
//! * the scalar Sturm-Liouville problem of the string ([`bernstein`]),
//! * the Phillips formula over the Levy triple ([`calculus`]),
//! * the Dirichlet-to-Wentzell operator of the extension problem
//!   ([`calculus`]),
//! * subordination by the inverse local time, sampled by Monte Carlo
//!   ([`montecarlo`]).
//!
//! Spectral data of the killed diffusion (eigenfunctions, principal
//! measure, hitting/transition densities) lives in [`spectral`]; string
//! convergence diagnostics in [`stability`].
//!
//! The crate is `no_std` + `alloc`; all floating-point transcendentals
//! go through [`math`] so behaviour is identical on every target.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bernstein;
pub mod calculus;
pub mod error;
pub mod linalg;
pub mod math;
pub mod montecarlo;
pub mod quad;
pub mod spectral;
pub mod stability;
pub mod string;

pub use error::{Error, Result};
pub use string::KreinString;
