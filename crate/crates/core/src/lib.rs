//! Hard-label black-box adversarial attacks driven by Bayesian optimization
//! over structured low-dimensional subspaces.
//!
//! Instead of searching the full image space, the attack optimizes a small
//! coefficient vector and maps it to a full-resolution perturbation through a
//! norm-preserving embedding: low-frequency Fourier coefficients for
//! l2-bounded attacks, a low-resolution pixel grid upsampled by nearest
//! neighbor for l-infinity. A Gaussian-process surrogate with a Matern-5/2
//! ARD kernel models the (binary or margin-valued) attack objective, and each
//! query point is chosen by maximizing an acquisition function (expected
//! improvement by default) with a bounded quasi-Newton ascent.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature for embedded use. IO, file formats, the wire protocol and
//! the campaign CLI live in the companion `sbo-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod acquisition;
pub mod attack;
pub mod gp;
pub mod lbfgs;
pub(crate) mod linalg;
pub(crate) mod math;
pub mod oracle;
pub mod subspace;
