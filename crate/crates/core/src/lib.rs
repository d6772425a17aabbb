//! Numerical toolkit for hyperbolicity of compact invariant sets of convex
//! Hamiltonian flows on flat tori and lines.
//!
//! The crate is `no_std` (it needs `alloc`). Building blocks, bottom-up:
//!
//! * [`model`] and [`mechanical`]: Lagrangians, Hamiltonians, the Legendre
//!   transform and boundedness certificates.
//! * [`flow`]: orbits and Jacobi frames, co-integrated by [`ode::integrate`].
//! * [`riccati`]: slopes `S = V H^{-1}`, blowups and the uniform slope bound.
//! * [`conjugate`]: conjugate points, Green bundles, frame reconstruction.
//! * [`index_form`]: second variation, FEM positivity scans.
//! * [`hyperbolicity`]: transversal reduction, graph transform, cocycles and
//!   the two top-level deciders.
//! * [`catalog`]: builtin systems with closed-form facts.

#![no_std]

extern crate alloc;

pub mod catalog;
pub mod conjugate;
pub mod error;
pub mod flow;
pub mod hyperbolicity;
pub mod index_form;
pub mod linalg;
pub mod mechanical;
pub mod model;
pub mod ode;
pub mod riccati;

pub use error::{Error, Result};

/// Dynamic-size real matrix used throughout.
pub type Mat = nalgebra::DMatrix<f64>;
/// Dynamic-size real vector used throughout.
pub type Vector = nalgebra::DVector<f64>;
