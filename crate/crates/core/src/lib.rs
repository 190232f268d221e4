//! hp finite elements for the spectral fractional heat equation
//! `u' + L^s u = f` in one space dimension, via the Caffarelli–Silvestre
//! extension and discontinuous Galerkin time stepping.
//!
//! The elliptic building block is [`extension::solve_g_lambda`], which solves
//! `(lambda + L_h^s) u = f` for complex shifts by decoupling the extended
//! problem in `y`. Time stepping ([`timestepping`]) reduces each DG step to a
//! sequence of such solves.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod hp1d;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod timestepping;

pub use error::{Error, Result};
