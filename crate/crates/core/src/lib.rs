//! Spectral laboratory for the defocusing quintic wave equation
//! `u_tt - Δu + u⁵ = 0` with Neumann boundary conditions.
//!
//! The crate is organised bottom-up:
//!
//! * [`domains`]: model domains (interval, disk, radial ball), Neumann
//!   eigenbases, quadrature grids and light-cone geometry.
//! * [`spectral`]: fields in an eigenbasis, functional calculus of the
//!   Neumann Laplacian, spectral projectors and norms.
//! * [`solver`]: exact linear propagation, Strang-split nonlinear stepping,
//!   Duhamel solves and trajectory recording.
//! * [`diagnostics`]: energy, light-cone flux, Morawetz terms, L⁶
//!   concentration and boundary functionals evaluated on trajectories.
//! * [`scaling`]: projector operator norms, Strichartz ratios and the
//!   nonlinear product estimate, with power-law fits.

pub mod diagnostics;
pub mod domains;
mod error;
pub mod scaling;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
